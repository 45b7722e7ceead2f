"""Exact statevector simulation.

States are plain complex numpy arrays of length ``2**n``.  A leading batch
axis is allowed everywhere: an array of shape ``(B, 2**n)`` holds ``B``
independent states.  Qubit 0 is the most significant bit of the basis index,
so ``|10>`` on two qubits is index 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, sin

import numpy as np

MAX_QUBITS = 20

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

GATE_ARITY = {"RX": (1, 1), "RY": (1, 1), "RZ": (1, 1), "U3": (1, 3), "CNOT": (2, 0)}


class SimulationError(ValueError):
    """Bad qubit index, gate or state size."""


def rx(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
    )


ROTATIONS = {"RX": rx, "RY": ry, "RZ": rz}
GENERATORS = {"RX": X, "RY": Y, "RZ": Z}


def u3(theta: float, phi: float, delta: float) -> np.ndarray:
    """Rz(phi) Rx(-pi/2) Rz(theta) Rx(pi/2) Rz(delta)."""
    return rz(phi) @ rx(-np.pi / 2) @ rz(theta) @ rx(np.pi / 2) @ rz(delta)


@dataclass(frozen=True)
class Gate:
    """One gate of a circuit program.

    ``slots`` index into the parameter vector; U3 binds (theta, phi, delta)
    in that order.  ``moment`` and ``tag`` are layout metadata used for depth
    accounting and diagrams; they do not affect simulation.
    """

    kind: str
    qubits: tuple[int, ...]
    slots: tuple[int, ...] = ()
    moment: int = 0
    tag: str = ""

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        n_q, n_p = GATE_ARITY[self.kind]
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "slots", tuple(int(s) for s in self.slots))
        if len(self.qubits) != n_q:
            raise SimulationError(f"{self.kind} acts on {n_q} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise SimulationError(f"{self.kind} control and target coincide: {self.qubits}")
        if len(self.slots) != n_p:
            raise SimulationError(f"{self.kind} binds {n_p} parameter(s), got {len(self.slots)}")
        if any(q < 0 for q in self.qubits) or any(s < 0 for s in self.slots):
            raise SimulationError("negative qubit or slot index")

    def matrix(self, params) -> np.ndarray:
        if self.kind == "CNOT":
            return CNOT
        values = [float(params[s]) for s in self.slots]
        if self.kind == "U3":
            return u3(*values)
        return ROTATIONS[self.kind](values[0])


def n_qubits_of(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise SimulationError(f"state length {dim} is not a power of two")
    return n


def init_zero_state(n_qubits: int) -> np.ndarray:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SimulationError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    state = np.zeros(1 << n_qubits, dtype=complex)
    state[0] = 1.0
    return state


def basis_state(bits: str) -> np.ndarray:
    """``basis_state("10")`` is |10>."""
    state = np.zeros(1 << len(bits), dtype=complex)
    state[int(bits, 2)] = 1.0
    return state


def _check_qubits(qubits, n: int):
    for q in qubits:
        if not 0 <= q < n:
            raise SimulationError(f"qubit {q} out of range for {n} qubits")
    if len(set(qubits)) != len(qubits):
        raise SimulationError(f"repeated qubit in {tuple(qubits)}")


def apply_matrix(state: np.ndarray, matrix: np.ndarray, qubits) -> np.ndarray:
    """Apply a ``2**k x 2**k`` matrix to ``qubits`` (first listed = most significant)."""
    state = np.asarray(state)
    n = n_qubits_of(state)
    qubits = tuple(qubits)
    _check_qubits(qubits, n)
    k = len(qubits)
    lead = state.shape[:-1]
    psi = state.reshape(lead + (2,) * n)
    axes = [len(lead) + q for q in qubits]
    m = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(state.shape)


def apply_gate(state: np.ndarray, gate: Gate, params=()) -> np.ndarray:
    n = n_qubits_of(state)
    _check_qubits(gate.qubits, n)
    if gate.slots and max(gate.slots) >= len(params):
        raise SimulationError(f"{gate.kind} needs slot {max(gate.slots)}, only {len(params)} given")
    return apply_matrix(state, gate.matrix(params), gate.qubits)


def su4_gates(qubit_a: int, qubit_b: int, slots=tuple(range(15)), moment: int = 0, tag: str = ""):
    """Gate list of the 15-parameter two-qubit block.

    U3 pair, CNOT(b->a), RZ on a / RY on b, CNOT(a->b), RY on b, CNOT(b->a),
    U3 pair.  With all angles zero the three CNOTs compose to SWAP.
    """
    if len(slots) != 15:
        raise SimulationError(f"SU(4) block takes 15 parameters, got {len(slots)}")
    if qubit_a == qubit_b:
        raise SimulationError("SU(4) block needs two distinct qubits")
    a, b, p = qubit_a, qubit_b, tuple(slots)
    layout = [
        ("U3", (a,), p[0:3]),
        ("U3", (b,), p[3:6]),
        ("CNOT", (b, a), ()),
        ("RZ", (a,), p[6:7]),
        ("RY", (b,), p[7:8]),
        ("CNOT", (a, b), ()),
        ("RY", (b,), p[8:9]),
        ("CNOT", (b, a), ()),
        ("U3", (a,), p[9:12]),
        ("U3", (b,), p[12:15]),
    ]
    return [Gate(kind, qs, sl, moment, tag) for kind, qs, sl in layout]


def apply_su4_block(state: np.ndarray, qubit_a: int, qubit_b: int, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (15,):
        raise SimulationError(f"SU(4) block takes 15 parameters, got shape {params.shape}")
    for gate in su4_gates(qubit_a, qubit_b):
        state = apply_gate(state, gate, params)
    return state


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string such as ``"XZ"`` (first letter most significant)."""
    if not label or any(ch not in PAULI for ch in label):
        raise SimulationError(f"malformed Pauli string {label!r}")
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, PAULI[ch])
    return out


def apply_pauli(state: np.ndarray, label: str, qubits) -> np.ndarray:
    if not label or any(ch not in PAULI for ch in label):
        raise SimulationError(f"malformed Pauli string {label!r}")
    qubits = tuple(qubits)
    if len(label) != len(qubits):
        raise SimulationError(f"Pauli {label!r} needs {len(label)} target qubits, got {qubits}")
    _check_qubits(qubits, n_qubits_of(state))
    for ch, q in zip(label, qubits):
        if ch != "I":
            state = apply_matrix(state, PAULI[ch], (q,))
    return state


def expectation_pauli(state: np.ndarray, label: str, qubits):
    """<psi| P |psi> for Pauli string ``label`` on ``qubits``, identity elsewhere.

    Returns a float for a single state and an array for a batch.
    """
    state = np.asarray(state)
    moved = apply_pauli(state, label, qubits)
    value = np.einsum("...i,...i->...", state.conj(), moved).real
    return float(value) if np.ndim(value) == 0 else value


def reduced_density(state: np.ndarray, keep_qubits) -> np.ndarray:
    """Partial trace of a single pure state onto ``keep_qubits`` (in the given order)."""
    state = np.asarray(state)
    if state.ndim != 1:
        raise SimulationError("reduced_density takes a single state")
    n = n_qubits_of(state)
    keep = tuple(keep_qubits)
    if not keep:
        raise SimulationError("keep_qubits is empty")
    _check_qubits(keep, n)
    rest = [q for q in range(n) if q not in keep]
    psi = np.transpose(state.reshape((2,) * n), list(keep) + rest)
    m = psi.reshape(1 << len(keep), -1)
    return m @ m.conj().T


def state_norm(state: np.ndarray):
    return np.sqrt(np.sum(np.abs(state) ** 2, axis=-1))


@dataclass
class Statevector:
    """Thin convenience wrapper; all functions above also take bare arrays."""

    amplitudes: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1:
            raise SimulationError("Statevector holds exactly one state")
        self.n_qubits = n_qubits_of(self.amplitudes)
        if self.n_qubits > MAX_QUBITS:
            raise SimulationError(f"at most {MAX_QUBITS} qubits supported")

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        return cls(init_zero_state(n_qubits))

    def evolve(self, gate: Gate, params=()) -> "Statevector":
        return Statevector(apply_gate(self.amplitudes, gate, params))

    def expectation(self, label: str, qubits) -> float:
        return expectation_pauli(self.amplitudes, label, qubits)
