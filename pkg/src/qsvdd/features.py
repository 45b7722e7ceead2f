"""Pauli-measurement projection of circuit outputs onto a low-dimensional feature space."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .ansatz import CircuitProgram
from .engine import CompiledProgram
from .losses import expectations

# {I,X,Y,Z}^2 in lexicographic order, identity removed
PAULI_ORDER = tuple("".join(p) for p in product("IXYZ", repeat=2))[1:]


@dataclass(frozen=True)
class ObservableSet:
    labels: tuple[str, ...]
    qubits: tuple[int, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("observable set is empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate observables in {self.labels}")
        for label in self.labels:
            if len(label) != len(self.qubits) or set(label) - set("IXYZ"):
                raise ValueError(f"malformed Pauli {label!r} for qubits {self.qubits}")
            if set(label) == {"I"}:
                raise ValueError("identity observable carries no information")

    @property
    def d_prime(self) -> int:
        return len(self.labels)

    @property
    def terms(self):
        return [(label, self.qubits) for label in self.labels]


def default_observable_set(d_prime: int, qubits=(0, 1)) -> ObservableSet:
    """First ``d_prime`` two-qubit Paulis of IX, IY, IZ, XI, ..., ZZ."""
    if not 1 <= d_prime <= len(PAULI_ORDER):
        raise ValueError(f"d_prime must be in 1..{len(PAULI_ORDER)}, got {d_prime}")
    return ObservableSet(PAULI_ORDER[:d_prime], tuple(qubits))


def feature_map(program: CircuitProgram, params, observables: ObservableSet, states,
                compiled: CompiledProgram | None = None, batch_size: int = 512) -> np.ndarray:
    """``(B, d')`` Pauli expectations on the output of ``program``."""
    compiled = compiled or CompiledProgram(program)
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    if states.shape[-1] != 1 << program.n_qubits:
        raise ValueError(
            f"states have {states.shape[-1]} amplitudes, program needs {1 << program.n_qubits}"
        )
    out = []
    for start in range(0, len(states), batch_size):
        final = compiled.forward(params, states[start:start + batch_size])
        out.append(expectations(final, observables.terms))
    return np.concatenate(out, axis=0)
