"""Fused batched execution and adjoint differentiation of circuit programs.

Consecutive gates touching at most two qubits are fused into one 4x4 (or 2x2)
segment unitary.  Every parameterized gate is expanded into rotations
``exp(-i angle G / 2)`` with a Pauli generator ``G`` (U3 into its three RZ
rotations around two fixed RX(+-pi/2)), so each trainable angle has a simple
closed-form derivative inside its segment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzError, CircuitProgram
from .sim import CNOT, GENERATORS, I2, ROTATIONS, apply_matrix, rx

_HALF_PI = np.pi / 2
_RX_PLUS = rx(_HALF_PI)
_RX_MINUS = rx(-_HALF_PI)


@dataclass(frozen=True)
class Primitive:
    """A rotation bound to a slot, or a fixed matrix (slot is None)."""

    axis: str | None
    qubits: tuple[int, ...]
    slot: int | None
    matrix: np.ndarray | None = None


def expand(program: CircuitProgram) -> list[Primitive]:
    prims: list[Primitive] = []
    for g in program.gates:
        if g.kind == "CNOT":
            prims.append(Primitive(None, g.qubits, None, CNOT))
        elif g.kind == "U3":
            theta, phi, delta = g.slots
            q = g.qubits
            prims += [
                Primitive("RZ", q, delta),
                Primitive(None, q, None, _RX_PLUS),
                Primitive("RZ", q, theta),
                Primitive(None, q, None, _RX_MINUS),
                Primitive("RZ", q, phi),
            ]
        else:
            prims.append(Primitive(g.kind, g.qubits, g.slots[0]))
    return prims


def _embed(matrix: np.ndarray, qubits: tuple[int, ...], window: tuple[int, ...]) -> np.ndarray:
    """Lift a 1- or 2-qubit matrix to the segment window."""
    if len(window) == 1:
        return matrix
    if len(qubits) == 1:
        return np.kron(matrix, I2) if qubits[0] == window[0] else np.kron(I2, matrix)
    if qubits == window:
        return matrix
    # reversed qubit order: conjugate by SWAP
    swap = np.eye(4)[[0, 2, 1, 3]]
    return swap @ matrix @ swap


@dataclass
class Segment:
    window: tuple[int, ...]
    prims: list[Primitive]

    def unitary_and_derivatives(self, params: np.ndarray):
        """Segment unitary plus ``[(slot, dU/dangle), ...]`` for each rotation."""
        mats = []
        for p in self.prims:
            if p.slot is None:
                m = p.matrix
            else:
                m = ROTATIONS[p.axis](params[p.slot])
            mats.append(_embed(m, p.qubits, self.window))
        dim = mats[0].shape[0] if mats else 1
        prefix = [np.eye(dim, dtype=complex)]
        for m in mats:
            prefix.append(m @ prefix[-1])
        derivs = []
        suffix = np.eye(dim, dtype=complex)
        for k in range(len(mats) - 1, -1, -1):
            p = self.prims[k]
            if p.slot is not None:
                gen = _embed(GENERATORS[p.axis], p.qubits, self.window)
                # d/dt exp(-i t G/2) = -i/2 G exp(-i t G/2)
                derivs.append((p.slot, suffix @ (-0.5j * gen) @ mats[k] @ prefix[k]))
            suffix = suffix @ mats[k]
        derivs.reverse()
        return prefix[-1], derivs


class CompiledProgram:
    """Segment-fused form of a :class:`CircuitProgram` for fast batched runs."""

    def __init__(self, program: CircuitProgram):
        self.program = program
        self.segments: list[Segment] = []
        current: list[Primitive] = []
        window: tuple[int, ...] = ()
        for p in expand(program):
            merged = tuple(dict.fromkeys(window + p.qubits))
            if current and len(merged) <= 2:
                current.append(p)
                window = merged
            else:
                if current:
                    self.segments.append(Segment(window, current))
                current, window = [p], p.qubits
        if current:
            self.segments.append(Segment(window, current))

    def _check(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.program.slot_count,):
            raise AnsatzError(
                f"program has {self.program.slot_count} parameters, got shape {params.shape}"
            )
        return params

    def forward(self, params, states: np.ndarray) -> np.ndarray:
        params = self._check(params)
        out = np.asarray(states, dtype=complex)
        for seg in self.segments:
            u, _ = seg.unitary_and_derivatives(params)
            out = apply_matrix(out, u, seg.window)
        return out

    def unitaries(self, params):
        params = self._check(params)
        return [seg.unitary_and_derivatives(params) for seg in self.segments]

    def adjoint_gradient(self, params, final_states: np.ndarray, costates: np.ndarray,
                         cached=None) -> np.ndarray:
        """Gradient of ``sum_b 2 Re <costate_b | d final_state_b / d params>``.

        ``final_states`` are the program outputs; ``costates`` are
        ``H_b |final_state_b>`` for the per-sample effective observable ``H_b``.
        """
        parts = cached if cached is not None else self.unitaries(params)
        grad = np.zeros(self.program.slot_count)
        phi = np.asarray(final_states, dtype=complex)
        lam = np.asarray(costates, dtype=complex)
        n = self.program.n_qubits
        for seg, (u, derivs) in zip(reversed(self.segments), reversed(parts)):
            udag = u.conj().T
            phi = apply_matrix(phi, udag, seg.window)
            if derivs:
                k = len(seg.window)
                order = [0] + [1 + q for q in seg.window]
                order += [1 + q for q in range(n) if q not in seg.window]
                split = (-1, 1 << k, 1 << (n - k))
                ph = phi.reshape((-1,) + (2,) * n).transpose(order).reshape(split)
                la = lam.reshape((-1,) + (2,) * n).transpose(order).reshape(split)
                # transfer[i, j] = sum_b sum_rest conj(lam[b, i, rest]) phi[b, j, rest]
                transfer = np.einsum("bir,bjr->ij", la.conj(), ph)
                for slot, du in derivs:
                    grad[slot] += 2.0 * np.sum(du * transfer).real
            lam = apply_matrix(lam, udag, seg.window)
        return grad
