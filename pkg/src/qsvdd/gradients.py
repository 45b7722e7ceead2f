"""Gradient routes: parameter shift (reference), adjoint (fast), finite differences (oracle)."""
from __future__ import annotations

import numpy as np

from .ansatz import AnsatzError, CircuitProgram, execute
from .engine import CompiledProgram, expand
from .losses import expectations
from .sim import ROTATIONS, apply_matrix, apply_pauli

SHIFT = np.pi / 2


class GradientError(ValueError):
    pass


def loss_value(program: CircuitProgram, params, states, objective) -> float:
    out = execute(program, params, np.atleast_2d(states))
    return objective.value(expectations(out, objective.terms))


def _run_shifted(prims, params, states, occurrences):
    """Outputs with each listed occurrence shifted by +-pi/2.

    Returns shape ``(len(occurrences), 2, B, dim)``.
    """
    big = np.broadcast_to(states, (len(occurrences), 2) + states.shape).copy()
    where = {j: i for i, j in enumerate(occurrences)}
    for j, p in enumerate(prims):
        if p.slot is None:
            big = apply_matrix(big, p.matrix, p.qubits)
            continue
        angle = params[p.slot]
        i = where.get(j)
        if i is None:
            big = apply_matrix(big, ROTATIONS[p.axis](angle), p.qubits)
            continue
        plus = apply_matrix(big[i, 0], ROTATIONS[p.axis](angle + SHIFT), p.qubits)
        minus = apply_matrix(big[i, 1], ROTATIONS[p.axis](angle - SHIFT), p.qubits)
        big = apply_matrix(big, ROTATIONS[p.axis](angle), p.qubits)
        big[i, 0], big[i, 1] = plus, minus
    return big


def grad_parameter_shift(program: CircuitProgram, params, states, objective,
                         chunk: int = 64) -> np.ndarray:
    """Shift-rule gradient, summed over every gate occurrence bound to a slot.

    Each expectation value is differentiated with the +-pi/2 rule and chained
    through ``objective.partials``.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (program.slot_count,):
        raise AnsatzError(f"program has {program.slot_count} parameters, got {params.shape}")
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    prims = expand(program)
    for g in program.gates:
        if g.slots and g.kind not in ("RX", "RY", "RZ", "U3"):
            raise GradientError(f"slot bound to non-rotation gate {g.kind}")

    base = expectations(execute(program, params, states), objective.terms)
    weights = objective.partials(base)
    grad = np.zeros(program.slot_count)
    occ = [j for j, p in enumerate(prims) if p.slot is not None]
    for start in range(0, len(occ), chunk):
        part = occ[start:start + chunk]
        out = _run_shifted(prims, params, states, part)
        ev = expectations(out.reshape(-1, out.shape[-1]), objective.terms)
        ev = ev.reshape(out.shape[:3] + (len(objective.terms),))
        dv = 0.5 * (ev[:, 0] - ev[:, 1])
        contrib = np.einsum("obk,bk->o", dv, weights)
        for j, c in zip(part, contrib):
            grad[prims[j].slot] += c
    return grad


def numeric_gradient(fn, params, h: float = 1e-4) -> np.ndarray:
    """Central differences of a scalar function."""
    if h <= 0:
        raise GradientError("step h must be positive")
    params = np.asarray(params, dtype=float)
    grad = np.zeros_like(params)
    for k in range(params.size):
        e = np.zeros_like(params)
        e.flat[k] = h
        grad.flat[k] = (fn(params + e) - fn(params - e)) / (2 * h)
    return grad


def grad_finite_difference(program: CircuitProgram, params, states, objective,
                           h: float = 1e-4) -> np.ndarray:
    return numeric_gradient(lambda p: loss_value(program, p, states, objective), params, h)


def value_and_grad(compiled: CompiledProgram, params, states, objective):
    """Loss and adjoint-mode gradient in one forward and one backward sweep."""
    params = np.asarray(params, dtype=float)
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    parts = compiled.unitaries(params)
    out = states
    for seg, (u, _) in zip(compiled.segments, parts):
        out = apply_matrix(out, u, seg.window)
    ev = expectations(out, objective.terms)
    weights = objective.partials(ev)
    costate = np.zeros_like(out)
    for k, (label, qs) in enumerate(objective.terms):
        costate += weights[:, k, None] * apply_pauli(out, label, qs)
    grad = compiled.adjoint_gradient(params, out, costate, cached=parts)
    return objective.value(ev), grad


def grad_adjoint(program: CircuitProgram, params, states, objective) -> np.ndarray:
    return value_and_grad(CompiledProgram(program), params, states, objective)[1]
