"""QSVDD and QAE objectives.

A loss object names the Pauli terms it needs (``terms``) and maps a batch of
their expectation values to a scalar and to per-sample, per-term partial
derivatives.  Every gradient route differentiates the expectations and
chains through these partials.
"""
from __future__ import annotations

import numpy as np

from .sim import expectation_pauli


class LossError(ValueError):
    pass


def expectations(states: np.ndarray, terms) -> np.ndarray:
    """``(B, K)`` expectation values of ``terms`` = [(label, qubits), ...]."""
    states = np.atleast_2d(states)
    return np.stack([expectation_pauli(states, label, qs) for label, qs in terms], axis=-1)


def qsvdd_loss(features, center) -> float:
    """Mean squared distance of the feature rows to ``center``."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    center = np.asarray(center, dtype=float)
    if features.shape[0] == 0:
        raise LossError("empty batch")
    if features.shape[1:] != center.shape:
        raise LossError(f"feature dim {features.shape[1:]} != center dim {center.shape}")
    return float(np.mean(np.sum((features - center) ** 2, axis=1)))


def qae_loss(state: np.ndarray, trash_qubits) -> float:
    """Sum over trash qubits of 1 - <Z_j>; batches are averaged."""
    trash = tuple(trash_qubits)
    if not trash or len(set(trash)) != len(trash):
        raise LossError(f"bad trash qubit list {trash}")
    z = expectations(state, [("Z", (q,)) for q in trash])
    return float(np.mean(np.sum(1.0 - z, axis=1)))


class QsvddObjective:
    def __init__(self, terms, center):
        self.terms = list(terms)
        self.center = np.asarray(center, dtype=float)
        if self.center.shape != (len(self.terms),):
            raise LossError(f"center has shape {self.center.shape}, expected ({len(self.terms)},)")

    def value(self, expvals: np.ndarray) -> float:
        return qsvdd_loss(expvals, self.center)

    def partials(self, expvals: np.ndarray) -> np.ndarray:
        expvals = np.atleast_2d(expvals)
        return 2.0 * (expvals - self.center) / expvals.shape[0]


class QaeObjective:
    def __init__(self, trash_qubits):
        self.trash = tuple(trash_qubits)
        if not self.trash or len(set(self.trash)) != len(self.trash):
            raise LossError(f"bad trash qubit list {self.trash}")
        self.terms = [("Z", (q,)) for q in self.trash]

    def value(self, expvals: np.ndarray) -> float:
        expvals = np.atleast_2d(expvals)
        if expvals.shape[0] == 0:
            raise LossError("empty batch")
        return float(np.mean(np.sum(1.0 - expvals, axis=1)))

    def partials(self, expvals: np.ndarray) -> np.ndarray:
        expvals = np.atleast_2d(expvals)
        return np.full(expvals.shape, -1.0 / expvals.shape[0])
