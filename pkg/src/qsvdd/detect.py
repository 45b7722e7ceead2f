"""Hypersphere fitting, anomaly scores and ROC-AUC."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ansatz import CircuitProgram
from .features import ObservableSet, feature_map


class Decision(Enum):
    NORMAL = "normal"
    BOUNDARY = "boundary"
    ANOMALY = "anomaly"


def fit_center_radius(features, mode: str = "zero"):
    """Center and radius (in squared-distance units) enclosing all training features.

    ``zero`` fixes the center at the origin; ``mean`` uses the feature mean.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[0] == 0:
        raise ValueError("no training features")
    if mode == "zero":
        center = np.zeros(features.shape[1])
    elif mode == "mean":
        center = features.mean(axis=0)
    else:
        raise ValueError(f"unknown center mode {mode!r}")
    radius = float(np.max(np.sum((features - center) ** 2, axis=1)))
    return center, radius


def squared_distance(features, center) -> np.ndarray:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    return np.sum((features - np.asarray(center)) ** 2, axis=1)


@dataclass
class HypersphereModel:
    program: CircuitProgram
    params: np.ndarray
    observables: ObservableSet
    center: np.ndarray
    radius: float
    threshold: float = 0.0

    @classmethod
    def fit(cls, program, params, observables, train_states, mode: str = "zero"):
        feats = feature_map(program, params, observables, train_states)
        center, radius = fit_center_radius(feats, mode)
        return cls(program, np.asarray(params, dtype=float), observables, center, radius)

    def features(self, states) -> np.ndarray:
        return feature_map(self.program, self.params, self.observables, states)

    def score(self, states) -> np.ndarray:
        """``||phi - c||^2 - r`` per state."""
        return squared_distance(self.features(states), self.center) - self.radius

    def classify(self, states) -> list[Decision]:
        return [decide(s, self.threshold) for s in self.score(states)]


def anomaly_score(model: HypersphereModel, states) -> np.ndarray:
    return model.score(states)


def decide(score: float, threshold: float = 0.0) -> Decision:
    if score > threshold:
        return Decision.ANOMALY
    if score < threshold:
        return Decision.NORMAL
    return Decision.BOUNDARY


def roc_auc(scores_normal, scores_abnormal) -> float:
    """P(abnormal score > normal score), ties counted one half."""
    normal = np.sort(np.asarray(scores_normal, dtype=float).ravel())
    abnormal = np.asarray(scores_abnormal, dtype=float).ravel()
    if normal.size == 0 or abnormal.size == 0:
        raise ValueError("roc_auc needs at least one normal and one abnormal score")
    below = np.searchsorted(normal, abnormal, side="left")
    not_above = np.searchsorted(normal, abnormal, side="right")
    wins = below.sum() + 0.5 * (not_above - below).sum()
    return float(wins / (normal.size * abnormal.size))
