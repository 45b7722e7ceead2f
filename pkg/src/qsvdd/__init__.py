"""Quantum support vector data description on an exact statevector simulator."""

__version__ = "0.1.0"

from .ansatz import (CircuitProgram, QaeShape, QcnnShape, build_qae, build_qcnn, count_depth,
                     count_params, execute)
from .data import amplitude_encode, bilinear_resize, build_task_split, load_idx
from .detect import HypersphereModel, anomaly_score, fit_center_radius, roc_auc
from .features import ObservableSet, default_observable_set, feature_map
from .gradients import grad_adjoint, grad_finite_difference, grad_parameter_shift
from .losses import QaeObjective, QsvddObjective, qae_loss, qsvdd_loss
from .sim import (Gate, apply_gate, apply_su4_block, expectation_pauli, init_zero_state,
                  reduced_density)
from .train import AdamState, TrainConfig, adam_step, train_model

__all__ = [
    "AdamState", "CircuitProgram", "Gate", "HypersphereModel", "ObservableSet", "QaeObjective",
    "QaeShape", "QcnnShape", "QsvddObjective", "TrainConfig", "adam_step", "amplitude_encode",
    "anomaly_score", "apply_gate", "apply_su4_block", "bilinear_resize", "build_qae",
    "build_qcnn", "build_task_split", "count_depth", "count_params", "default_observable_set",
    "execute", "expectation_pauli", "feature_map", "fit_center_radius", "grad_adjoint",
    "grad_finite_difference", "grad_parameter_shift", "init_zero_state", "load_idx",
    "qae_loss", "qsvdd_loss", "reduced_density", "roc_auc", "train_model",
]
