"""Adam and the mini-batch training loop."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ansatz import CircuitProgram
from .engine import CompiledProgram
from .gradients import grad_parameter_shift, value_and_grad
from .losses import expectations

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = "qsvdd.checkpoint/1"


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: np.ndarray | None = None
    second_moment: np.ndarray | None = None

    @classmethod
    def fresh(cls, size: int, **hyper) -> "AdamState":
        return cls(first_moment=np.zeros(size), second_moment=np.zeros(size), **hyper)


def adam_step(opt: AdamState, params, grads):
    """One bias-corrected Adam update.  Returns ``(new_state, new_params)``."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if grads.shape != params.shape:
        raise TrainingError(f"gradient shape {grads.shape} != params shape {params.shape}")
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise TrainingError(
            f"non-finite gradient at step {opt.step + 1}, slots {bad[:10].tolist()}: "
            f"{grads[bad[:10]].tolist()}"
        )
    m = opt.first_moment if opt.first_moment is not None else np.zeros_like(params)
    v = opt.second_moment if opt.second_moment is not None else np.zeros_like(params)
    t = opt.step + 1
    m = opt.beta1 * m + (1 - opt.beta1) * grads
    v = opt.beta2 * v + (1 - opt.beta2) * grads * grads
    m_hat = m / (1 - opt.beta1 ** t)
    v_hat = v / (1 - opt.beta2 ** t)
    new_params = params - opt.lr * m_hat / (np.sqrt(v_hat) + opt.epsilon)
    return replace(opt, step=t, first_moment=m, second_moment=v), new_params


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    gradient: str = "adjoint"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise TrainingError("epochs and batch_size must be >= 1 and lr > 0")
        if self.gradient not in ("adjoint", "parameter-shift"):
            raise TrainingError(f"unknown gradient method {self.gradient!r}")


@dataclass
class TrainHistory:
    initial_loss: float
    epoch_loss: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    final_params: np.ndarray | None = None
    init_seed: int = 0

    @property
    def epochs(self) -> int:
        return len(self.epoch_loss)


def init_params(slot_count: int, seed: int) -> np.ndarray:
    """Standard-normal initial angles."""
    return np.random.default_rng([seed, 1]).standard_normal(slot_count)


def _batch_gradient(compiled, program, params, batch, objective, method):
    if method == "adjoint":
        return value_and_grad(compiled, params, batch, objective)
    loss = objective.value(expectations(compiled.forward(params, batch), objective.terms))
    return loss, grad_parameter_shift(program, params, batch, objective)


def mean_loss(compiled: CompiledProgram, params, states, objective, batch_size: int = 256) -> float:
    total = 0.0
    for start in range(0, len(states), batch_size):
        chunk = states[start:start + batch_size]
        out = compiled.forward(params, chunk)
        total += objective.value(expectations(out, objective.terms)) * len(chunk)
    return total / len(states)


def train_model(program: CircuitProgram, train_states, objective, config: TrainConfig = TrainConfig(),
                checkpoint: str | Path | None = None, resume: dict | None = None):
    """Train ``program`` on ``train_states``; returns ``(history, params)``.

    Fully deterministic for a given ``config.seed``.  When ``checkpoint`` is
    set, a checkpoint is written after every epoch; ``resume`` is a loaded
    checkpoint to continue from.
    """
    states = np.asarray(train_states, dtype=complex)
    if states.ndim != 2 or len(states) == 0:
        raise TrainingError("empty training set")
    compiled = CompiledProgram(program)
    hyper = dict(lr=config.lr, beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)

    if resume is not None:
        if resume["program_hash"] != program.schema_hash():
            raise TrainingError("checkpoint was written for a different circuit")
        params = np.asarray(resume["params"], dtype=float)
        opt = AdamState(step=resume["optimizer"]["step"],
                        first_moment=np.asarray(resume["optimizer"]["first_moment"]),
                        second_moment=np.asarray(resume["optimizer"]["second_moment"]), **hyper)
        history = TrainHistory(resume["history"]["initial_loss"],
                               list(resume["history"]["epoch_loss"]),
                               list(resume["history"]["epoch_seconds"]), init_seed=config.seed)
    else:
        params = init_params(program.slot_count, config.seed)
        opt = AdamState.fresh(program.slot_count, **hyper)
        history = TrainHistory(mean_loss(compiled, params, states, objective), init_seed=config.seed)
        log.info("initial loss %.6f", history.initial_loss)

    for epoch in range(history.epochs, config.epochs):
        # one independent stream per epoch keeps resumed runs identical to straight ones
        order = np.random.default_rng([config.seed, 2, epoch]).permutation(len(states))
        t0 = time.perf_counter()
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = states[order[start:start + config.batch_size]]
            loss, grad = _batch_gradient(compiled, program, params, batch, objective, config.gradient)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}")
            opt, params = adam_step(opt, params, grad)
            total += loss * len(batch)
        history.epoch_loss.append(total / len(states))
        history.epoch_seconds.append(time.perf_counter() - t0)
        log.info("epoch %d/%d loss %.6f (%.1fs)", epoch + 1, config.epochs,
                 history.epoch_loss[-1], history.epoch_seconds[-1])
        if checkpoint is not None:
            save_checkpoint(checkpoint, program, params, opt, history)

    history.final_params = params.copy()
    return history, params


def save_checkpoint(path, program: CircuitProgram, params, opt: AdamState, history: TrainHistory,
                    extra: dict | None = None) -> None:
    record = {
        "version": CHECKPOINT_VERSION,
        "program_hash": program.schema_hash(),
        "program": program.to_dict(),
        "epoch": history.epochs,
        "params": np.asarray(params).tolist(),
        "optimizer": {
            "step": opt.step,
            "lr": opt.lr,
            "beta1": opt.beta1,
            "beta2": opt.beta2,
            "epsilon": opt.epsilon,
            "first_moment": np.asarray(opt.first_moment).tolist(),
            "second_moment": np.asarray(opt.second_moment).tolist(),
        },
        "history": {
            "initial_loss": history.initial_loss,
            "epoch_loss": history.epoch_loss,
            "epoch_seconds": history.epoch_seconds,
        },
    }
    if extra:
        record.update(extra)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(record, indent=1))
    tmp.replace(path)


def load_checkpoint(path) -> dict:
    record = json.loads(Path(path).read_text())
    if record.get("version") != CHECKPOINT_VERSION:
        raise TrainingError(f"unsupported checkpoint version {record.get('version')!r}")
    return record
