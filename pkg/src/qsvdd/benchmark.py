"""End-to-end one-class benchmark: split, train, fit hypersphere, score, AUC, export."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ansatz import QaeShape, QcnnShape, build_qae, build_qcnn
from .config import ExperimentConfig
from .data import ImageSet, TaskSplit, build_task_split, load_idx
from .detect import HypersphereModel, roc_auc
from .features import default_observable_set
from .losses import QaeObjective, QsvddObjective
from .train import TrainConfig, train_model

log = logging.getLogger(__name__)

RAW_COLUMNS = ("dataset", "method", "normal_class", "d_prime", "seed", "auc", "epochs",
               "wall_seconds")
AGG_COLUMNS = ("dataset", "method", "normal_class", "d_prime", "n_seeds", "mean_auc", "std_auc")
SWEEP_COLUMNS = ("dataset", "method", "d_prime", "mean_auc", "std_auc")


@dataclass
class RunResult:
    dataset: str
    method: str
    normal_class: int
    d_prime: int
    seed: int
    auc: float
    epochs: int
    wall_seconds: float
    initial_loss: float
    final_loss: float
    n_train: int

    def key(self):
        return (self.dataset, self.method, self.normal_class, self.d_prime, self.seed)


def build_program(cfg: ExperimentConfig, method: str):
    if method == "qsvdd":
        return build_qcnn(QcnnShape(8, cfg.convs_per_block, cfg.final_conv, cfg.sharing))
    return build_qae(QaeShape(8, cfg.qae_trash, cfg.qae_layers))


def train_config(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    return TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr, seed=seed,
                       gradient=cfg.gradient)


def fit_method(cfg: ExperimentConfig, method: str, split: TaskSplit, seed: int, d_prime: int,
               checkpoint=None, resume=None):
    """Train one model and fit its hypersphere.  Returns ``(model, history)``."""
    program = build_program(cfg, method)
    observables = default_observable_set(d_prime, program.output_qubits)
    if method == "qsvdd":
        objective, mode = QsvddObjective(observables.terms, np.zeros(d_prime)), "zero"
    else:
        objective, mode = QaeObjective(range(cfg.qae_trash)), "mean"
    history, params = train_model(program, split.train, objective, train_config(cfg, seed),
                                  checkpoint=checkpoint, resume=resume)
    model = HypersphereModel.fit(program, params, observables, split.train, mode)
    return model, history


def evaluate(model: HypersphereModel, split: TaskSplit) -> float:
    return roc_auc(model.score(split.test_normal), model.score(split.test_abnormal))


_DATA_CACHE: dict = {}


def load_data(cfg: ExperimentConfig) -> tuple[ImageSet, ImageSet]:
    key = tuple(str(cfg.path(k)) for k in ("train_images", "train_labels", "test_images",
                                           "test_labels"))
    if key not in _DATA_CACHE:
        _DATA_CACHE[key] = (load_idx(key[0], key[1]), load_idx(key[2], key[3]))
    return _DATA_CACHE[key]


def run_cell(cfg: ExperimentConfig, method: str, normal_class: int, seed: int,
             d_prime: int) -> RunResult:
    train_set, test_set = load_data(cfg)
    split = build_task_split(train_set, test_set, normal_class, seed, cfg.scale, cfg.train_scale)
    t0 = time.perf_counter()
    model, history = fit_method(cfg, method, split, seed, d_prime)
    auc = evaluate(model, split)
    wall = time.perf_counter() - t0
    log.info("%s %s class %d d'=%d seed %d: AUC %.4f (%.1fs)", cfg.dataset, method,
             normal_class, d_prime, seed, auc, wall)
    return RunResult(cfg.dataset, method, normal_class, d_prime, seed, auc, cfg.epochs, wall,
                     history.initial_loss, history.epoch_loss[-1], len(split.train))


def _run_cell_args(args):
    return run_cell(*args)


def run_benchmark(cfg: ExperimentConfig, d_primes=None, output_dir=None) -> list[RunResult]:
    """Every (method, class, d', seed) cell of the grid, sorted by cell key.

    With ``output_dir`` set, the raw CSV is rewritten after each finished cell
    so a failure leaves the completed part on disk.
    """
    d_primes = tuple(d_primes or (cfg.d_prime,))
    cells = [(cfg, m, c, s, d) for m in cfg.method for c in cfg.normal_classes
             for d in d_primes for s in cfg.seeds]
    results: list[RunResult] = []

    def record(result):
        results.append(result)
        if output_dir is not None:
            export_results(sorted(results, key=RunResult.key), Path(output_dir) / "results.csv",
                           record_wall_time=cfg.record_wall_time, with_aggregate=False)

    if cfg.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for result in pool.map(_run_cell_args, cells):
                record(result)
    else:
        for cell in cells:
            record(run_cell(*cell))
    return sorted(results, key=RunResult.key)


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def aggregate(results) -> list[dict]:
    """Mean and sample std per cell, plus a per-(dataset, method, d') ``mean`` row.

    The ``mean`` row averages the per-class means and the per-class stds.
    """
    cells: dict = {}
    for r in results:
        cells.setdefault((r.dataset, r.method, r.normal_class, r.d_prime), []).append(r.auc)
    rows = []
    for (ds, m, c, d), aucs in sorted(cells.items()):
        aucs = np.asarray(aucs)
        std = float(np.std(aucs, ddof=1)) if len(aucs) > 1 else float("nan")
        rows.append(dict(dataset=ds, method=m, normal_class=c, d_prime=d, n_seeds=len(aucs),
                         mean_auc=float(aucs.mean()), std_auc=std))
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["dataset"], row["method"], row["d_prime"]), []).append(row)
    for (ds, m, d), members in sorted(groups.items()):
        rows.append(dict(dataset=ds, method=m, normal_class="mean", d_prime=d,
                         n_seeds=min(r["n_seeds"] for r in members),
                         mean_auc=float(np.mean([r["mean_auc"] for r in members])),
                         std_auc=float(np.mean([r["std_auc"] for r in members]))))
    return rows


def sweep_summary(results) -> list[dict]:
    return [
        dict(dataset=r["dataset"], method=r["method"], d_prime=r["d_prime"],
             mean_auc=r["mean_auc"], std_auc=r["std_auc"])
        for r in aggregate(results) if r["normal_class"] == "mean"
    ]


def _write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    path.write_text(buf.getvalue())


def _write_json(path: Path, rows) -> None:
    clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()}
             for r in rows]
    path.write_text(json.dumps(clean, indent=1, sort_keys=True) + "\n")


def companion(path, name: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_{name}{path.suffix}")


def export_results(results, path, fmt: str | None = None, record_wall_time: bool = False,
                   with_aggregate: bool = True) -> list[Path]:
    """Write raw results, sorted by cell, and (optionally) the aggregate companion file.

    ``wall_seconds`` is left blank unless ``record_wall_time``; timings vary
    between runs and would make otherwise identical exports differ.
    """
    results = sorted(results, key=RunResult.key)
    if not results:
        raise ValueError("no results to export")
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown export format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = []
    for r in results:
        row = {c: getattr(r, c) for c in RAW_COLUMNS}
        row["wall_seconds"] = round(r.wall_seconds, 3) if record_wall_time else ""
        raw.append(row)
    written = [path]
    if fmt == "csv":
        _write_csv(path, RAW_COLUMNS, raw)
    else:
        _write_json(path, raw)
    if with_aggregate:
        agg_path = companion(path, "aggregate")
        rows = aggregate(results)
        if fmt == "csv":
            _write_csv(agg_path, AGG_COLUMNS, rows)
        else:
            _write_json(agg_path, rows)
        written.append(agg_path)
    return written


def export_sweep(results, path) -> Path:
    path = Path(path)
    _write_csv(path, SWEEP_COLUMNS, sweep_summary(results))
    return path
