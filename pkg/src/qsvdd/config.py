"""Experiment configuration: strict INI files with one section per stage.

Example::

    [data]
    data_dir = /data/mnist
    scale = 0.1

    [model]
    method = qsvdd

Unknown sections or keys are errors.  ``QSVDD_DATA_DIR`` in the environment
overrides ``data.data_dir``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

SCHEMA_VERSION = "qsvdd.config/1"
METHODS = ("qsvdd", "qae")
SWEEP_D_PRIMES = (1, 3, 6, 9, 12, 15)


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    # [data]
    dataset: str = "mnist"
    data_dir: str = ""
    train_images: str = "train-images-idx3-ubyte.gz"
    train_labels: str = "train-labels-idx1-ubyte.gz"
    test_images: str = "t10k-images-idx3-ubyte.gz"
    test_labels: str = "t10k-labels-idx1-ubyte.gz"
    scale: float = 1.0
    train_scale: float | None = None
    # [model]
    method: tuple[str, ...] = ("qsvdd",)
    d_prime: int = 9
    convs_per_block: int = 2
    final_conv: bool = True
    sharing: bool = True
    qae_trash: int = 6
    qae_layers: int = 9
    # [train]
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.01
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    gradient: str = "adjoint"
    # [eval]
    normal_classes: tuple[int, ...] = tuple(range(10))
    sweep_d_primes: tuple[int, ...] = SWEEP_D_PRIMES
    # [output]
    output_dir: str = "runs"
    jobs: int = 1
    record_wall_time: bool = False

    def path(self, key: str) -> Path:
        """Resolved dataset file; a missing ``.gz`` suffix is tolerated either way."""
        p = Path(getattr(self, key))
        if not p.is_absolute() and self.data_dir:
            p = Path(self.data_dir) / p
        if not p.exists():
            alt = p.with_suffix("") if p.suffix == ".gz" else p.with_name(p.name + ".gz")
            if alt.exists():
                return alt
        return p

    def validate(self, need_data: bool = True) -> "ExperimentConfig":
        for name in ("epochs", "batch_size", "jobs", "d_prime", "convs_per_block",
                     "qae_trash", "qae_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be positive")
        if self.lr <= 0:
            raise ConfigError("lr", "must be positive")
        if not 0 < self.scale <= 1:
            raise ConfigError("scale", "must be in (0, 1]")
        if self.train_scale is not None and not 0 < self.train_scale <= 1:
            raise ConfigError("train_scale", "must be in (0, 1]")
        if not self.method or set(self.method) - set(METHODS):
            raise ConfigError("method", f"choose from {', '.join(METHODS)}")
        if not 1 <= self.d_prime <= 15:
            raise ConfigError("d_prime", "must be in 1..15")
        if any(not 1 <= d <= 15 for d in self.sweep_d_primes) or not self.sweep_d_primes:
            raise ConfigError("sweep_d_primes", "entries must be in 1..15")
        if not self.normal_classes or any(not 0 <= c <= 9 for c in self.normal_classes):
            raise ConfigError("normal_classes", "entries must be in 0..9")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed required")
        if not self.qae_trash < 8:
            raise ConfigError("qae_trash", "must be below the 8 input qubits")
        if self.gradient not in ("adjoint", "parameter-shift"):
            raise ConfigError("gradient", "choose adjoint or parameter-shift")
        if need_data:
            for key in ("train_images", "train_labels", "test_images", "test_labels"):
                if not self.path(key).exists():
                    raise ConfigError(key, f"file not found: {self.path(key)}")
        return self

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for section, keys in SECTIONS.items():
            parser[section] = {k: _format(getattr(self, k)) for k in keys}
        lines = [f"# {SCHEMA_VERSION}\n"]
        for section in parser.sections():
            lines.append(f"[{section}]\n")
            for k, v in parser[section].items():
                lines.append(f"{k} = {v}\n")
            lines.append("\n")
        return "".join(lines)


SECTIONS = {
    "data": ("dataset", "data_dir", "train_images", "train_labels", "test_images", "test_labels",
             "scale", "train_scale"),
    "model": ("method", "d_prime", "convs_per_block", "final_conv", "sharing", "qae_trash",
              "qae_layers"),
    "train": ("epochs", "batch_size", "lr", "seeds", "gradient"),
    "eval": ("normal_classes", "sweep_d_primes"),
    "output": ("output_dir", "jobs", "record_wall_time"),
}

_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}

PRESETS = {"desk": {"scale": 0.1, "seeds": (0,), "epochs": 20}}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


def _int_list(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def coerce(key: str, text: str):
    kind = _TYPES[key]
    text = text.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float | None":
            return float(text) if text else None
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(text)
            return low in ("true", "yes", "1", "on")
        if kind == "tuple[int, ...]":
            return _int_list(text)
        if kind == "tuple[str, ...]":
            return tuple(p.strip().lower() for p in text.split(",") if p.strip())
        return text
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind}") from None


def parse_config(path=None, text: str | None = None, env=None) -> ExperimentConfig:
    """Read an INI config; missing keys take the dataclass defaults."""
    env = os.environ if env is None else env
    parser = configparser.ConfigParser(interpolation=None)
    if text is None and path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError("config", f"file not found: {p}")
        text = p.read_text()
    try:
        parser.read_string(text or "")
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(section, "unknown section")
        for key, raw in parser[section].items():
            if key not in SECTIONS[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            values[key] = coerce(key, raw)
    cfg = ExperimentConfig(**values)
    if env.get("QSVDD_DATA_DIR"):
        cfg = replace(cfg, data_dir=env["QSVDD_DATA_DIR"])
    return cfg


def apply_overrides(cfg: ExperimentConfig, preset: str | None = None, **overrides) -> ExperimentConfig:
    if preset:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}")
        cfg = replace(cfg, **PRESETS[preset])
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg
