"""Command-line entry point: ``qsvdd {train,eval,benchmark,sweep-latent,show-circuit}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import AnsatzError, CircuitProgram, QaeShape, QcnnShape, build_qae, build_qcnn, diagram
from .benchmark import (evaluate, export_results, export_sweep, fit_method, load_data,
                        run_benchmark)
from .config import SCHEMA_VERSION, ConfigError, apply_overrides, coerce, parse_config
from .data import DataFormatError, build_task_split
from .detect import HypersphereModel
from .features import ObservableSet
from .train import AdamState, TrainingError, load_checkpoint, save_checkpoint

log = logging.getLogger("qsvdd")


def _add_run_options(p: argparse.ArgumentParser, single: bool) -> None:
    p.add_argument("--config", help="INI experiment config (defaults documented in README)")
    p.add_argument("--preset", choices=["desk"], help="desk: scale 0.1, 1 seed, 20 epochs")
    p.add_argument("--data-dir", help="directory holding the IDX files (env: QSVDD_DATA_DIR)")
    p.add_argument("--scale", type=float, help="fraction of the full-size split, in (0, 1]")
    p.add_argument("--train-scale", type=float, help="training-pool fraction (default: --scale)")
    p.add_argument("--epochs", type=int, help="training epochs (default 30)")
    p.add_argument("--batch-size", type=int, help="mini-batch size (default 32)")
    p.add_argument("--lr", type=float, help="Adam learning rate (default 0.01)")
    p.add_argument("--output-dir", help="where results are written (default runs)")
    if single:
        p.add_argument("--method", choices=["qsvdd", "qae"], help="default qsvdd")
        p.add_argument("--class", dest="normal_class", type=int, default=0, help="normal class")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--d-prime", type=int, help="latent dimension (default 9)")
    else:
        p.add_argument("--method", help="comma-separated: qsvdd, qae")
        p.add_argument("--classes", help="normal classes, e.g. 0-9 or 0,3")
        p.add_argument("--seeds", help="seeds, e.g. 0-4")
        p.add_argument("--d-prime", type=int, help="latent dimension (default 9)")
        p.add_argument("--jobs", type=int, help="parallel benchmark cells (default 1)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsvdd", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one (method, class, seed) and write a checkpoint")
    _add_run_options(p, single=True)
    p.add_argument("--checkpoint", help="checkpoint path (default under --output-dir)")
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint")

    p = sub.add_parser("eval", help="score the test split of a checkpoint and print the AUC")
    _add_run_options(p, single=False)
    p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("benchmark", help="run the (method, class, seed) grid and export results")
    _add_run_options(p, single=False)

    p = sub.add_parser("sweep-latent", help="benchmark over latent dimensions 1,3,6,9,12,15")
    _add_run_options(p, single=False)

    p = sub.add_parser("show-circuit", help="print a circuit diagram with parameter/depth counts")
    p.add_argument("--ansatz", choices=["qcnn", "qae"], default="qcnn")
    p.add_argument("--qubits", type=int, default=8)
    p.add_argument("--trash", type=int, default=6, help="QAE trash qubits")
    p.add_argument("--layers", type=int, default=9, help="QAE layers")
    p.add_argument("--convs-per-block", type=int, default=2)
    p.add_argument("--no-final-conv", action="store_true")
    p.add_argument("--no-sharing", action="store_true")
    p.add_argument("--json", action="store_true", help="print the serialized program instead")
    return parser


def _int_list(text):
    return None if text is None else coerce("seeds", text)


def resolve_config(args, single: bool):
    cfg = parse_config(args.config)
    overrides = dict(
        data_dir=args.data_dir, scale=args.scale, train_scale=args.train_scale,
        epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, output_dir=args.output_dir,
        d_prime=args.d_prime,
    )
    if single:
        overrides["method"] = (args.method,) if args.method else None
    else:
        overrides["method"] = (tuple(m.strip() for m in args.method.split(",") if m.strip())
                               if args.method else None)
        overrides["normal_classes"] = _int_list(args.classes)
        overrides["seeds"] = _int_list(args.seeds)
        overrides["jobs"] = args.jobs
    return apply_overrides(cfg, preset=args.preset, **overrides).validate()


def write_provenance(cfg, out: Path, command: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.to_ini())
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "seeds": list(cfg.seeds),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def cmd_train(args) -> int:
    cfg = resolve_config(args, single=True)
    cfg = replace(cfg, seeds=(args.seed,))
    method = cfg.method[0]
    out = Path(cfg.output_dir)
    write_provenance(cfg, out, "train")
    ckpt = Path(args.checkpoint or out / f"{method}_class{args.normal_class}_seed{args.seed}"
                                          f"_d{cfg.d_prime}.json")
    resume = load_checkpoint(ckpt) if args.resume else None
    train_set, test_set = load_data(cfg)
    split = build_task_split(train_set, test_set, args.normal_class, args.seed, cfg.scale,
                             cfg.train_scale)
    model, history = fit_method(cfg, method, split, args.seed, cfg.d_prime,
                                checkpoint=ckpt, resume=resume)
    final = load_checkpoint(ckpt)
    opt = final["optimizer"]
    adam = AdamState(opt["lr"], opt["beta1"], opt["beta2"], opt["epsilon"], opt["step"],
                     np.asarray(opt["first_moment"]), np.asarray(opt["second_moment"]))
    save_checkpoint(ckpt, model.program, model.params, adam, history, extra={
        "task": {"method": method, "normal_class": args.normal_class, "seed": args.seed,
                 "scale": cfg.scale, "train_scale": cfg.train_scale, "dataset": cfg.dataset},
        "model": {"labels": list(model.observables.labels),
                  "qubits": list(model.observables.qubits),
                  "center": model.center.tolist(), "radius": model.radius},
    })
    print(f"initial loss: {history.initial_loss:.6f}")
    print(f"final loss: {history.epoch_loss[-1]:.6f}")
    print(f"checkpoint: {ckpt}")
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args, single=False)
    record = load_checkpoint(args.checkpoint)
    if "model" not in record:
        raise TrainingError(f"{args.checkpoint} has no fitted model; finish training first")
    program = CircuitProgram.from_dict(record["program"])
    if program.schema_hash() != record["program_hash"]:
        raise TrainingError("checkpoint circuit does not match its recorded hash")
    task, m = record["task"], record["model"]
    model = HypersphereModel(program, np.asarray(record["params"]),
                             ObservableSet(tuple(m["labels"]), tuple(m["qubits"])),
                             np.asarray(m["center"]), m["radius"])
    train_set, test_set = load_data(cfg)
    split = build_task_split(train_set, test_set, task["normal_class"], task["seed"],
                             task["scale"], task["train_scale"])
    print(f"auc: {evaluate(model, split):.6f}")
    return 0


def cmd_benchmark(args, sweep: bool = False) -> int:
    cfg = resolve_config(args, single=False)
    out = Path(cfg.output_dir)
    write_provenance(cfg, out, "sweep-latent" if sweep else "benchmark")
    d_primes = cfg.sweep_d_primes if sweep else (cfg.d_prime,)
    results = run_benchmark(cfg, d_primes=d_primes, output_dir=out)
    paths = export_results(results, out / f"results.{args.format}",
                           record_wall_time=cfg.record_wall_time)
    if sweep:
        paths.append(export_sweep(results, out / "sweep_summary.csv"))
    for p in paths:
        log.info("wrote %s", p)
    return 0


def cmd_show_circuit(args) -> int:
    if args.ansatz == "qcnn":
        program = build_qcnn(QcnnShape(args.qubits, args.convs_per_block,
                                       not args.no_final_conv, not args.no_sharing))
    else:
        program = build_qae(QaeShape(args.qubits, args.trash, args.layers))
    print(program.to_json() if args.json else diagram(program))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    handlers = {
        "train": cmd_train,
        "eval": cmd_eval,
        "benchmark": cmd_benchmark,
        "sweep-latent": lambda a: cmd_benchmark(a, sweep=True),
        "show-circuit": cmd_show_circuit,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"qsvdd: config error: {exc}", file=sys.stderr)
        return 1
    except (AnsatzError, DataFormatError, TrainingError, ValueError, OSError) as exc:
        print(f"qsvdd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
