import csv
import json
import statistics

import numpy as np
import pytest

from qsvdd.benchmark import (AGG_COLUMNS, RAW_COLUMNS, RunResult, aggregate, export_results,
                             export_sweep, run_benchmark)
from qsvdd.cli import main
from qsvdd.config import ConfigError, ExperimentConfig, apply_overrides, parse_config

# QSVDD MNIST reference cells (mean, std AUC in %) per normal class at d'=1 and d'=9
PUBLISHED = {
    1: [(79.55, 4.11), (85.89, 2.34), (68.12, 3.86), (70.46, 3.98), (68.36, 5.48),
        (62.90, 2.13), (67.57, 5.26), (75.36, 4.66), (68.88, 2.83), (69.74, 3.96)],
    9: [(93.73, 1.44), (96.99, 1.68), (79.71, 1.08), (86.13, 1.44), (79.59, 2.58),
        (69.2, 3.11), (79.11, 2.74), (85.45, 2.14), (80.83, 2.83), (80.6, 2.51)],
}
PUBLISHED_MEAN = {1: (71.68, 3.86), 9: (83.13, 2.16)}


def result(cls=0, seed=0, auc=0.5, d=9, method="qsvdd"):
    return RunResult("mnist", method, cls, d, seed, auc, 20, 1.234, 1.0, 0.5, 40)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_single_result_export(tmp_path):
    paths = export_results([result(auc=0.75)], tmp_path / "results.csv")
    assert [p.name for p in paths] == ["results.csv", "results_aggregate.csv"]
    raw = read_csv(paths[0])
    assert tuple(raw[0]) == RAW_COLUMNS
    assert raw[1] == ["mnist", "qsvdd", "0", "9", "0", "0.75", "20", ""]
    agg = read_csv(paths[1])
    assert tuple(agg[0]) == AGG_COLUMNS
    assert [r[2] for r in agg[1:]] == ["0", "mean"]
    assert agg[1][6] == "nan"


def test_wall_time_opt_in(tmp_path):
    export_results([result()], tmp_path / "r.csv", record_wall_time=True)
    assert read_csv(tmp_path / "r.csv")[1][-1] == "1.234"


def test_json_export(tmp_path):
    paths = export_results([result(seed=s, auc=0.1 * s) for s in range(3)], tmp_path / "r.json")
    rows = json.loads(paths[0].read_text())
    assert len(rows) == 3 and set(rows[0]) == set(RAW_COLUMNS)
    agg = json.loads(paths[1].read_text())
    assert agg[0]["std_auc"] == pytest.approx(0.1)


def test_aggregate_std_is_sample_std():
    aucs = [0.91, 0.93, 0.95, 0.88, 0.92]
    rows = aggregate([result(seed=s, auc=a) for s, a in enumerate(aucs)])
    assert rows[0]["n_seeds"] == 5
    assert rows[0]["mean_auc"] == pytest.approx(statistics.mean(aucs), abs=1e-15)
    assert rows[0]["std_auc"] == pytest.approx(statistics.stdev(aucs), abs=1e-15)


def test_reexport_is_byte_identical(tmp_path):
    results = [result(cls=c, seed=s, auc=0.5 + 0.01 * c + 0.001 * s) for c in range(3) for s in range(2)]
    export_results(results, tmp_path / "a.csv")
    export_results(list(reversed(results)), tmp_path / "b.csv")
    for name in ("a.csv", "a_aggregate.csv"):
        other = name.replace("a", "b", 1)
        assert (tmp_path / name).read_bytes() == (tmp_path / other).read_bytes()


@pytest.mark.parametrize("d", [1, 9])
def test_mean_row_reproduces_published_convention(d):
    z = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    z /= np.std(z, ddof=1)
    results = [result(cls=c, seed=s, auc=m + sd * z[s], d=d)
               for c, (m, sd) in enumerate(PUBLISHED[d]) for s in range(5)]
    mean_row = [r for r in aggregate(results) if r["normal_class"] == "mean"][0]
    assert round(mean_row["mean_auc"], 2) == PUBLISHED_MEAN[d][0]
    assert round(mean_row["std_auc"], 2) == PUBLISHED_MEAN[d][1]


def test_sweep_summary(tmp_path):
    results = [result(cls=c, d=d, auc=0.5 + 0.01 * d) for c in (0, 1) for d in (1, 9)]
    rows = read_csv(export_sweep(results, tmp_path / "sweep.csv"))
    assert [r[2] for r in rows[1:]] == ["1", "9"]
    assert float(rows[2][3]) == pytest.approx(0.59)


def test_minimal_config_defaults():
    cfg = parse_config(text="[data]\ndata_dir = /data\n[model]\nmethod = qae\n", env={})
    assert cfg.method == ("qae",) and cfg.data_dir == "/data"
    assert (cfg.d_prime, cfg.epochs, cfg.batch_size, cfg.lr) == (9, 30, 32, 0.01)
    assert cfg.seeds == (0, 1, 2, 3, 4) and cfg.normal_classes == tuple(range(10))
    assert cfg.sweep_d_primes == (1, 3, 6, 9, 12, 15)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="learning_rte") as info:
        parse_config(text="[train]\nlearning_rte = 0.1\n", env={})
    assert info.value.field == "train.learning_rte"
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(text="[trian]\nepochs = 1\n", env={})


def test_bad_values():
    with pytest.raises(ConfigError, match="epochs"):
        parse_config(text="[train]\nepochs = many\n", env={})
    with pytest.raises(ConfigError, match="scale"):
        ExperimentConfig(scale=1.5).validate(need_data=False)
    with pytest.raises(ConfigError, match="method"):
        ExperimentConfig(method=("dsvdd",)).validate(need_data=False)
    with pytest.raises(ConfigError, match="train_images"):
        ExperimentConfig(data_dir="/nonexistent").validate()


def test_config_round_trip():
    cfg = parse_config(text="[train]\nseeds = 0-2, 7\nlr = 0.005\n[eval]\nnormal_classes = 3\n"
                            "[data]\ntrain_scale = 0.5\n", env={})
    assert cfg.seeds == (0, 1, 2, 7) and cfg.normal_classes == (3,)
    assert parse_config(text=cfg.to_ini(), env={}) == cfg
    assert parse_config(text=ExperimentConfig().to_ini(), env={}) == ExperimentConfig()


def test_env_and_preset():
    cfg = parse_config(text="", env={"QSVDD_DATA_DIR": "/mnt/mnist"})
    assert cfg.data_dir == "/mnt/mnist"
    desk = apply_overrides(cfg, preset="desk", epochs=None, lr=0.02)
    assert (desk.scale, desk.seeds, desk.epochs, desk.lr) == (0.1, (0,), 20, 0.02)


def test_show_circuit(capsys):
    assert main(["show-circuit", "--ansatz", "qcnn", "--qubits", "8"]) == 0
    assert "parameters: 75" in capsys.readouterr().out
    assert main(["show-circuit", "--ansatz", "qae", "--qubits", "8", "--trash", "6",
                 "--layers", "9"]) == 0
    assert "parameters: 78, depth: 253" in capsys.readouterr().out
    assert main(["show-circuit", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["slot_count"] == 75


def test_bad_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["train", "--bad-flag"])
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_config_error_exits_1(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[train]\nlearning_rte = 0.1\n")
    assert main(["benchmark", "--config", str(ini)]) == 1
    assert "train.learning_rte" in capsys.readouterr().err


@pytest.fixture
def desk_args(mnist_dir, tmp_path):
    return ["--data-dir", str(mnist_dir), "--scale", "0.1", "--train-scale", "0.25",
            "--epochs", "2", "--output-dir", str(tmp_path / "out")]


def test_train_then_eval(desk_args, tmp_path, capsys):
    ckpt = tmp_path / "model.json"
    assert main(["-q", "train", *desk_args, "--d-prime", "3", "--checkpoint", str(ckpt)]) == 0
    out = capsys.readouterr().out
    assert "final loss" in out
    record = json.loads(ckpt.read_text())
    assert record["epoch"] == 2 and len(record["model"]["labels"]) == 3
    assert (tmp_path / "out" / "manifest.json").exists()
    assert main(["-q", "eval", *desk_args, "--checkpoint", str(ckpt)]) == 0
    auc = float(capsys.readouterr().out.split("auc:")[1])
    assert 0 <= auc <= 1


def test_benchmark_plumbing(mnist_dir):
    cfg = ExperimentConfig(data_dir=str(mnist_dir), scale=0.1, train_scale=0.1, epochs=1,
                           seeds=(3,), normal_classes=(1,))
    results = run_benchmark(cfg)
    assert len(results) == 1
    r = results[0]
    assert (r.method, r.normal_class, r.seed, r.d_prime) == ("qsvdd", 1, 3, 9)
    assert 0 <= r.auc <= 1
