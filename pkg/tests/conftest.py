import importlib.util
import os
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
IDX_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
             "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


def _has_idx(directory: Path) -> bool:
    return all((directory / f).exists() or (directory / f"{f}.gz").exists() for f in IDX_FILES)


def full_mnist_dir():
    env = os.environ.get("QSVDD_DATA_DIR")
    if env and _has_idx(Path(env)):
        from qsvdd.data import read_idx, LABELS_MAGIC

        path = Path(env) / IDX_FILES[1]
        path = path if path.exists() else path.with_name(path.name + ".gz")
        if len(read_idx(path, LABELS_MAGIC)) == 60000:
            return Path(env)
    return None


@pytest.fixture(scope="session")
def mnist_dir(tmp_path_factory):
    """Real MNIST IDX files: QSVDD_DATA_DIR if set, else the mlxtend 5k sample."""
    env = os.environ.get("QSVDD_DATA_DIR")
    if env and _has_idx(Path(env)):
        return Path(env)
    if importlib.util.find_spec("mlxtend") is None:
        pytest.skip("no MNIST: set QSVDD_DATA_DIR or install mlxtend for the 5k sample")
    spec = importlib.util.spec_from_file_location("make_mnist_subset",
                                                  ROOT / "scripts" / "make_mnist_subset.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module.write_subset(tmp_path_factory.mktemp("mnist"))


@pytest.fixture(scope="session")
def mnist(mnist_dir):
    from qsvdd.config import ExperimentConfig
    from qsvdd.benchmark import load_data

    return load_data(ExperimentConfig(data_dir=str(mnist_dir)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n_qubits, batch=None):
    shape = (1 << n_qubits,) if batch is None else (batch, 1 << n_qubits)
    psi = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return psi / np.linalg.norm(psi, axis=-1, keepdims=True)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(request):
    """Record and print one PASS/FAIL/SKIP line, then assert on it."""
    def report(number: int, ok, detail: str):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{status} criterion {number}: {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        if ok is None:
            pytest.skip(detail)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
