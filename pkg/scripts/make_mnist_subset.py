"""Write the 5000-image MNIST sample shipped with mlxtend as IDX files.

Per class, the first 400 images go to the training files and the last 100 to
the test files, using the standard MNIST file names so the result can be
pointed to with QSVDD_DATA_DIR.

    python scripts/make_mnist_subset.py data/mnist-subset
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from qsvdd.data import write_idx

TRAIN_PER_CLASS = 400


def write_subset(out_dir) -> Path:
    from mlxtend.data import mnist_data

    X, y = mnist_data()
    if not np.array_equal(X, np.round(X)):
        raise RuntimeError("unexpected non-integer pixels in mlxtend sample")
    images = X.reshape(-1, 28, 28).astype(np.uint8)
    train_idx, test_idx = [], []
    for c in range(10):
        idx = np.flatnonzero(y == c)
        train_idx.append(idx[:TRAIN_PER_CLASS])
        test_idx.append(idx[TRAIN_PER_CLASS:])
    train_idx = np.concatenate(train_idx)
    test_idx = np.concatenate(test_idx)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "train-images-idx3-ubyte.gz", images[train_idx])
    write_idx(out / "train-labels-idx1-ubyte.gz", y[train_idx])
    write_idx(out / "t10k-images-idx3-ubyte.gz", images[test_idx])
    write_idx(out / "t10k-labels-idx1-ubyte.gz", y[test_idx])
    return out


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    print(write_subset(sys.argv[1]))
