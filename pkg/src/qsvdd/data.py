"""IDX loading, bilinear downscaling, amplitude encoding and one-class splits."""
from __future__ import annotations

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

TEST_NORMAL = 1000
TEST_PER_ABNORMAL_CLASS = 100


class DataFormatError(ValueError):
    pass


class EncodingError(ValueError):
    pass


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_idx(path, expected_magic: int) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise DataFormatError(f"{path}: truncated header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise DataFormatError(
            f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataFormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = int(np.prod(dims))
    if len(raw) - header < count:
        raise DataFormatError(f"{path}: truncated, {len(raw) - header} of {count} data bytes")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def write_idx(path, array: np.ndarray, compress: bool | None = None) -> None:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    payload = struct.pack(">I", magic) + struct.pack(f">{array.ndim}I", *array.shape)
    payload += array.tobytes()
    path = Path(path)
    if compress is None:
        compress = path.suffix == ".gz"
    path.write_bytes(gzip.compress(payload, mtime=0) if compress else payload)


@dataclass
class ImageSet:
    """Images ``(N, H, W)`` uint8 and labels ``(N,)`` in file order."""

    images: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)


def load_idx(images_path, labels_path) -> ImageSet:
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if len(images) != len(labels):
        raise DataFormatError(
            f"count mismatch: {len(images)} images vs {len(labels)} labels"
        )
    if labels.size and labels.max() > 9:
        raise DataFormatError(f"label {labels.max()} outside 0..9")
    return ImageSet(images, labels.astype(np.int64))


def _axis_weights(n_in: int, n_out: int):
    src = (np.arange(n_out) + 0.5) * n_in / n_out - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def bilinear_resize(pixels, out_shape=(16, 16)) -> np.ndarray:
    """Half-pixel-centred bilinear resampling of the last two axes.

    Output pixel ``(i, j)`` samples source coordinate
    ``((i + .5) * H / h - .5, (j + .5) * W / w - .5)`` clamped to the image.
    """
    pixels = np.asarray(pixels, dtype=float)
    if pixels.ndim < 2:
        raise ValueError(f"need at least 2-D input, got shape {pixels.shape}")
    h_in, w_in = pixels.shape[-2:]
    r0, r1, wr = _axis_weights(h_in, out_shape[0])
    c0, c1, wc = _axis_weights(w_in, out_shape[1])
    top = pixels[..., r0, :] * (1 - wr)[:, None] + pixels[..., r1, :] * wr[:, None]
    return top[..., c0] * (1 - wc) + top[..., c1] * wc


def resize_mnist(pixels) -> np.ndarray:
    pixels = np.asarray(pixels)
    if pixels.shape[-2:] != (28, 28):
        raise ValueError(f"expected 28x28 images, got {pixels.shape[-2:]}")
    return bilinear_resize(pixels / 255.0, (16, 16))


def amplitude_encode(vector) -> np.ndarray:
    """Normalised real amplitudes as a complex statevector (basis order = vector order)."""
    vector = np.asarray(vector, dtype=float).ravel()
    n = vector.size.bit_length() - 1
    if vector.size < 2 or 1 << n != vector.size:
        raise EncodingError(f"length {vector.size} is not a power of two")
    norm = np.linalg.norm(vector)
    if norm <= 1e-12:
        raise EncodingError("zero-norm input cannot be amplitude encoded; drop this sample")
    return (vector / norm).astype(complex)


def encode_images(images) -> tuple[np.ndarray, np.ndarray]:
    """Resize and encode a stack of 28x28 images.

    Returns ``(states, kept)`` where ``kept`` indexes the images that had
    non-zero norm; the others are dropped with a warning.
    """
    flat = resize_mnist(images).reshape(len(images), -1)
    norms = np.linalg.norm(flat, axis=1)
    kept = np.flatnonzero(norms > 1e-12)
    if len(kept) < len(flat):
        log.warning("dropping %d all-black image(s)", len(flat) - len(kept))
    states = (flat[kept] / norms[kept, None]).astype(complex)
    return states, kept


@dataclass
class TaskSplit:
    normal_class: int
    seed: int
    train_index: np.ndarray
    test_normal_index: np.ndarray
    test_abnormal_index: np.ndarray
    train: np.ndarray
    test_normal: np.ndarray
    test_abnormal: np.ndarray
    test_abnormal_labels: np.ndarray


def _take(rng, pool: np.ndarray, k: int, what: str) -> np.ndarray:
    if k > len(pool):
        raise ValueError(f"need {k} {what}, only {len(pool)} available")
    if k == len(pool):
        return pool
    return np.sort(rng.choice(pool, size=k, replace=False))


def build_task_split(train_set: ImageSet, test_set: ImageSet, normal_class: int, seed: int,
                     scale: float = 1.0, train_scale: float | None = None) -> TaskSplit:
    """One-class task: train on ``normal_class`` only, test on held-out normals and others.

    Test sizes are ``round(1000 * scale)`` normals and ``round(100 * scale)``
    per other class, all drawn from ``test_set``.  The training pool is
    subsampled by ``train_scale`` (defaults to ``scale``).
    """
    if not 0 <= normal_class <= 9:
        raise ValueError(f"normal_class must be in 0..9, got {normal_class}")
    if not 0 < scale <= 1:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    train_scale = scale if train_scale is None else train_scale
    if not 0 < train_scale <= 1:
        raise ValueError(f"train_scale must be in (0, 1], got {train_scale}")
    if len(train_set) == 0 or len(test_set) == 0:
        raise ValueError("empty record set")
    rng = np.random.default_rng([seed, 0])

    pool = np.flatnonzero(train_set.labels == normal_class)
    train_idx = _take(rng, pool, max(1, round(len(pool) * train_scale)), "normal training records")

    normal_pool = np.flatnonzero(test_set.labels == normal_class)
    test_normal_idx = _take(rng, normal_pool, round(TEST_NORMAL * scale), "normal test records")
    per_class = round(TEST_PER_ABNORMAL_CLASS * scale)
    abnormal = [
        _take(rng, np.flatnonzero(test_set.labels == c), per_class, f"class-{c} test records")
        for c in range(10) if c != normal_class
    ]
    test_abnormal_idx = np.concatenate(abnormal)

    train, kept = encode_images(train_set.images[train_idx])
    train_idx = train_idx[kept]
    test_normal, kept = encode_images(test_set.images[test_normal_idx])
    test_normal_idx = test_normal_idx[kept]
    test_abnormal, kept = encode_images(test_set.images[test_abnormal_idx])
    test_abnormal_idx = test_abnormal_idx[kept]
    return TaskSplit(
        normal_class=normal_class,
        seed=seed,
        train_index=train_idx,
        test_normal_index=test_normal_idx,
        test_abnormal_index=test_abnormal_idx,
        train=train,
        test_normal=test_normal,
        test_abnormal=test_abnormal,
        test_abnormal_labels=test_set.labels[test_abnormal_idx],
    )
