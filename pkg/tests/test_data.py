import gzip

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.extra.numpy import arrays

from oracles import bilinear_loop
from qsvdd.data import (IMAGES_MAGIC, LABELS_MAGIC, DataFormatError, EncodingError, ImageSet,
                        amplitude_encode, bilinear_resize, build_task_split, encode_images,
                        load_idx, read_idx, resize_mnist, write_idx)


@pytest.fixture
def idx_pair(tmp_path, rng):
    images = rng.integers(0, 256, size=(3, 28, 28), dtype=np.uint8)
    labels = np.array([7, 0, 3], dtype=np.uint8)
    write_idx(tmp_path / "img.gz", images)
    write_idx(tmp_path / "lab", labels)
    return tmp_path, images, labels


def test_idx_round_trip(idx_pair):
    d, images, labels = idx_pair
    data = load_idx(d / "img.gz", d / "lab")
    assert len(data) == 3
    assert np.array_equal(data.images, images)
    assert data.labels.tolist() == [7, 0, 3]


def test_idx_gzip_is_reproducible(tmp_path, rng):
    a = rng.integers(0, 9, size=10, dtype=np.uint8)
    write_idx(tmp_path / "a.gz", a)
    first = (tmp_path / "a.gz").read_bytes()
    write_idx(tmp_path / "a.gz", a)
    assert (tmp_path / "a.gz").read_bytes() == first
    assert gzip.decompress(first)[:4] == b"\x00\x00\x08\x01"


def test_wrong_magic_names_expected(idx_pair):
    d, _, _ = idx_pair
    with pytest.raises(DataFormatError, match="0x00000803"):
        read_idx(d / "lab", IMAGES_MAGIC)


def test_count_mismatch(tmp_path, rng):
    write_idx(tmp_path / "i", rng.integers(0, 256, size=(10, 28, 28), dtype=np.uint8))
    write_idx(tmp_path / "l", np.zeros(9, dtype=np.uint8))
    with pytest.raises(DataFormatError, match="count mismatch"):
        load_idx(tmp_path / "i", tmp_path / "l")


def test_truncated_file(tmp_path):
    write_idx(tmp_path / "l", np.arange(10, dtype=np.uint8))
    raw = (tmp_path / "l").read_bytes()
    (tmp_path / "l").write_bytes(raw[:-3])
    with pytest.raises(DataFormatError, match="truncated"):
        read_idx(tmp_path / "l", LABELS_MAGIC)
    (tmp_path / "l").write_bytes(raw[:2])
    with pytest.raises(DataFormatError):
        read_idx(tmp_path / "l", LABELS_MAGIC)


def test_constant_image_stays_constant():
    out = bilinear_resize(np.full((28, 28), 0.37))
    assert out.shape == (16, 16)
    assert np.allclose(out, 0.37, atol=1e-15)


def test_checkerboard_downscale():
    board = (np.indices((4, 4)).sum(axis=0) % 2).astype(float)
    out = bilinear_resize(board, (2, 2))
    assert np.allclose(out, bilinear_loop(board, 2, 2), atol=1e-15)
    # each output pixel sits in the middle of a 2x2 cell
    assert np.allclose(out, 0.5)


def test_resize_matches_loop_oracle(rng):
    img = rng.uniform(size=(28, 28))
    assert np.max(np.abs(bilinear_resize(img) - bilinear_loop(img, 16, 16))) <= 1e-12


def test_resize_matches_opencv(rng):
    cv2 = pytest.importorskip("cv2")
    img = rng.uniform(size=(28, 28))
    ref = cv2.resize(img, (16, 16), interpolation=cv2.INTER_LINEAR)
    assert np.max(np.abs(bilinear_resize(img) - ref)) <= 1e-6


def test_resize_batches_and_rejects_bad_shape(rng):
    imgs = rng.integers(0, 256, size=(5, 28, 28))
    out = resize_mnist(imgs)
    assert out.shape == (5, 16, 16)
    assert np.allclose(out[2], resize_mnist(imgs[2]))
    with pytest.raises(ValueError):
        resize_mnist(np.zeros((27, 28)))


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, (28, 28)))
def test_resized_intensity_bounds(img):
    out = resize_mnist(img)
    assert out.min() >= img.min() / 255 - 1e-12
    assert out.max() <= img.max() / 255 + 1e-12


def test_amplitude_encode_examples():
    e0 = np.zeros(256)
    e0[0] = 1
    psi = amplitude_encode(e0)
    assert psi.shape == (256,) and psi[0] == 1 and not psi[1:].any()
    assert np.allclose(amplitude_encode([3, 4, 0, 0]), [0.6, 0.8, 0, 0])
    with pytest.raises(EncodingError):
        amplitude_encode(np.zeros(4))
    with pytest.raises(EncodingError):
        amplitude_encode(np.ones(6))


def test_encode_images_drops_black(rng, caplog):
    imgs = rng.integers(0, 256, size=(3, 28, 28), dtype=np.uint8)
    imgs[1] = 0
    states, kept = encode_images(imgs)
    assert kept.tolist() == [0, 2]
    assert np.allclose(np.linalg.norm(states, axis=1), 1)
    assert "dropping 1" in caplog.text


def synthetic_sets(rng, per_class_train=30, per_class_test=120):
    def make(per):
        labels = np.repeat(np.arange(10), per).astype(np.int64)
        images = rng.integers(1, 256, size=(len(labels), 28, 28), dtype=np.uint8)
        return ImageSet(images, labels)
    return make(per_class_train), make(per_class_test)


def test_split_sizes_and_determinism(rng):
    train, test = synthetic_sets(rng, per_class_test=1000)
    a = build_task_split(train, test, 3, seed=5)
    assert len(a.test_normal) == 1000 and len(a.test_abnormal) == 900
    assert len(a.train) == 30
    assert np.all(train.labels[a.train_index] == 3)
    b = build_task_split(train, test, 3, seed=5)
    for f in ("train_index", "test_normal_index", "test_abnormal_index"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert np.array_equal(a.train, b.train)


def test_split_scaled_and_disjoint(rng):
    train, test = synthetic_sets(rng)
    s = build_task_split(train, test, 0, seed=1, scale=0.1)
    assert (len(s.test_normal), len(s.test_abnormal)) == (100, 90)
    assert len(s.train) == 3
    assert not set(s.test_normal_index) & set(s.test_abnormal_index)
    assert np.all(test.labels[s.test_normal_index] == 0)
    assert np.all(s.test_abnormal_labels != 0)
    assert np.bincount(s.test_abnormal_labels, minlength=10)[1:].tolist() == [10] * 9
    full_train = build_task_split(train, test, 0, seed=1, scale=0.1, train_scale=1.0)
    assert len(full_train.train) == 30


def test_split_errors(rng):
    train, test = synthetic_sets(rng)
    with pytest.raises(ValueError):
        build_task_split(train, test, 10, seed=0)
    with pytest.raises(ValueError, match="need 1000"):
        build_task_split(train, test, 0, seed=0)
    with pytest.raises(ValueError):
        build_task_split(train, test, 0, seed=0, scale=0)


def test_mnist_class0_train_size(mnist):
    train, test = mnist
    split = build_task_split(train, test, 0, seed=0, scale=0.1, train_scale=1.0)
    assert len(split.train) == int(np.sum(train.labels == 0))
    if len(train) == 60000:
        assert len(build_task_split(train, test, 0, seed=0).train) == 5923
