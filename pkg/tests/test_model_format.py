import struct

import numpy as np
import pytest

from zvpred import (
    ConvSpec,
    DataIOError,
    FormatError,
    LinearSpec,
    Model,
    Shape3,
    ValidationError,
    analytic_macs,
    load_idx_dataset,
    load_model,
    save_model,
)

from conftest import minimal_model, random_model, write_idx_images, write_idx_labels


def assert_models_equal(a, b):
    assert a.name == b.name
    assert a.input_shape == b.input_shape
    assert a.class_count == b.class_count
    assert len(a.layers) == len(b.layers)
    for la, lb in zip(a.layers, b.layers):
        assert la.kind == lb.kind
        for attr in ("weights", "bias"):
            if hasattr(la, attr):
                assert getattr(la, attr).tobytes() == getattr(lb, attr).tobytes()
        for attr in ("stride", "pad", "kernel", "in_channels", "out_channels",
                     "kernel_h", "kernel_w", "in_features", "out_features"):
            if hasattr(la, attr):
                assert getattr(la, attr) == getattr(lb, attr)


def test_minimal_round_trip(tmp_path):
    path = tmp_path / "m.zvpm"
    save_model(minimal_model(), path)
    loaded = load_model(path)
    assert len(loaded.layers) == 3
    assert_models_equal(minimal_model(), loaded)


def test_rewrite_is_byte_identical(tmp_path):
    rng = np.random.default_rng(11)
    model = random_model(rng)
    p1, p2 = tmp_path / "a.zvpm", tmp_path / "b.zvpm"
    save_model(model, p1)
    save_model(load_model(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_fixture_round_trip(tmp_path, fixture_model):
    path = tmp_path / "copy.zvpm"
    save_model(fixture_model, path)
    assert_models_equal(fixture_model, load_model(path))


def test_fixture_analytic_macs(fixture_model):
    # conv1: 8*16*16 outputs at 1*3*3 each; conv2: 16*8*8 at 8*3*3; linear 256*10
    ledger = analytic_macs(fixture_model)
    assert ledger.conv_baseline == 8 * 16 * 16 * 9 + 16 * 8 * 8 * 72
    assert ledger.total_baseline == ledger.conv_baseline + 256 * 10


def test_conv_weight_count_invariant():
    with pytest.raises(ValidationError):
        conv = ConvSpec(
            in_channels=1,
            out_channels=2,
            kernel_h=2,
            kernel_w=2,
            stride=1,
            pad=0,
            weights=np.zeros((1, 1, 2, 2), dtype=np.float32),  # should be 2x1x2x2
            bias=np.zeros(2, dtype=np.float32),
        )
        conv.validate()


def test_empty_model_rejected(tmp_path):
    model = Model(name="empty", input_shape=Shape3(1, 1, 1), layers=[], class_count=1)
    with pytest.raises(ValidationError):
        save_model(model, tmp_path / "x.zvpm")


def test_model_without_conv_rejected(tmp_path):
    model = Model(
        name="dense_only",
        input_shape=Shape3(1, 1, 1),
        layers=[
            LinearSpec(
                in_features=1,
                out_features=1,
                weights=np.ones((1, 1), np.float32),
                bias=np.zeros(1, np.float32),
            )
        ],
        class_count=1,
    )
    with pytest.raises(ValidationError):
        save_model(model, tmp_path / "x.zvpm")


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.zvpm"
    save_model(minimal_model(), path)
    data = bytearray(path.read_bytes())
    data[:4] = b"NOPE"
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError):
        load_model(path)


def test_bad_version(tmp_path):
    path = tmp_path / "bad.zvpm"
    save_model(minimal_model(), path)
    data = bytearray(path.read_bytes())
    data[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError):
        load_model(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "trunc.zvpm"
    save_model(minimal_model(), path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(DataIOError):
        load_model(path)


def test_shape_composition_checked_at_load(tmp_path):
    # well-formed container whose layers do not compose: widen the input
    # so flatten produces 2 features against linear in_features=1
    path = tmp_path / "mismatch.zvpm"
    save_model(minimal_model(), path)
    raw = path.read_bytes()
    tampered = raw.replace(b'"input_shape":[1,1,1]', b'"input_shape":[1,1,2]', 1)
    assert tampered != raw
    path.write_bytes(tampered)
    with pytest.raises(ValidationError):
        load_model(path)


# --- IDX ---


def test_idx_normalization(tmp_path):
    img = np.array([[[0, 255], [0, 255]]], dtype=np.uint8)
    write_idx_images(tmp_path / "i.idx", img)
    write_idx_labels(tmp_path / "l.idx", [1])
    ds = load_idx_dataset(tmp_path / "i.idx", tmp_path / "l.idx", normalize=True)
    assert ds.images[0].shape == (1, 2, 2)
    assert ds.images[0].reshape(-1).tolist() == [0.0, 1.0, 0.0, 1.0]
    raw = load_idx_dataset(tmp_path / "i.idx", tmp_path / "l.idx", normalize=False)
    assert raw.images[0].reshape(-1).tolist() == [0.0, 255.0, 0.0, 255.0]


def test_idx_label_magic_checked(tmp_path):
    img = np.zeros((1, 2, 2), dtype=np.uint8)
    write_idx_images(tmp_path / "i.idx", img)
    write_idx_images(tmp_path / "l.idx", img)  # image magic in label slot
    with pytest.raises(FormatError):
        load_idx_dataset(tmp_path / "i.idx", tmp_path / "l.idx")


def test_idx_count_mismatch(tmp_path):
    write_idx_images(tmp_path / "i.idx", np.zeros((2, 2, 2), dtype=np.uint8))
    write_idx_labels(tmp_path / "l.idx", [0])
    with pytest.raises(ValidationError):
        load_idx_dataset(tmp_path / "i.idx", tmp_path / "l.idx")


def test_idx_mnist_scale_header(tmp_path):
    # t10k-sized container: 10000 images of 28x28
    images = np.zeros((10000, 28, 28), dtype=np.uint8)
    write_idx_images(tmp_path / "i.idx", images)
    write_idx_labels(tmp_path / "l.idx", np.zeros(10000, dtype=np.uint8))
    assert (tmp_path / "i.idx").stat().st_size == 16 + 10000 * 28 * 28
    assert (tmp_path / "l.idx").stat().st_size == 8 + 10000
    ds = load_idx_dataset(tmp_path / "i.idx", tmp_path / "l.idx")
    assert len(ds) == 10000
    assert ds.images[0].shape == (1, 28, 28)


def test_fixture_dataset_shape(fixture_dataset):
    assert len(fixture_dataset) == 256
    assert fixture_dataset.images[0].shape == (1, 16, 16)
    assert fixture_dataset.labels.max() < 10
