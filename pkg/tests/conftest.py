import struct
from pathlib import Path

import numpy as np
import pytest

from zvpred import (
    ConvSpec,
    FlattenSpec,
    LinearSpec,
    MaxPoolSpec,
    Model,
    ReLUSpec,
    Shape3,
)
from zvpred.model import conv_output_hw

FIXTURE_DIR = Path(__file__).parent / "fixtures"

F32 = np.float32


def minimal_model():
    """Smallest valid model: Conv 1->1 1x1 + Flatten + Linear 1->2."""
    conv = ConvSpec(
        in_channels=1,
        out_channels=1,
        kernel_h=1,
        kernel_w=1,
        stride=1,
        pad=0,
        weights=np.ones((1, 1, 1, 1), dtype=F32),
        bias=np.zeros(1, dtype=F32),
    )
    lin = LinearSpec(
        in_features=1,
        out_features=2,
        weights=np.array([[1.0], [-1.0]], dtype=F32),
        bias=np.array([0.5, 0.25], dtype=F32),
    )
    return Model(
        name="minimal",
        input_shape=Shape3(1, 1, 1),
        layers=[conv, FlattenSpec(), lin],
        class_count=2,
    )


def random_model(rng, input_shape=None, max_blocks=3, name="random"):
    """Small random conv net with valid end-to-end shape composition.

    Biases lean negative so post-ReLU maps carry plenty of exact zeros
    for the predictor to chew on.
    """
    if input_shape is None:
        input_shape = Shape3(
            int(rng.integers(1, 4)),
            int(rng.integers(6, 15)),
            int(rng.integers(6, 15)),
        )
    c, h, w = input_shape
    layers = []
    n_blocks = int(rng.integers(1, max_blocks + 1))
    for _ in range(n_blocks):
        out_c = int(rng.integers(1, 7))
        kh = int(rng.integers(1, min(3, h) + 1))
        kw = int(rng.integers(1, min(3, w) + 1))
        stride = int(rng.integers(1, 3))
        pad = int(rng.integers(0, 2))
        conv = ConvSpec(
            in_channels=c,
            out_channels=out_c,
            kernel_h=kh,
            kernel_w=kw,
            stride=stride,
            pad=pad,
            weights=(
                rng.standard_normal((out_c, c, kh, kw)) / np.sqrt(c * kh * kw)
            ).astype(F32),
            bias=rng.uniform(-0.4, 0.15, out_c).astype(F32),
        )
        oh, ow = conv_output_hw(h, w, conv)
        if oh < 1 or ow < 1:
            conv.stride = 1
            conv.pad = 0
            oh, ow = conv_output_hw(h, w, conv)
        layers.append(conv)
        c, h, w = out_c, oh, ow
        if rng.random() < 0.85:
            layers.append(ReLUSpec())
        if min(h, w) >= 4 and rng.random() < 0.5:
            layers.append(MaxPoolSpec(kernel=2, stride=2))
            h, w = (h - 2) // 2 + 1, (w - 2) // 2 + 1
    layers.append(FlattenSpec())
    feats = c * h * w
    classes = int(rng.integers(2, 7))
    if rng.random() < 0.2:
        mid = int(rng.integers(3, 9))
        layers.append(
            LinearSpec(
                in_features=feats,
                out_features=mid,
                weights=(rng.standard_normal((mid, feats)) / np.sqrt(feats)).astype(F32),
                bias=rng.uniform(-0.2, 0.2, mid).astype(F32),
            )
        )
        layers.append(ReLUSpec())
        feats = mid
    layers.append(
        LinearSpec(
            in_features=feats,
            out_features=classes,
            weights=(rng.standard_normal((classes, feats)) / np.sqrt(feats)).astype(F32),
            bias=rng.uniform(-0.2, 0.2, classes).astype(F32),
        )
    )
    model = Model(
        name=name, input_shape=input_shape, layers=layers, class_count=classes
    )
    model.validate()
    return model


def random_input(rng, shape):
    return rng.standard_normal(tuple(shape)).astype(F32)


def write_idx_images(path, images_u8):
    """images_u8: (N, H, W) uint8 array."""
    n, h, w = images_u8.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, h, w))
        f.write(images_u8.tobytes())


def write_idx_labels(path, labels_u8):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels_u8)))
        f.write(bytes(int(v) for v in labels_u8))


@pytest.fixture(scope="session")
def fixture_model():
    from zvpred import load_model

    return load_model(FIXTURE_DIR / "tiny_cnn.zvpm")


@pytest.fixture(scope="session")
def fixture_dataset():
    from zvpred import load_idx_dataset

    return load_idx_dataset(
        FIXTURE_DIR / "fixture_images.idx",
        FIXTURE_DIR / "fixture_labels.idx",
        normalize=True,
    )
