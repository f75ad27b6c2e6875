import numpy as np
import pytest

import oracle
from conftest import minimal_model, random_input, random_model

from zvpred import (
    ConvSpec,
    LinearSpec,
    ValidationError,
    analytic_macs,
    conv2d,
    forward_baseline,
    linear,
    maxpool2d,
    relu,
)

F32 = np.float32


def make_conv(weights, bias, stride=1, pad=0):
    w = np.asarray(weights, dtype=F32)
    conv = ConvSpec(
        in_channels=w.shape[1],
        out_channels=w.shape[0],
        kernel_h=w.shape[2],
        kernel_w=w.shape[3],
        stride=stride,
        pad=pad,
        weights=w,
        bias=np.asarray(bias, dtype=F32),
    )
    conv.validate()
    return conv


def test_conv2d_hand_example():
    ifmap = np.arange(1, 10, dtype=F32).reshape(1, 3, 3)
    conv = make_conv(np.ones((1, 1, 2, 2)), [0.0])
    out = conv2d(ifmap, conv)
    assert out.tolist() == [[[12.0, 16.0], [24.0, 28.0]]]


def test_conv2d_identity_kernel():
    rng = np.random.default_rng(3)
    ifmap = rng.standard_normal((1, 5, 4)).astype(F32)
    conv = make_conv(np.ones((1, 1, 1, 1)), [0.0])
    assert np.array_equal(conv2d(ifmap, conv), ifmap)


def test_conv2d_zero_ifmap():
    ifmap = np.zeros((2, 4, 4), dtype=F32)
    rng = np.random.default_rng(4)
    conv = make_conv(rng.standard_normal((3, 2, 3, 3)), np.zeros(3), pad=1)
    assert not conv2d(ifmap, conv).any()


def test_conv2d_channel_mismatch():
    conv = make_conv(np.ones((1, 2, 1, 1)), [0.0])
    with pytest.raises(ValidationError):
        conv2d(np.zeros((1, 3, 3), dtype=F32), conv)


def test_conv2d_empty_output():
    conv = make_conv(np.ones((1, 1, 4, 4)), [0.0])
    with pytest.raises(ValidationError):
        conv2d(np.zeros((1, 3, 3), dtype=F32), conv)


def test_conv2d_matches_naive_oracle_bitwise():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c, oc = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        kh, kw = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        stride, pad = int(rng.integers(1, 3)), int(rng.integers(0, 2))
        h = int(rng.integers(kh, kh + 6))
        w = int(rng.integers(kw, kw + 6))
        ifmap = rng.standard_normal((c, h, w)).astype(F32)
        conv = make_conv(
            rng.standard_normal((oc, c, kh, kw)), rng.standard_normal(oc),
            stride=stride, pad=pad,
        )
        got = conv2d(ifmap, conv)
        want = oracle.conv2d_ref(ifmap, conv.weights, conv.bias, stride, pad, "f32")
        assert got.tobytes() == want.tobytes()


def test_relu_examples():
    t = np.array([[[-1.0, 0.0, 2.0]]], dtype=F32)
    assert relu(t).tolist() == [[[0.0, 0.0, 2.0]]]
    neg = -np.abs(np.random.default_rng(0).standard_normal((2, 3, 3)).astype(F32)) - 0.1
    out = relu(neg)
    assert not out.any()
    nonneg = np.abs(np.random.default_rng(1).standard_normal((2, 3, 3)).astype(F32))
    assert np.array_equal(relu(nonneg), nonneg)


def test_maxpool_examples():
    t = np.array([[[1.0, 2.0], [3.0, 4.0]]], dtype=F32)
    assert maxpool2d(t, 2, 2).tolist() == [[[4.0]]]
    const = np.full((3, 4, 4), 2.5, dtype=F32)
    assert np.array_equal(maxpool2d(const, 2, 2), np.full((3, 2, 2), 2.5, dtype=F32))
    ramp = np.arange(1, 17, dtype=F32).reshape(1, 4, 4)
    assert maxpool2d(ramp, 2, 2).tolist() == [[[6.0, 8.0], [14.0, 16.0]]]


def test_maxpool_kernel_too_large():
    with pytest.raises(ValidationError):
        maxpool2d(np.zeros((1, 2, 2), dtype=F32), 3, 1)


def test_linear_examples():
    eye = LinearSpec(3, 3, np.eye(3, dtype=F32), np.zeros(3, dtype=F32))
    eye.validate()
    v = np.array([1.0, -2.0, 3.0], dtype=F32)
    assert np.array_equal(linear(v, eye), v)

    lin = LinearSpec(
        2, 2, np.array([[1, 2], [3, 4]], dtype=F32), np.zeros(2, dtype=F32)
    )
    lin.validate()
    assert linear(np.ones(2, dtype=F32), lin).tolist() == [3.0, 7.0]

    biased = LinearSpec(
        2, 2, np.zeros((2, 2), dtype=F32), np.array([0.5, -1.5], dtype=F32)
    )
    biased.validate()
    assert linear(np.zeros(2, dtype=F32), biased).tolist() == [0.5, -1.5]


def test_linear_length_mismatch():
    lin = LinearSpec(2, 2, np.eye(2, dtype=F32), np.zeros(2, dtype=F32))
    lin.validate()
    with pytest.raises(ValidationError):
        linear(np.zeros(3, dtype=F32), lin)


def test_forward_minimal_zero_input():
    model = minimal_model()
    trace = forward_baseline(model, np.zeros((1, 1, 1), dtype=F32))
    # conv bias 0 -> zero activation; logits are the linear bias
    assert trace.logits.tolist() == [0.5, 0.25]


def test_forward_rejects_bad_input_shape():
    with pytest.raises(ValidationError):
        forward_baseline(minimal_model(), np.zeros((1, 2, 2), dtype=F32))


def test_forward_shapes_match_analytic():
    rng = np.random.default_rng(21)
    for _ in range(10):
        model = random_model(rng)
        shapes = model.validate()
        trace = forward_baseline(model, random_input(rng, model.input_shape))
        for out, shape in zip(trace.layer_outputs, shapes):
            if hasattr(shape, "channels"):
                assert out.shape == tuple(shape)
            else:
                assert out.shape == (shape,)


def test_forward_is_deterministic():
    rng = np.random.default_rng(33)
    model = random_model(rng)
    image = random_input(rng, model.input_shape)
    t1 = forward_baseline(model, image)
    t2 = forward_baseline(model, image)
    assert t1.logits.tobytes() == t2.logits.tobytes()
    for a, b in zip(t1.layer_outputs, t2.layer_outputs):
        assert a.tobytes() == b.tobytes()


def test_forward_macs_equal_analytic():
    rng = np.random.default_rng(55)
    for _ in range(25):
        model = random_model(rng)
        trace = forward_baseline(model, random_input(rng, model.input_shape))
        analytic = analytic_macs(model)
        got = [(e.index, e.kind, e.macs_baseline, e.macs_executed) for e in trace.ledger.entries]
        want = [(e.index, e.kind, e.macs_baseline, e.macs_executed) for e in analytic.entries]
        assert got == want
        assert trace.ledger.total_executed == trace.ledger.total_baseline


def test_zero_input_zero_bias_propagates_zeros():
    rng = np.random.default_rng(8)
    model = random_model(rng)
    for layer in model.layers:
        if hasattr(layer, "bias"):
            layer.bias = np.zeros_like(layer.bias)
    trace = forward_baseline(model, np.zeros(tuple(model.input_shape), dtype=F32))
    for out, layer in zip(trace.layer_outputs, model.layers):
        if layer.kind == "conv":
            assert not out.any()


def test_per_activation_cost_spot_checks():
    conv64 = make_conv(np.zeros((1, 64, 3, 3)), [0.0])
    assert conv64.macs_per_activation == 576
    conv512 = make_conv(np.zeros((1, 512, 3, 3)), [0.0])
    assert conv512.macs_per_activation == 4608
    one = make_conv(np.ones((1, 1, 1, 1)), [0.0])
    assert one.macs_per_activation == 1


def test_fixture_golden_logits(fixture_model, fixture_dataset):
    import json

    from conftest import FIXTURE_DIR

    golden = json.loads((FIXTURE_DIR / "golden_logits.json").read_text())
    tol = golden["tolerance_rel"]
    for idx, want in zip(golden["image_indices"], golden["logits"]):
        got = forward_baseline(fixture_model, fixture_dataset.images[idx]).logits
        rel = np.abs(got - np.asarray(want)) / np.abs(want)
        assert rel.max() < tol
