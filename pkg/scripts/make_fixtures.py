#!/usr/bin/env python3
"""Regenerates the checked-in test fixtures deterministically.

Produces, under tests/fixtures/:
  tiny_cnn.zvpm       2-conv model with seeded-PRNG weights
  fixture_images.idx  256 synthetic 16x16 grayscale images (smooth random
                      bump fields, so ofmaps show spatial structure)
  fixture_labels.idx  labels = argmax of the baseline logits, so baseline
                      top-1 is 1.0 and degradation directly measures how
                      prediction perturbs the logits
  golden_logits.json  float64 brute-force forward of the first 3 images
  golden_eval_k2.json / golden_eval_k3.json
                      frozen evaluation reports (gated by the invariant
                      suite before freezing)

Run from the repo root: python3 scripts/make_fixtures.py
"""
import json
import struct
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

import oracle  # noqa: E402  (tests/oracle.py)

from zvpred import (  # noqa: E402
    ConvSpec,
    FlattenSpec,
    LinearSpec,
    MaxPoolSpec,
    Model,
    PredictionConfig,
    ReLUSpec,
    Shape3,
    count_zeros,
    evaluate_model,
    forward_baseline,
    load_idx_dataset,
    save_model,
)
from zvpred.report import eval_result_to_json_dict, to_json_bytes  # noqa: E402

OUT = REPO / "tests" / "fixtures"
SEED = 90210
F32 = np.float32


def build_tiny_cnn(rng):
    def conv(cin, cout, bias_lo, bias_hi):
        return ConvSpec(
            in_channels=cin,
            out_channels=cout,
            kernel_h=3,
            kernel_w=3,
            stride=1,
            pad=1,
            weights=(rng.standard_normal((cout, cin, 3, 3)) / np.sqrt(cin * 9.0)).astype(F32),
            bias=rng.uniform(bias_lo, bias_hi, cout).astype(F32),
        )

    # the deeper conv gets a more negative bias band so its post-ReLU maps
    # are systematically sparser, like real nets deeper in the stack
    layers = [
        conv(1, 8, -0.08, 0.08),
        ReLUSpec(),
        MaxPoolSpec(kernel=2, stride=2),
        conv(8, 16, -0.35, -0.05),
        ReLUSpec(),
        MaxPoolSpec(kernel=2, stride=2),
        FlattenSpec(),
        LinearSpec(
            in_features=16 * 4 * 4,
            out_features=10,
            weights=(rng.standard_normal((10, 256)) / 16.0).astype(F32),
            bias=rng.uniform(-0.1, 0.1, 10).astype(F32),
        ),
    ]
    return Model(
        name="tiny_cnn", input_shape=Shape3(1, 16, 16), layers=layers, class_count=10
    )


def make_images(rng, count=256, size=16):
    """Smooth random bump fields quantized to uint8."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    images = np.empty((count, size, size), dtype=np.uint8)
    for i in range(count):
        field = np.zeros((size, size))
        for _ in range(int(rng.integers(2, 6))):
            cy, cx = rng.uniform(0, size, 2)
            sigma = rng.uniform(1.5, 5.0)
            amp = rng.uniform(-1.0, 1.0)
            field += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
        lo, hi = field.min(), field.max()
        scale = 255.0 / (hi - lo) if hi > lo else 0.0
        images[i] = np.clip((field - lo) * scale, 0, 255).astype(np.uint8)
    return images


def write_idx(images, labels):
    with open(OUT / "fixture_images.idx", "wb") as f:
        n, h, w = images.shape
        f.write(struct.pack(">IIII", 0x00000803, n, h, w))
        f.write(images.tobytes())
    with open(OUT / "fixture_labels.idx", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(int(v) for v in labels))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    model = build_tiny_cnn(rng)
    model.validate()
    save_model(model, OUT / "tiny_cnn.zvpm")

    images = make_images(rng)
    labels_placeholder = np.zeros(len(images), dtype=np.uint8)
    write_idx(images, labels_placeholder)
    dataset = load_idx_dataset(
        OUT / "fixture_images.idx", OUT / "fixture_labels.idx", normalize=True
    )

    # self-consistent labels: argmax of the baseline logits
    labels = []
    sparsity = []
    for image in dataset.images:
        trace = forward_baseline(model, image)
        labels.append(int(np.argmax(trace.logits)))
        post1, post2 = trace.layer_outputs[1], trace.layer_outputs[4]
        sparsity.append(
            (count_zeros(post1) / post1.size, count_zeros(post2) / post2.size)
        )
    write_idx(images, np.array(labels, dtype=np.uint8))
    mean_sp = np.mean(sparsity, axis=0)
    print(f"post-ReLU sparsity: conv1 {mean_sp[0]:.3f}, conv2 {mean_sp[1]:.3f}")

    dataset = load_idx_dataset(
        OUT / "fixture_images.idx", OUT / "fixture_labels.idx", normalize=True
    )
    # pick images whose logits sit well away from zero: a pure relative
    # comparison is ill-conditioned when a logit crosses zero
    chosen = []
    logits = {}
    for i in range(len(dataset.images)):
        vec = oracle.forward_ref(model, dataset.images[i], "f64")[-1]
        if np.min(np.abs(vec)) >= 0.05:
            chosen.append(i)
            logits[i] = vec
        if len(chosen) == 3:
            break
    assert len(chosen) == 3, "no well-conditioned golden images found"
    golden = {
        "accumulation": "float64",
        "tolerance_rel": 1e-5,
        "image_indices": chosen,
        "logits": [[float(v) for v in logits[i]] for i in chosen],
    }
    with open(OUT / "golden_logits.json", "wb") as f:
        f.write(to_json_bytes(golden))

    for k in (2, 3):
        result = evaluate_model(model, dataset, PredictionConfig(window_k=k))
        assert result.mac_reduction_conv > 0.0, f"no MAC reduction at k={k}"
        payload = eval_result_to_json_dict(result)
        with open(OUT / f"golden_eval_k{k}.json", "wb") as f:
            f.write(to_json_bytes(payload))
        print(
            f"k={k}: conv MAC reduction {100 * result.mac_reduction_conv:.2f}%, "
            f"top-1 degradation {result.top1_degradation:+.4f}, "
            f"top-5 degradation {result.top5_degradation:+.4f}"
        )
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
