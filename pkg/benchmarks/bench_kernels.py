#!/usr/bin/env python3
"""Compares the compiled and numpy kernel backends on conv workloads.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Times the raw conv kernel on a few layer shapes plus an end-to-end
evaluate pass on the checked-in fixture, and verifies along the way that
both backends produce bit-identical outputs.
"""
import argparse
import time
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent

try:
    from zvpred import _kernels
except ImportError:
    _kernels = None
from zvpred import _kernels_py

CASES = [
    # (name, in_c, out_c, k, h, w)
    ("conv 1->8 3x3 16x16", 1, 8, 3, 16, 16),
    ("conv 8->16 3x3 8x8", 8, 16, 3, 8, 8),
    ("conv 16->32 3x3 16x16", 16, 32, 3, 16, 16),
    ("conv 32->64 3x3 14x14", 32, 64, 3, 14, 14),
]


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernel(repeats):
    rng = np.random.default_rng(0)
    print(f"{'case':<26} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, c, oc, k, h, w in CASES:
        padded = rng.standard_normal((c, h + 2, w + 2)).astype(np.float32)
        weights = rng.standard_normal((oc, c, k, k)).astype(np.float32)
        bias = rng.standard_normal(oc).astype(np.float32)
        args = (padded, weights, bias, 1, h, w)
        t_py = time_fn(lambda: _kernels_py.conv2d_f32(*args), repeats)
        if _kernels is None:
            print(f"{name:<26} {t_py * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_c = time_fn(lambda: _kernels.conv2d_f32(*args), repeats)
        same = _kernels.conv2d_f32(*args).tobytes() == _kernels_py.conv2d_f32(
            *args
        ).tobytes()
        assert same, "backends disagree"
        print(
            f"{name:<26} {t_py * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms "
            f"{t_py / t_c:>7.1f}x"
        )


def bench_end_to_end(repeats):
    import importlib
    import os

    fixtures = REPO / "tests" / "fixtures"
    if not (fixtures / "tiny_cnn.zvpm").exists():
        print("fixture model not found; skipping end-to-end benchmark")
        return
    from zvpred import PredictionConfig, evaluate_model, load_idx_dataset, load_model
    from zvpred import kernels

    model = load_model(fixtures / "tiny_cnn.zvpm")
    dataset = load_idx_dataset(
        fixtures / "fixture_images.idx", fixtures / "fixture_labels.idx"
    )
    dataset.images = dataset.images[:64]
    dataset.labels = dataset.labels[:64]
    cfg = PredictionConfig(window_k=3)

    results = {}
    for name in ("python", "cython"):
        if name == "cython" and _kernels is None:
            continue
        os.environ["ZVPRED_BACKEND"] = name
        importlib.reload(kernels)
        t = time_fn(lambda: evaluate_model(model, dataset, cfg), repeats)
        results[name] = t
        print(f"evaluate 64 images, k=3, {name:<7}: {t * 1e3:8.1f}ms")
    os.environ.pop("ZVPRED_BACKEND", None)
    importlib.reload(kernels)
    if len(results) == 2:
        print(f"end-to-end speedup: {results['python'] / results['cython']:.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled backend not available; timing numpy backend only")
    bench_kernel(args.repeats)
    print()
    bench_end_to_end(args.repeats)


if __name__ == "__main__":
    main()
