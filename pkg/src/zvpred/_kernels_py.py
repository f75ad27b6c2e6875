"""Pure-numpy kernel backend.

Mirrors the compiled backend in `_kernels.pyx` operation for operation.
Both accumulate in float32 in a fixed order (input channel, then kernel
row, then kernel column; feature index for linear) over an explicitly
zero-padded input, so the two backends produce bit-identical results.
"""
from __future__ import annotations

import numpy as np

NAME = "python"


def conv2d_f32(padded, weights, bias, stride, out_h, out_w):
    """Direct convolution over a pre-padded ifmap.

    padded: (C, H+2p, W+2p) float32, C-contiguous
    weights: (OC, C, KH, KW) float32; bias: (OC,) float32
    Returns (OC, out_h, out_w) float32.
    """
    oc, c, kh, kw = weights.shape
    out = np.empty((oc, out_h, out_w), dtype=np.float32)
    out[:] = bias[:, None, None]
    y_stop = (out_h - 1) * stride + 1
    x_stop = (out_w - 1) * stride + 1
    for ci in range(c):
        plane = padded[ci]
        for ky in range(kh):
            rows = plane[ky : ky + y_stop : stride]
            for kx in range(kw):
                window = rows[:, kx : kx + x_stop : stride]
                out += weights[:, ci, ky, kx][:, None, None] * window
    return out


def maxpool2d_f32(x, kernel, stride):
    """Per-channel max over kernel x kernel windows at the given stride."""
    c, h, w = x.shape
    out_h = (h - kernel) // stride + 1
    out_w = (w - kernel) // stride + 1
    y_stop = (out_h - 1) * stride + 1
    x_stop = (out_w - 1) * stride + 1
    out = None
    for ky in range(kernel):
        for kx in range(kernel):
            window = x[:, ky : ky + y_stop : stride, kx : kx + x_stop : stride]
            out = window.copy() if out is None else np.maximum(out, window)
    return out


def linear_f32(weights, bias, v):
    """Dense matvec: out[o] = bias[o] + sum_j weights[o, j] * v[j]."""
    out = bias.copy()
    for j in range(v.shape[0]):
        out += weights[:, j] * v[j]
    return out
