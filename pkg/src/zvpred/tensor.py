"""Dense rank-3 tensors (channels, height, width) backed by float32 numpy arrays.

Layout is channel-outermost row-major: flat offset of (c, y, x) is
c*H*W + y*W + x. All feature maps in the engine use this layout, so a
channel slice ``t[c]`` is a contiguous 2-D plane.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ValidationError

DTYPE = np.float32


class Shape3(NamedTuple):
    """(channels, height, width) of a rank-3 tensor. All dimensions >= 1."""

    channels: int
    height: int
    width: int


def check_shape(shape) -> Shape3:
    """Validate and normalize a (c, h, w) triple."""
    if len(shape) != 3:
        raise ValidationError(f"expected 3 dimensions, got {len(shape)}")
    c, h, w = (int(d) for d in shape)
    if c < 1 or h < 1 or w < 1:
        raise ValidationError(f"all dimensions must be >= 1, got {(c, h, w)}")
    return Shape3(c, h, w)


def tensor_zeros(shape) -> np.ndarray:
    """Allocate an all-zero (c, h, w) float32 tensor."""
    c, h, w = check_shape(shape)
    return np.zeros((c, h, w), dtype=DTYPE)


def as_tensor(data, shape) -> np.ndarray:
    """Wrap flat data (length c*h*w, row-major) as a (c, h, w) float32 tensor."""
    c, h, w = check_shape(shape)
    arr = np.asarray(data, dtype=DTYPE).reshape(-1)
    if arr.size != c * h * w:
        raise ValidationError(
            f"data length {arr.size} does not match shape {(c, h, w)}"
        )
    return np.ascontiguousarray(arr.reshape(c, h, w))


def tensor_get(t: np.ndarray, c: int, y: int, x: int) -> float:
    """Element at (c, y, x). Raises on out-of-bounds indices (no wraparound)."""
    ch, h, w = t.shape
    if not (0 <= c < ch and 0 <= y < h and 0 <= x < w):
        raise IndexError(f"index {(c, y, x)} out of bounds for shape {t.shape}")
    return float(t[c, y, x])


def count_zeros(t: np.ndarray, threshold: float = 0.0) -> int:
    """Number of elements with |e| <= threshold.

    threshold 0 counts exact zeros (both signed zeros); ReLU output only
    contains exact zeros, so this is the sparsity numerator.
    """
    if threshold < 0:
        raise ValidationError(f"threshold must be >= 0, got {threshold}")
    return int(np.count_nonzero(np.abs(t) <= threshold))
