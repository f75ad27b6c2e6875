"""Baseline layer-by-layer inference with exact MAC accounting.

Cost model: one conv output activation costs in_channels * kernel_h *
kernel_w MACs (padding positions included, so every activation of a layer
costs the same), a linear layer costs in_features * out_features, ReLU,
pooling and flatten cost zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ValidationError
from .model import ConvSpec, LinearSpec, Model, conv_output_hw
from .tensor import DTYPE, Shape3

_ZERO = DTYPE(0.0)


@dataclass
class LayerMacs:
    index: int
    kind: str
    macs_baseline: int
    macs_executed: int

    def check(self):
        if self.macs_executed > self.macs_baseline:
            raise ValidationError(
                f"layer {self.index}: executed MACs {self.macs_executed} exceed "
                f"baseline {self.macs_baseline}"
            )


@dataclass
class MacLedger:
    entries: list = field(default_factory=list)  # list[LayerMacs]

    @property
    def total_baseline(self) -> int:
        return sum(e.macs_baseline for e in self.entries)

    @property
    def total_executed(self) -> int:
        return sum(e.macs_executed for e in self.entries)

    @property
    def conv_baseline(self) -> int:
        return sum(e.macs_baseline for e in self.entries if e.kind == "conv")

    @property
    def conv_executed(self) -> int:
        return sum(e.macs_executed for e in self.entries if e.kind == "conv")

    def check(self):
        for e in self.entries:
            e.check()

    def merged(self, other: "MacLedger") -> "MacLedger":
        """Entrywise sum; ledgers must describe the same layer stack."""
        if len(self.entries) != len(other.entries):
            raise ValidationError("cannot merge ledgers of different models")
        out = []
        for a, b in zip(self.entries, other.entries):
            if a.index != b.index or a.kind != b.kind:
                raise ValidationError("cannot merge ledgers of different models")
            out.append(
                LayerMacs(
                    a.index,
                    a.kind,
                    a.macs_baseline + b.macs_baseline,
                    a.macs_executed + b.macs_executed,
                )
            )
        return MacLedger(out)


@dataclass
class ForwardTrace:
    layer_outputs: list  # per layer: (C,H,W) float32 map or 1-D float32 vector
    logits: np.ndarray
    ledger: MacLedger


def conv2d(ifmap: np.ndarray, layer: ConvSpec) -> np.ndarray:
    """Direct zero-padded convolution of a (C,H,W) map with one conv layer."""
    c, h, w = ifmap.shape
    if c != layer.in_channels:
        raise ValidationError(
            f"conv expects {layer.in_channels} input channels, got {c}"
        )
    out_h, out_w = conv_output_hw(h, w, layer)
    if out_h < 1 or out_w < 1:
        raise ValidationError(f"conv output {out_h}x{out_w} is empty")
    p = layer.pad
    if p > 0:
        padded = np.zeros((c, h + 2 * p, w + 2 * p), dtype=DTYPE)
        padded[:, p : p + h, p : p + w] = ifmap
    else:
        padded = np.ascontiguousarray(ifmap, dtype=DTYPE)
    return kernels.conv2d_f32(
        padded,
        np.ascontiguousarray(layer.weights, dtype=DTYPE),
        np.ascontiguousarray(layer.bias, dtype=DTYPE),
        layer.stride,
        out_h,
        out_w,
    )


def relu(t: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x); negatives become exact 0.0."""
    return np.maximum(t, _ZERO)


def maxpool2d(t: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    c, h, w = t.shape
    if kernel > h or kernel > w:
        raise ValidationError(f"maxpool kernel {kernel} exceeds input {h}x{w}")
    return kernels.maxpool2d_f32(
        np.ascontiguousarray(t, dtype=DTYPE), kernel, stride
    )


def linear(v: np.ndarray, layer: LinearSpec) -> np.ndarray:
    if v.shape != (layer.in_features,):
        raise ValidationError(
            f"linear expects {layer.in_features} features, got {v.shape}"
        )
    return kernels.linear_f32(
        np.ascontiguousarray(layer.weights, dtype=DTYPE),
        np.ascontiguousarray(layer.bias, dtype=DTYPE),
        np.ascontiguousarray(v, dtype=DTYPE),
    )


def _check_input(model: Model, input_map: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(input_map, dtype=DTYPE)
    if x.ndim != 3 or Shape3(*x.shape) != model.input_shape:
        raise ValidationError(
            f"input shape {tuple(input_map.shape)} does not match model input "
            f"{tuple(model.input_shape)}"
        )
    return x


def forward_baseline(model: Model, input_map: np.ndarray) -> ForwardTrace:
    """Run every layer in full; macs_executed == macs_baseline throughout."""
    model.validate()
    x = _check_input(model, input_map)
    outputs = []
    entries = []
    for i, layer in enumerate(model.layers):
        if layer.kind == "conv":
            x = conv2d(x, layer)
            macs = x.size * layer.macs_per_activation
        elif layer.kind == "relu":
            x = relu(x)
            macs = 0
        elif layer.kind == "maxpool":
            x = maxpool2d(x, layer.kernel, layer.stride)
            macs = 0
        elif layer.kind == "flatten":
            x = np.ascontiguousarray(x.reshape(-1))
            macs = 0
        elif layer.kind == "linear":
            x = linear(x, layer)
            macs = layer.in_features * layer.out_features
        else:
            raise ValidationError(f"unknown layer kind {layer.kind!r}")
        outputs.append(x)
        entries.append(LayerMacs(i, layer.kind, macs, macs))
    ledger = MacLedger(entries)
    ledger.check()
    return ForwardTrace(layer_outputs=outputs, logits=outputs[-1], ledger=ledger)


def analytic_macs(model: Model) -> MacLedger:
    """MAC ledger derived from shapes alone, without running any data."""
    shapes = model.validate()
    entries = []
    for i, (layer, shape) in enumerate(zip(model.layers, shapes)):
        if layer.kind == "conv":
            out_elems = shape.channels * shape.height * shape.width
            macs = out_elems * layer.macs_per_activation
        elif layer.kind == "linear":
            macs = layer.in_features * layer.out_features
        else:
            macs = 0
        entries.append(LayerMacs(i, layer.kind, macs, macs))
    return MacLedger(entries)
