"""Zero-value prediction over conv output feature maps.

Each channel plane of a conv ofmap is tiled by non-overlapping k x k
windows anchored at (0, 0); planes whose dimensions are not multiples of
k are conceptually zero-padded at the bottom/right margins so the tiling
is exact ("virtual" cells). The main-diagonal cells of every window are
always computed. If all real diagonal cells of a window are zero, the
remaining real cells of that window are predicted to be zero and their
convolutions skipped; otherwise the window is computed in full.

This module simulates that schedule: the full ofmap is computed once, the
skipped cells are overwritten with exact 0.0 and pushed downstream, and
the would-have-been values serve as the shadow oracle that classifies
each skipped cell as a true prediction (oracle value zero) or a false
prediction (oracle value nonzero). Shadow values are never charged to
macs_executed. Saved MACs are predicted_count times the layer's
per-activation cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import (
    ForwardTrace,
    LayerMacs,
    MacLedger,
    _check_input,
    conv2d,
    linear,
    maxpool2d,
    relu,
)
from .errors import UndefinedMetricError, ValidationError
from .model import Model
from .tensor import DTYPE

_ZERO = DTYPE(0.0)

WINDOW_K_MIN = 2
WINDOW_K_MAX = 5


@dataclass(frozen=True)
class PredictionConfig:
    """window_k in 2..5; enabled_layers indexed by conv-layer ordinal.

    enabled_layers None means the default policy: prediction on for every
    conv layer immediately followed by ReLU (the source of exact zeros),
    off otherwise. zero_threshold 0 tests for exact zeros.
    """

    window_k: int
    enabled_layers: tuple = None
    zero_threshold: float = 0.0

    def validate(self):
        if not WINDOW_K_MIN <= self.window_k <= WINDOW_K_MAX:
            raise ValidationError(
                f"window_k must be in {WINDOW_K_MIN}..{WINDOW_K_MAX}, "
                f"got {self.window_k} (1x1 is the sparsity baseline, not a "
                "prediction mode)"
            )
        if self.zero_threshold < 0:
            raise ValidationError("zero_threshold must be >= 0")


@dataclass(frozen=True)
class Window:
    """One k x k window; real_h/real_w are the in-bounds rows/columns."""

    origin_y: int
    origin_x: int
    k: int
    real_h: int
    real_w: int

    @property
    def real_cells(self) -> int:
        return self.real_h * self.real_w

    @property
    def real_diagonal_cells(self) -> int:
        return min(self.real_h, self.real_w)


@dataclass(frozen=True)
class WindowGrid:
    height: int
    width: int
    k: int
    padded_h: int
    padded_w: int
    windows: tuple

    @property
    def virtual_cell_count(self) -> int:
        return self.padded_h * self.padded_w - self.height * self.width


def partition_windows(h: int, w: int, k: int) -> WindowGrid:
    """Tile an h x w plane with k x k windows anchored at multiples of k."""
    if h < 1 or w < 1:
        raise ValidationError(f"plane dimensions must be >= 1, got {h}x{w}")
    if k < WINDOW_K_MIN:
        raise ValidationError(f"window size must be >= {WINDOW_K_MIN}, got {k}")
    gh = math.ceil(h / k)
    gw = math.ceil(w / k)
    windows = tuple(
        Window(
            origin_y=gy * k,
            origin_x=gx * k,
            k=k,
            real_h=min(k, h - gy * k),
            real_w=min(k, w - gx * k),
        )
        for gy in range(gh)
        for gx in range(gw)
    )
    return WindowGrid(
        height=h, width=w, k=k, padded_h=gh * k, padded_w=gw * k, windows=windows
    )


def diagonal_cells(window: Window):
    """Window-local diagonal positions (i, i) split into real and virtual.

    Real cells are returned as absolute (y, x) plane coordinates; virtual
    cells (in the zero-padded margin) as local (i, i) positions.
    """
    real, virtual = [], []
    for i in range(window.k):
        if i < window.real_h and i < window.real_w:
            real.append((window.origin_y + i, window.origin_x + i))
        else:
            virtual.append((i, i))
    return real, virtual


@dataclass
class LayerStats:
    """Activation breakdown plus MAC accounting for one conv layer.

    The four *_act categories partition total_act: diagonal cells of
    triggered windows (all zero by the trigger test), skipped cells whose
    oracle value was zero / nonzero, and everything else.
    """

    layer_index: int
    per_act_macs: int
    total_act: int = 0
    zero_diag_act: int = 0
    true_pred_act: int = 0
    false_pred_act: int = 0
    others_act: int = 0
    predicted_count: int = 0
    macs_baseline: int = 0
    macs_executed: int = 0
    macs_saved: int = 0

    def check(self):
        parts = (
            self.zero_diag_act
            + self.true_pred_act
            + self.false_pred_act
            + self.others_act
        )
        if parts != self.total_act:
            raise ValidationError(
                f"layer {self.layer_index}: categories sum to {parts}, "
                f"total is {self.total_act}"
            )
        if self.true_pred_act + self.false_pred_act != self.predicted_count:
            raise ValidationError(
                f"layer {self.layer_index}: predicted_count "
                f"{self.predicted_count} != true+false predictions"
            )
        if self.macs_saved != self.predicted_count * self.per_act_macs:
            raise ValidationError(
                f"layer {self.layer_index}: macs_saved {self.macs_saved} != "
                f"predicted_count * per-activation cost"
            )
        if self.macs_executed + self.macs_saved != self.macs_baseline:
            raise ValidationError(
                f"layer {self.layer_index}: executed + saved != baseline"
            )


def merge_stats(a: LayerStats, b: LayerStats) -> LayerStats:
    """Fieldwise sum of two stats of the same layer (dataset aggregation)."""
    if a.layer_index != b.layer_index or a.per_act_macs != b.per_act_macs:
        raise ValidationError(
            f"cannot merge stats of layer {a.layer_index} "
            f"(cost {a.per_act_macs}) with layer {b.layer_index} "
            f"(cost {b.per_act_macs})"
        )
    merged = LayerStats(
        layer_index=a.layer_index,
        per_act_macs=a.per_act_macs,
        total_act=a.total_act + b.total_act,
        zero_diag_act=a.zero_diag_act + b.zero_diag_act,
        true_pred_act=a.true_pred_act + b.true_pred_act,
        false_pred_act=a.false_pred_act + b.false_pred_act,
        others_act=a.others_act + b.others_act,
        predicted_count=a.predicted_count + b.predicted_count,
        macs_baseline=a.macs_baseline + b.macs_baseline,
        macs_executed=a.macs_executed + b.macs_executed,
        macs_saved=a.macs_saved + b.macs_saved,
    )
    merged.check()
    return merged


@dataclass
class WindowOutcome:
    """Result of the window pass over one post-activation ofmap."""

    skip_mask: np.ndarray  # bool (C,H,W): cells predicted zero
    zero_diag_act: int
    true_pred_act: int
    false_pred_act: int
    others_act: int
    predicted_count: int


def predict_zero_windows(post_map: np.ndarray, k: int, threshold: float = 0.0) -> WindowOutcome:
    """Run the diagonal trigger over every window of every channel.

    post_map is the value the predictor observes (post-ReLU when ReLU
    follows the conv). A window triggers when all its real diagonal cells
    are zero (|v| <= threshold); virtual margin cells are vacuously zero.
    Skipped cells are classified against post_map itself, which holds the
    shadow oracle values ahead of masking.
    """
    c, h, w = post_map.shape
    gh = math.ceil(h / k)
    gw = math.ceil(w / k)
    zero = np.abs(post_map) <= threshold
    zero_padded = np.ones((c, gh * k, gw * k), dtype=bool)
    zero_padded[:, :h, :w] = zero
    blocks = zero_padded.reshape(c, gh, k, gw, k)
    idx = np.arange(k)
    # (k, C, gh, gw): diagonal cell i of each window
    diag = blocks[:, :, idx, :, idx]
    trigger = diag.all(axis=0)  # (C, gh, gw)

    eye = np.eye(k, dtype=bool)
    expanded = trigger[:, :, None, :, None]
    skip_full = (expanded & ~eye[None, None, :, None, :]).reshape(
        c, gh * k, gw * k
    )[:, :h, :w]
    diag_full = (expanded & eye[None, None, :, None, :]).reshape(
        c, gh * k, gw * k
    )[:, :h, :w]

    predicted_count = int(np.count_nonzero(skip_full))
    true_pred = int(np.count_nonzero(skip_full & zero))
    zero_diag = int(np.count_nonzero(diag_full))
    total = c * h * w
    return WindowOutcome(
        skip_mask=skip_full,
        zero_diag_act=zero_diag,
        true_pred_act=true_pred,
        false_pred_act=predicted_count - true_pred,
        others_act=total - zero_diag - predicted_count,
        predicted_count=predicted_count,
    )


def resolve_enabled_layers(model: Model, cfg: PredictionConfig) -> list:
    """Per-conv-layer enable flags, applying the followed-by-ReLU default."""
    convs = model.conv_layers()
    if cfg.enabled_layers is None:
        return [
            i + 1 < len(model.layers) and model.layers[i + 1].kind == "relu"
            for i, _ in convs
        ]
    if len(cfg.enabled_layers) != len(convs):
        raise ValidationError(
            f"enabled_layers has {len(cfg.enabled_layers)} entries, model has "
            f"{len(convs)} conv layers"
        )
    return [bool(e) for e in cfg.enabled_layers]


def forward_predicted(model: Model, input_map: np.ndarray, cfg: PredictionConfig):
    """Predicted-schedule forward pass.

    Returns (ForwardTrace, list[LayerStats]) with one stats entry per conv
    layer in network order. The trace's ofmaps contain exact 0.0 at
    skipped cells and downstream layers consume the altered maps. With
    every layer disabled the trace is bit-identical to forward_baseline.
    """
    cfg.validate()
    model.validate()
    enabled = resolve_enabled_layers(model, cfg)
    x = _check_input(model, input_map)
    outputs = []
    entries = []
    stats_per_conv = []
    conv_ordinal = 0
    for i, layer in enumerate(model.layers):
        if layer.kind == "conv":
            x = conv2d(x, layer)
            per_act = layer.macs_per_activation
            baseline = x.size * per_act
            stats = LayerStats(
                layer_index=i,
                per_act_macs=per_act,
                total_act=x.size,
                macs_baseline=baseline,
                macs_executed=baseline,
            )
            if enabled[conv_ordinal]:
                followed_by_relu = (
                    i + 1 < len(model.layers) and model.layers[i + 1].kind == "relu"
                )
                post = relu(x) if followed_by_relu else x
                outcome = predict_zero_windows(
                    post, cfg.window_k, cfg.zero_threshold
                )
                x[outcome.skip_mask] = _ZERO
                stats.zero_diag_act = outcome.zero_diag_act
                stats.true_pred_act = outcome.true_pred_act
                stats.false_pred_act = outcome.false_pred_act
                stats.others_act = outcome.others_act
                stats.predicted_count = outcome.predicted_count
                stats.macs_saved = outcome.predicted_count * per_act
                stats.macs_executed = baseline - stats.macs_saved
            else:
                stats.others_act = stats.total_act
            stats.check()
            stats_per_conv.append(stats)
            entries.append(LayerMacs(i, "conv", baseline, stats.macs_executed))
            conv_ordinal += 1
        elif layer.kind == "relu":
            x = relu(x)
            entries.append(LayerMacs(i, "relu", 0, 0))
        elif layer.kind == "maxpool":
            x = maxpool2d(x, layer.kernel, layer.stride)
            entries.append(LayerMacs(i, "maxpool", 0, 0))
        elif layer.kind == "flatten":
            x = np.ascontiguousarray(x.reshape(-1))
            entries.append(LayerMacs(i, "flatten", 0, 0))
        elif layer.kind == "linear":
            x = linear(x, layer)
            macs = layer.in_features * layer.out_features
            entries.append(LayerMacs(i, "linear", macs, macs))
        else:
            raise ValidationError(f"unknown layer kind {layer.kind!r}")
        outputs.append(x)
    ledger = MacLedger(entries)
    ledger.check()
    trace = ForwardTrace(layer_outputs=outputs, logits=outputs[-1], ledger=ledger)
    return trace, stats_per_conv


class Scope(str, Enum):
    CONV_ONLY = "conv"
    WHOLE_NETWORK = "net"


def mac_reduction(ledger: MacLedger, scope: Scope) -> float:
    """Fraction of MACs saved over the chosen scope, in [0, 1]."""
    scope = Scope(scope)
    if scope is Scope.CONV_ONLY:
        baseline, executed = ledger.conv_baseline, ledger.conv_executed
    else:
        baseline, executed = ledger.total_baseline, ledger.total_executed
    if baseline == 0:
        raise UndefinedMetricError(
            f"MAC reduction undefined: zero baseline in scope {scope.value}"
        )
    return (baseline - executed) / baseline
