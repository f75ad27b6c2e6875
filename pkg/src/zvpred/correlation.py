"""Spatial-correlation measurement of conv ofmaps.

For each conv layer's post-activation map and each window size k, the
fraction of activations lying inside all-zero k x k windows. Only
complete in-bounds windows count (measurement uses no padding, unlike the
predictor: padded zeros would inflate the statistic). k = 1 is plain
sparsity; the grouped fraction %_kxk / %_1x1 is the share of zero
activations that sit in all-zero windows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import forward_baseline
from .errors import UndefinedMetricError, ValidationError
from .model import Model
from .tensor import Shape3

VALID_KS = range(1, 6)


def measure_window_fraction(ofmap: np.ndarray, k: int, threshold: float = 0.0) -> float:
    """Activations inside all-zero k x k windows / activations covered.

    Tiles each channel plane with non-overlapping windows anchored at
    (0, 0); cells beyond the last full window are not covered and do not
    count on either side of the ratio. Channels are pooled (each covered
    cell weighs the same).
    """
    if k < 1:
        raise ValidationError(f"window size must be >= 1, got {k}")
    c, h, w = ofmap.shape
    nh, nw = h // k, w // k
    if nh == 0 or nw == 0:
        raise UndefinedMetricError(
            f"no complete {k}x{k} window fits a {h}x{w} plane"
        )
    zero = np.abs(ofmap) <= threshold
    blocks = zero[:, : nh * k, : nw * k].reshape(c, nh, k, nw, k)
    all_zero_windows = int(np.count_nonzero(blocks.all(axis=(2, 4))))
    covered = c * nh * nw * k * k
    return (all_zero_windows * k * k) / covered


def _covered_cells(shape: Shape3, k: int) -> int:
    nh, nw = shape.height // k, shape.width // k
    return shape.channels * nh * nw * k * k


@dataclass
class LayerCorrelation:
    layer_index: int
    ofmap_shape: Shape3
    post_relu: bool
    fractions: dict  # k -> mean fraction over images, or None if k does not fit
    sparsity: float  # == 1x1 fraction
    grouped: dict  # k -> fractions[k] / sparsity, None when undefined

    def covered_cells(self, k: int) -> int:
        return _covered_cells(self.ofmap_shape, k)


@dataclass
class CorrelationReport:
    image_count: int
    ks: list
    threshold: float
    layers: list  # list[LayerCorrelation]
    network_mean: dict  # k -> unweighted mean over layers where defined
    network_weighted: dict  # k -> covered-cell weighted mean

    def to_json_dict(self) -> dict:
        def kmap(d):
            return {str(k): d[k] for k in sorted(d)}

        return {
            "schema": 1,
            "kind": "correlation",
            "image_count": self.image_count,
            "window_sizes": list(self.ks),
            "zero_threshold": self.threshold,
            "layers": [
                {
                    "layer_index": l.layer_index,
                    "ofmap_shape": list(l.ofmap_shape),
                    "post_relu": l.post_relu,
                    "zero_window_fraction": kmap(l.fractions),
                    "sparsity": l.sparsity,
                    "grouped_fraction": kmap(l.grouped),
                }
                for l in self.layers
            ],
            "network_mean": kmap(self.network_mean),
            "network_weighted": kmap(self.network_weighted),
        }


def _conv_observation_points(model: Model):
    """(layer_index, trace_index, post_relu) for each conv layer.

    The profiler observes the post-ReLU map when ReLU immediately follows
    the conv (that is where exact zeros live), the raw ofmap otherwise.
    """
    points = []
    for i, layer in enumerate(model.layers):
        if layer.kind != "conv":
            continue
        followed = i + 1 < len(model.layers) and model.layers[i + 1].kind == "relu"
        points.append((i, i + 1 if followed else i, followed))
    return points


def profile_model(model: Model, dataset, ks, threshold: float = 0.0) -> CorrelationReport:
    """Average zero-window fractions over a dataset, per conv layer and k.

    k = 1 (sparsity) is always measured since the grouped fraction needs
    it, whether or not it appears in ks.
    """
    ks = sorted(set(int(k) for k in ks))
    if not ks:
        raise ValidationError("ks must be nonempty")
    for k in ks:
        if k not in VALID_KS:
            raise ValidationError(f"window sizes must be in 1..5, got {k}")
    if len(dataset.images) == 0:
        raise ValidationError("dataset is empty")
    shapes = model.validate()
    points = _conv_observation_points(model)
    all_ks = sorted(set(ks) | {1})

    sums = {(i, k): 0.0 for i, _, _ in points for k in all_ks}
    for image in dataset.images:
        trace = forward_baseline(model, image)
        for layer_i, trace_i, _ in points:
            ofmap = trace.layer_outputs[trace_i]
            for k in all_ks:
                if k <= min(ofmap.shape[1], ofmap.shape[2]):
                    sums[(layer_i, k)] += measure_window_fraction(
                        ofmap, k, threshold
                    )

    n = len(dataset.images)
    layers = []
    for layer_i, _, post in points:
        shape = shapes[layer_i]
        fractions = {
            k: (sums[(layer_i, k)] / n if k <= min(shape.height, shape.width) else None)
            for k in all_ks
        }
        sparsity = fractions[1]
        grouped = {
            k: (f / sparsity if f is not None and sparsity > 0 else None)
            for k, f in fractions.items()
        }
        layers.append(
            LayerCorrelation(
                layer_index=layer_i,
                ofmap_shape=shape,
                post_relu=post,
                fractions=fractions,
                sparsity=sparsity,
                grouped=grouped,
            )
        )

    network_mean, network_weighted = {}, {}
    for k in all_ks:
        defined = [l for l in layers if l.fractions[k] is not None]
        if not defined:
            network_mean[k] = None
            network_weighted[k] = None
            continue
        network_mean[k] = sum(l.fractions[k] for l in defined) / len(defined)
        weight_total = sum(l.covered_cells(k) for l in defined)
        network_weighted[k] = (
            sum(l.fractions[k] * l.covered_cells(k) for l in defined) / weight_total
        )

    return CorrelationReport(
        image_count=n,
        ks=ks,
        threshold=threshold,
        layers=layers,
        network_mean=network_mean,
        network_weighted=network_weighted,
    )
