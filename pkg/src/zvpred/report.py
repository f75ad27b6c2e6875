"""Dataset-level evaluation: baseline vs predicted accuracy, activation
breakdown, and MAC reduction, assembled into a machine-readable report.

Report JSON is schema-versioned and deterministic: identical inputs
produce byte-identical files (no timestamps, sorted keys).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .engine import MacLedger, analytic_macs, forward_baseline
from .errors import ValidationError
from .model import LabeledDataset, Model
from .predictor import (
    LayerStats,
    PredictionConfig,
    Scope,
    forward_predicted,
    mac_reduction,
    merge_stats,
    resolve_enabled_layers,
)

REPORT_SCHEMA = 1

BREAKDOWN_FIELDS = ("zero_diag_act", "true_pred_act", "false_pred_act", "others_act")


def topk_accuracy(logits_list, labels, k: int) -> float:
    """Fraction of samples whose label is among the k largest logits.

    Ties are broken toward the lower class index (stable sort on the
    negated logits), so the metric is deterministic.
    """
    if len(logits_list) == 0:
        raise ValidationError("topk_accuracy needs at least one sample")
    if len(logits_list) != len(labels):
        raise ValidationError(
            f"{len(logits_list)} logit vectors vs {len(labels)} labels"
        )
    if k < 1 or k > len(logits_list[0]):
        raise ValidationError(
            f"k must be in 1..{len(logits_list[0])}, got {k}"
        )
    hits = 0
    for logits, label in zip(logits_list, labels):
        top = np.argsort(-np.asarray(logits), kind="stable")[:k]
        if int(label) in top:
            hits += 1
    return hits / len(logits_list)


@dataclass
class EvalResult:
    model_name: str
    image_count: int
    config: dict  # echo of the prediction configuration
    baseline_top1: float
    baseline_top5: float
    predicted_top1: float
    predicted_top5: float
    layer_stats: list  # list[LayerStats], one per conv layer
    ledger: MacLedger  # merged predicted-pass ledger over the dataset
    mac_reduction_conv: float
    mac_reduction_net: float

    @property
    def top1_degradation(self) -> float:
        return self.baseline_top1 - self.predicted_top1

    @property
    def top5_degradation(self) -> float:
        return self.baseline_top5 - self.predicted_top5


def evaluate_model(model: Model, dataset: LabeledDataset, cfg: PredictionConfig) -> EvalResult:
    """Run baseline and predicted passes over every image and aggregate.

    top5 falls back to top-min(5, class_count) for models with fewer than
    five classes.
    """
    cfg.validate()
    model.validate()
    if len(dataset.images) == 0:
        raise ValidationError("dataset is empty")
    if int(np.max(dataset.labels)) >= model.class_count:
        raise ValidationError(
            f"label {int(np.max(dataset.labels))} out of range for "
            f"{model.class_count} classes"
        )
    enabled = resolve_enabled_layers(model, cfg)

    base_logits, pred_logits = [], []
    merged_stats = None
    merged_ledger = None
    for image in dataset.images:
        base = forward_baseline(model, image)
        trace, stats = forward_predicted(model, image, cfg)
        base_logits.append(base.logits)
        pred_logits.append(trace.logits)
        merged_stats = (
            stats
            if merged_stats is None
            else [merge_stats(a, b) for a, b in zip(merged_stats, stats)]
        )
        merged_ledger = (
            trace.ledger if merged_ledger is None else merged_ledger.merged(trace.ledger)
        )

    k5 = min(5, model.class_count)
    return EvalResult(
        model_name=model.name,
        image_count=len(dataset.images),
        config={
            "window_k": cfg.window_k,
            "zero_threshold": cfg.zero_threshold,
            "enabled_layers": [bool(e) for e in enabled],
            "top5_k": k5,
        },
        baseline_top1=topk_accuracy(base_logits, dataset.labels, 1),
        baseline_top5=topk_accuracy(base_logits, dataset.labels, k5),
        predicted_top1=topk_accuracy(pred_logits, dataset.labels, 1),
        predicted_top5=topk_accuracy(pred_logits, dataset.labels, k5),
        layer_stats=merged_stats,
        ledger=merged_ledger,
        mac_reduction_conv=mac_reduction(merged_ledger, Scope.CONV_ONLY),
        mac_reduction_net=mac_reduction(merged_ledger, Scope.WHOLE_NETWORK),
    )


def _stats_dict(s: LayerStats) -> dict:
    d = {
        "layer_index": s.layer_index,
        "per_act_macs": s.per_act_macs,
        "total_act": s.total_act,
        "zero_diag_act": s.zero_diag_act,
        "true_pred_act": s.true_pred_act,
        "false_pred_act": s.false_pred_act,
        "others_act": s.others_act,
        "predicted_count": s.predicted_count,
        "macs_baseline": s.macs_baseline,
        "macs_executed": s.macs_executed,
        "macs_saved": s.macs_saved,
    }
    if s.total_act:
        d["breakdown"] = {
            f: getattr(s, f) / s.total_act for f in BREAKDOWN_FIELDS
        }
    return d


def _aggregate_breakdowns(layer_stats) -> dict:
    """Both aggregation styles of the per-layer breakdown fractions."""
    per_layer = {f: [] for f in BREAKDOWN_FIELDS}
    totals = {f: 0 for f in BREAKDOWN_FIELDS}
    total_act = 0
    for s in layer_stats:
        if s.total_act == 0:
            continue
        for f in BREAKDOWN_FIELDS:
            per_layer[f].append(getattr(s, f) / s.total_act)
            totals[f] += getattr(s, f)
        total_act += s.total_act
    n = len(per_layer[BREAKDOWN_FIELDS[0]])
    return {
        "per_layer_average": {
            f: (sum(v) / n if n else None) for f, v in per_layer.items()
        },
        "activation_weighted": {
            f: (totals[f] / total_act if total_act else None)
            for f in BREAKDOWN_FIELDS
        },
    }


def eval_result_to_json_dict(result: EvalResult) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "kind": "evaluation",
        "model": result.model_name,
        "image_count": result.image_count,
        "config": result.config,
        "accuracy": {
            "baseline": {"top1": result.baseline_top1, "top5": result.baseline_top5},
            "predicted": {
                "top1": result.predicted_top1,
                "top5": result.predicted_top5,
            },
            "degradation": {
                "top1": result.top1_degradation,
                "top5": result.top5_degradation,
            },
        },
        "mac_reduction": {
            "conv_only": result.mac_reduction_conv,
            "whole_network": result.mac_reduction_net,
        },
        "layers": [_stats_dict(s) for s in result.layer_stats],
        "breakdown": _aggregate_breakdowns(result.layer_stats),
        "ledger": {
            "per_layer": [
                {
                    "layer_index": e.index,
                    "kind": e.kind,
                    "macs_baseline": e.macs_baseline,
                    "macs_executed": e.macs_executed,
                }
                for e in result.ledger.entries
            ],
            "total_baseline": result.ledger.total_baseline,
            "total_executed": result.ledger.total_executed,
            "conv_baseline": result.ledger.conv_baseline,
            "conv_executed": result.ledger.conv_executed,
        },
    }


def to_json_bytes(payload: dict) -> bytes:
    """Canonical JSON: sorted keys, stable float repr, trailing newline."""
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")


def eval_result_to_csv(result: EvalResult) -> str:
    """Per-conv-layer stats table."""
    buf = io.StringIO()
    fields = [
        "layer_index",
        "per_act_macs",
        "total_act",
        "zero_diag_act",
        "true_pred_act",
        "false_pred_act",
        "others_act",
        "predicted_count",
        "macs_baseline",
        "macs_executed",
        "macs_saved",
    ]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for s in result.layer_stats:
        writer.writerow([getattr(s, f) for f in fields])
    return buf.getvalue()


def correlation_report_to_csv(report) -> str:
    """Long-format rows: one per (layer, k)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "layer_index",
            "window_k",
            "zero_window_fraction",
            "sparsity",
            "grouped_fraction",
        ]
    )
    for layer in report.layers:
        for k in sorted(layer.fractions):
            writer.writerow(
                [
                    layer.layer_index,
                    k,
                    layer.fractions[k],
                    layer.sparsity,
                    layer.grouped[k],
                ]
            )
    return buf.getvalue()


def inspect_model(model: Model) -> dict:
    """Layer table with shapes and analytic MAC costs."""
    shapes = model.validate()
    ledger = analytic_macs(model)
    rows = []
    for layer, shape, entry in zip(model.layers, shapes, ledger.entries):
        if layer.kind == "conv":
            params = (
                f"{layer.in_channels}->{layer.out_channels} "
                f"{layer.kernel_h}x{layer.kernel_w} s{layer.stride} p{layer.pad}"
            )
            per_act = layer.macs_per_activation
        elif layer.kind == "maxpool":
            params = f"k{layer.kernel} s{layer.stride}"
            per_act = 0
        elif layer.kind == "linear":
            params = f"{layer.in_features}->{layer.out_features}"
            per_act = 0
        else:
            params = ""
            per_act = 0
        rows.append(
            {
                "layer_index": entry.index,
                "kind": layer.kind,
                "params": params,
                "output_shape": list(shape) if hasattr(shape, "__len__") else shape,
                "per_act_macs": per_act,
                "macs": entry.macs_baseline,
            }
        )
    return {
        "schema": REPORT_SCHEMA,
        "kind": "inspect",
        "model": model.name,
        "input_shape": list(model.input_shape),
        "class_count": model.class_count,
        "layers": rows,
        "total_macs": ledger.total_baseline,
        "conv_macs": ledger.conv_baseline,
    }
