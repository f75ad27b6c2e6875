"""Command-line surface.

    zvpred inspect  --model m.zvpm [--out report.json]
    zvpred profile  --model m.zvpm --images i.idx --labels l.idx
                    [--window 1,2,3,4,5] [--threshold T] [--limit N]
                    [--out report.json] [--format json|csv]
    zvpred evaluate --model m.zvpm --images i.idx --labels l.idx
                    --window K [--layers all|CSV] [--threshold T]
                    [--scope conv|net] [--limit N]
                    [--out report.json] [--format json|csv]

Exit codes: 0 success, 2 validation/format error, 1 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from .correlation import profile_model
from .errors import FormatError, UndefinedMetricError, ValidationError
from .model import LabeledDataset, load_idx_dataset, load_model
from .predictor import PredictionConfig, resolve_enabled_layers
from .report import (
    correlation_report_to_csv,
    eval_result_to_csv,
    eval_result_to_json_dict,
    evaluate_model,
    inspect_model,
    to_json_bytes,
)


def _write_output(path, fmt, json_payload, csv_text):
    if path is None:
        return
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(csv_text)
    else:
        with open(path, "wb") as f:
            f.write(to_json_bytes(json_payload))


def _load_dataset(args) -> LabeledDataset:
    dataset = load_idx_dataset(
        args.images, args.labels, normalize=not args.no_normalize
    )
    if args.limit is not None:
        if args.limit < 1:
            raise ValidationError("--limit must be >= 1")
        dataset = LabeledDataset(
            images=dataset.images[: args.limit],
            labels=dataset.labels[: args.limit],
        )
    return dataset


def _parse_layers(spec: str, n_conv: int):
    if spec is None:
        return None
    if spec == "all":
        return tuple(True for _ in range(n_conv))
    try:
        chosen = {int(tok) for tok in spec.split(",") if tok.strip() != ""}
    except ValueError as e:
        raise ValidationError(f"--layers expects 'all' or a CSV of ordinals: {e}")
    for i in chosen:
        if not 0 <= i < n_conv:
            raise ValidationError(
                f"--layers ordinal {i} out of range (model has {n_conv} conv layers)"
            )
    return tuple(i in chosen for i in range(n_conv))


def cmd_inspect(args) -> int:
    model = load_model(args.model)
    summary = inspect_model(model)
    header = f"{'idx':>3}  {'kind':<8} {'params':<24} {'output':<14} {'MACs':>12}"
    print(f"model {summary['model']}  input {tuple(model.input_shape)}  "
          f"classes {model.class_count}")
    print(header)
    print("-" * len(header))
    for row in summary["layers"]:
        shape = row["output_shape"]
        shape_txt = "x".join(str(d) for d in shape) if isinstance(shape, list) else str(shape)
        print(
            f"{row['layer_index']:>3}  {row['kind']:<8} {row['params']:<24} "
            f"{shape_txt:<14} {row['macs']:>12}"
        )
    print("-" * len(header))
    print(f"total MACs {summary['total_macs']}  (conv only {summary['conv_macs']})")
    _write_output(args.out, "json", summary, None)
    return 0


def cmd_profile(args) -> int:
    model = load_model(args.model)
    dataset = _load_dataset(args)
    try:
        ks = [int(tok) for tok in str(args.window).split(",") if tok.strip() != ""]
    except ValueError as e:
        raise ValidationError(f"--window expects a CSV of sizes in 1..5: {e}")
    report = profile_model(model, dataset, ks, threshold=args.threshold)
    for layer in report.layers:
        parts = ", ".join(
            f"k={k}: {layer.fractions[k]:.4f}"
            for k in sorted(layer.fractions)
            if layer.fractions[k] is not None
        )
        print(f"layer {layer.layer_index} sparsity {layer.sparsity:.4f}  {parts}")
    _write_output(
        args.out, args.format, report.to_json_dict(), correlation_report_to_csv(report)
    )
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    dataset = _load_dataset(args)
    cfg = PredictionConfig(
        window_k=args.window,
        enabled_layers=_parse_layers(args.layers, len(model.conv_layers())),
        zero_threshold=args.threshold,
    )
    result = evaluate_model(model, dataset, cfg)
    reduction = (
        result.mac_reduction_conv if args.scope == "conv" else result.mac_reduction_net
    )
    print(
        f"images {result.image_count}  window {args.window}x{args.window}  "
        f"enabled {resolve_enabled_layers(model, cfg)}"
    )
    print(
        f"top-1 baseline {result.baseline_top1:.4f} -> predicted "
        f"{result.predicted_top1:.4f} (degradation {result.top1_degradation:+.4f})"
    )
    print(
        f"top-5 baseline {result.baseline_top5:.4f} -> predicted "
        f"{result.predicted_top5:.4f} (degradation {result.top5_degradation:+.4f})"
    )
    print(
        f"MAC reduction [{args.scope}] {100.0 * reduction:.2f}%  "
        f"(conv {100.0 * result.mac_reduction_conv:.2f}%, "
        f"net {100.0 * result.mac_reduction_net:.2f}%)"
    )
    _write_output(
        args.out,
        args.format,
        eval_result_to_json_dict(result),
        eval_result_to_csv(result),
    )
    return 0


def _add_dataset_args(p):
    p.add_argument("--images", required=True, help="IDX image file")
    p.add_argument("--labels", required=True, help="IDX label file")
    p.add_argument("--limit", type=int, default=None, help="use only the first N images")
    p.add_argument(
        "--no-normalize",
        action="store_true",
        help="keep raw 0..255 pixel values instead of scaling to [0,1]",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zvpred",
        description="CNN inference with zero-value prediction: MAC savings, "
        "activation breakdown, and spatial-correlation profiling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print layer table and analytic MAC costs")
    p.add_argument("--model", required=True, help="ZVPM model file")
    p.add_argument("--out", default=None, help="write JSON summary here")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("profile", help="measure spatial correlation of zero activations")
    p.add_argument("--model", required=True, help="ZVPM model file")
    _add_dataset_args(p)
    p.add_argument(
        "--window",
        default="1,2,3,4,5",
        help="CSV of window sizes in 1..5 (default: all)",
    )
    p.add_argument("--threshold", type=float, default=0.0, help="zero threshold")
    p.add_argument("--out", default=None, help="write the report here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("evaluate", help="baseline vs predicted accuracy and MAC savings")
    p.add_argument("--model", required=True, help="ZVPM model file")
    _add_dataset_args(p)
    p.add_argument("--window", type=int, required=True, help="prediction window size k (2..5)")
    p.add_argument(
        "--layers",
        default=None,
        help="'all' or CSV of conv-layer ordinals to enable "
        "(default: every conv layer followed by ReLU)",
    )
    p.add_argument("--threshold", type=float, default=0.0, help="zero threshold")
    p.add_argument("--scope", choices=("conv", "net"), default="conv")
    p.add_argument("--out", default=None, help="write the report here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FormatError, UndefinedMetricError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
