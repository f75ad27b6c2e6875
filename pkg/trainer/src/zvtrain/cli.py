"""Trainer CLI.

    zvtrain train --config cfg.json --out model.zvpm [--retrain-window K]
                  [--baseline-out base.zvpm] [--summary summary.json]

Trains per the config, optionally retrains with the zero predictor
embedded in the forward pass, exports the result as a ZVPM model, and
(when the config asks) the held-out set as IDX files. Exit codes: 0
success, 2 bad config, 1 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .data import export_dataset
from .model import ConfigError, TrainConfig, export_zvpm
from .train import run_training


def cmd_train(args) -> int:
    cfg = TrainConfig.from_json(args.config)
    outcome = run_training(cfg, retrain_window=args.retrain_window)
    final = outcome.retrained_net if outcome.retrained_net is not None else outcome.net
    export_zvpm(final, args.out)
    print(f"model written to {args.out}")
    if args.baseline_out and outcome.retrained_net is not None:
        export_zvpm(outcome.net, args.baseline_out)
        print(f"pre-retraining baseline written to {args.baseline_out}")
    if cfg.export_eval_data:
        paths = cfg.export_eval_data
        export_dataset(
            outcome.test_images, outcome.test_labels,
            paths["images"], paths["labels"],
        )
        print(f"held-out set written to {paths['images']} / {paths['labels']}")
    for key, value in outcome.summary.items():
        print(f"  {key}: {value}")
    if args.summary:
        with open(args.summary, "w") as f:
            json.dump(outcome.summary, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zvtrain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", help="train a small CNN and export it as ZVPM")
    p.add_argument("--config", required=True, help="training config JSON")
    p.add_argument("--out", required=True, help="output ZVPM path")
    p.add_argument(
        "--retrain-window", type=int, default=None,
        help="after baseline training, retrain with the predictor embedded "
        "at this window size (2..5)",
    )
    p.add_argument("--baseline-out", default=None,
                   help="also export the pre-retraining baseline here")
    p.add_argument("--summary", default=None, help="write the metrics summary JSON")
    p.set_defaults(func=cmd_train)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
