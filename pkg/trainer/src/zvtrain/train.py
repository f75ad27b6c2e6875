"""Deterministic CPU training, evaluation, and the retraining flow.

Retraining continues from the trained baseline weights with the
predictor embedded in the forward pass; backpropagation itself is
untouched (the predictor contributes a constant mask). Fixed seeds make
runs, and therefore exported files, reproducible.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .data import make_shape_dataset
from .model import PredictorSettings, SmallCNN, TrainConfig


def _seed_everything(seed: int):
    torch.manual_seed(seed)
    np.random.seed(seed % 2**32)


def to_tensors(images_u8, labels):
    x = torch.from_numpy(images_u8.astype(np.float32) / 255.0).unsqueeze(1)
    y = torch.from_numpy(np.asarray(labels).astype(np.int64))
    return x, y


@dataclass
class EvalStats:
    accuracy: float
    mac_reduction_conv: float  # 0.0 when the predictor is off


def evaluate(net: SmallCNN, x, y, predictor: PredictorSettings | None = None,
             batch_size: int = 256) -> EvalStats:
    """Top-1 accuracy, optionally with the zero predictor active, plus the
    conv MAC reduction implied by the skipped-cell counts."""
    net.configure_predictor(predictor)
    net.set_collect_stats(predictor is not None)
    costs = net.conv_mac_costs()
    correct = 0
    saved = 0
    baseline = 0
    net.eval()
    with torch.no_grad():
        for start in range(0, len(x), batch_size):
            xb = x[start : start + batch_size]
            yb = y[start : start + batch_size]
            logits = net(xb)
            correct += int((logits.argmax(dim=1) == yb).sum().item())
            for p, (per_act, out_elems) in zip(net.predictors, costs):
                baseline += out_elems * per_act * len(xb)
                if p.enabled:
                    saved += p.last_predicted * per_act
    net.set_collect_stats(False)
    net.configure_predictor(None)
    return EvalStats(
        accuracy=correct / len(x),
        mac_reduction_conv=saved / baseline if baseline else 0.0,
    )


def train_epochs(net: SmallCNN, cfg: TrainConfig, x, y, epochs: int,
                 predictor: PredictorSettings | None, seed: int):
    """SGD with per-epoch lr decay; batch order drawn from a seeded
    generator so trajectories are reproducible."""
    net.configure_predictor(predictor)
    opt = torch.optim.SGD(
        net.parameters(), lr=cfg.learning_rate, momentum=cfg.momentum
    )
    loss_fn = nn.CrossEntropyLoss()
    gen = torch.Generator().manual_seed(seed)
    net.train()
    for epoch in range(epochs):
        order = torch.randperm(len(x), generator=gen)
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            opt.zero_grad()
            loss = loss_fn(net(x[idx]), y[idx])
            loss.backward()
            opt.step()
        for group in opt.param_groups:
            group["lr"] *= cfg.lr_decay
    net.configure_predictor(None)
    return net


@dataclass
class TrainOutcome:
    net: SmallCNN
    retrained_net: SmallCNN | None
    summary: dict
    test_images: np.ndarray  # held-out uint8 images, exportable as IDX
    test_labels: np.ndarray


def run_training(cfg: TrainConfig, retrain_window: int | None = None) -> TrainOutcome:
    """Train the baseline (predictor per cfg.predictor, usually off), then
    optionally retrain a copy with the predictor embedded.

    The summary reports accuracy with and without prediction for both
    models and the measured MAC-reduction change after retraining (sign
    only observed, never assumed).
    """
    _seed_everything(cfg.seed)
    train_images, train_labels = make_shape_dataset(
        cfg.train_count, seed=cfg.seed * 7919 + 1, size=cfg.input_shape[1]
    )
    test_images, test_labels = make_shape_dataset(
        cfg.test_count, seed=cfg.seed * 7919 + 2, size=cfg.input_shape[1]
    )
    xtr, ytr = to_tensors(train_images, train_labels)
    xte, yte = to_tensors(test_images, test_labels)

    net = SmallCNN(cfg)
    train_epochs(net, cfg, xtr, ytr, cfg.epochs, cfg.predictor, seed=cfg.seed + 1)

    eval_k = retrain_window or (cfg.predictor.window_k if cfg.predictor else None)
    base = evaluate(net, xte, yte, None)
    summary = {
        "name": cfg.name,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "baseline_accuracy": base.accuracy,
    }

    retrained = None
    if eval_k is not None:
        pred_settings = PredictorSettings(window_k=eval_k)
        with_pred = evaluate(net, xte, yte, pred_settings)
        summary.update(
            {
                "window_k": eval_k,
                "predicted_accuracy": with_pred.accuracy,
                "top1_degradation": base.accuracy - with_pred.accuracy,
                "mac_reduction_conv": with_pred.mac_reduction_conv,
            }
        )
        if retrain_window is not None:
            retrained = copy.deepcopy(net)
            train_epochs(
                retrained, cfg, xtr, ytr, cfg.retrain_epochs, pred_settings,
                seed=cfg.seed + 2,
            )
            re_pred = evaluate(retrained, xte, yte, pred_settings)
            summary.update(
                {
                    "retrained_predicted_accuracy": re_pred.accuracy,
                    "retrained_top1_degradation": base.accuracy - re_pred.accuracy,
                    "retrained_mac_reduction_conv": re_pred.mac_reduction_conv,
                    "mac_reduction_delta": re_pred.mac_reduction_conv
                    - with_pred.mac_reduction_conv,
                }
            )
    return TrainOutcome(
        net=net,
        retrained_net=retrained,
        summary=summary,
        test_images=test_images,
        test_labels=test_labels,
    )
