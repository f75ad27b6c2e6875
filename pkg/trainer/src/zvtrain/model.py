"""Architecture config, the torch network, and ZVPM export.

The architecture mirrors the engine's layer vocabulary (conv / relu /
maxpool / flatten / linear); input channels and linear input features
are inferred by shape propagation. One WindowZeroPredictor slot exists
per conv layer and is applied to that conv's post-ReLU ofmap (or to the
raw conv output if no ReLU follows and the layer is explicitly enabled),
mirroring the engine's placement.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .predictor import WindowZeroPredictor

ZVPM_MAGIC = b"ZVPM"
ZVPM_VERSION = 1

KINDS = ("conv", "relu", "maxpool", "flatten", "linear")


class ConfigError(ValueError):
    """Architecture or training config that cannot be realized."""


@dataclass
class PredictorSettings:
    window_k: int
    zero_threshold: float = 0.0
    enabled_layers: list | None = None  # None -> conv-followed-by-ReLU default

    @classmethod
    def from_dict(cls, d):
        return cls(
            window_k=int(d["window_k"]),
            zero_threshold=float(d.get("zero_threshold", 0.0)),
            enabled_layers=d.get("enabled_layers"),
        )


@dataclass
class TrainConfig:
    name: str
    input_shape: tuple  # (C, H, W)
    class_count: int
    layers: list  # list of dicts with "kind" plus per-kind fields
    epochs: int = 2
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    lr_decay: float = 0.7  # multiplied into the lr after each epoch
    seed: int = 0
    train_count: int = 4096
    test_count: int = 1024
    predictor: PredictorSettings | None = None
    retrain_epochs: int = 2
    export_eval_data: dict | None = None  # {"images": path, "labels": path}

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path) as f:
            raw = json.load(f)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw) -> "TrainConfig":
        try:
            cfg = cls(
                name=str(raw["name"]),
                input_shape=tuple(int(v) for v in raw["input_shape"]),
                class_count=int(raw["class_count"]),
                layers=list(raw["layers"]),
                epochs=int(raw.get("epochs", 2)),
                batch_size=int(raw.get("batch_size", 64)),
                learning_rate=float(raw.get("learning_rate", 0.05)),
                momentum=float(raw.get("momentum", 0.9)),
                lr_decay=float(raw.get("lr_decay", 0.7)),
                seed=int(raw.get("seed", 0)),
                train_count=int(raw.get("train_count", 4096)),
                test_count=int(raw.get("test_count", 1024)),
                predictor=(
                    PredictorSettings.from_dict(raw["predictor"])
                    if raw.get("predictor")
                    else None
                ),
                retrain_epochs=int(raw.get("retrain_epochs", 2)),
                export_eval_data=raw.get("export_eval_data"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad training config: {e}") from e
        propagate_shapes(cfg.input_shape, cfg.layers, cfg.class_count)
        return cfg


def propagate_shapes(input_shape, layers, class_count):
    """Infer per-layer input sizes; raises ConfigError when layers do not
    compose or use a kind the ZVPM container cannot express."""
    c, h, w = input_shape
    cur = (c, h, w)
    resolved = []
    for i, entry in enumerate(layers):
        kind = entry.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"layer {i}: kind {kind!r} not expressible in ZVPM")
        if kind == "conv":
            if not isinstance(cur, tuple):
                raise ConfigError(f"layer {i}: conv after flatten")
            k = int(entry.get("kernel", 3))
            stride = int(entry.get("stride", 1))
            pad = int(entry.get("pad", 0))
            out_c = int(entry["out_channels"])
            oh = (cur[1] + 2 * pad - k) // stride + 1
            ow = (cur[2] + 2 * pad - k) // stride + 1
            if oh < 1 or ow < 1:
                raise ConfigError(f"layer {i}: conv output collapses to {oh}x{ow}")
            resolved.append(
                {
                    "kind": "conv",
                    "in_channels": cur[0],
                    "out_channels": out_c,
                    "kernel": k,
                    "stride": stride,
                    "pad": pad,
                }
            )
            cur = (out_c, oh, ow)
        elif kind == "relu":
            resolved.append({"kind": "relu"})
        elif kind == "maxpool":
            if not isinstance(cur, tuple):
                raise ConfigError(f"layer {i}: maxpool after flatten")
            k = int(entry.get("kernel", 2))
            stride = int(entry.get("stride", k))
            if k > cur[1] or k > cur[2]:
                raise ConfigError(f"layer {i}: pool kernel exceeds {cur[1]}x{cur[2]}")
            cur = (cur[0], (cur[1] - k) // stride + 1, (cur[2] - k) // stride + 1)
            resolved.append({"kind": "maxpool", "kernel": k, "stride": stride})
        elif kind == "flatten":
            if not isinstance(cur, tuple):
                raise ConfigError(f"layer {i}: flatten twice")
            cur = cur[0] * cur[1] * cur[2]
            resolved.append({"kind": "flatten"})
        elif kind == "linear":
            if isinstance(cur, tuple):
                raise ConfigError(f"layer {i}: linear before flatten")
            out_f = int(entry["out_features"])
            resolved.append(
                {"kind": "linear", "in_features": cur, "out_features": out_f}
            )
            cur = out_f
    if isinstance(cur, tuple) or cur != class_count:
        raise ConfigError(
            f"network output {cur} does not match class_count {class_count}"
        )
    return resolved


class SmallCNN(nn.Module):
    """Plain feed-forward CNN with a predictor slot per conv layer."""

    def __init__(self, cfg: TrainConfig):
        super().__init__()
        self.arch = propagate_shapes(cfg.input_shape, cfg.layers, cfg.class_count)
        self.input_shape = cfg.input_shape
        self.class_count = cfg.class_count
        self.name = cfg.name
        mods = []
        for spec in self.arch:
            if spec["kind"] == "conv":
                mods.append(
                    nn.Conv2d(
                        spec["in_channels"],
                        spec["out_channels"],
                        spec["kernel"],
                        stride=spec["stride"],
                        padding=spec["pad"],
                    )
                )
            elif spec["kind"] == "relu":
                mods.append(nn.ReLU())
            elif spec["kind"] == "maxpool":
                mods.append(nn.MaxPool2d(spec["kernel"], stride=spec["stride"]))
            elif spec["kind"] == "flatten":
                mods.append(nn.Flatten())
            else:
                mods.append(nn.Linear(spec["in_features"], spec["out_features"]))
        self.ops = nn.ModuleList(mods)
        self._conv_positions = [
            i for i, s in enumerate(self.arch) if s["kind"] == "conv"
        ]
        self.predictors = nn.ModuleList(
            [WindowZeroPredictor(2, enabled=False) for _ in self._conv_positions]
        )

    @property
    def n_conv(self) -> int:
        return len(self._conv_positions)

    def conv_followed_by_relu(self):
        return [
            i + 1 < len(self.arch) and self.arch[i + 1]["kind"] == "relu"
            for i in self._conv_positions
        ]

    def configure_predictor(self, settings: PredictorSettings | None):
        """Install (or clear) the zero predictor on every conv layer."""
        if settings is None:
            for p in self.predictors:
                p.enabled = False
            return
        enabled = settings.enabled_layers
        if enabled is None:
            enabled = self.conv_followed_by_relu()
        if len(enabled) != self.n_conv:
            raise ConfigError(
                f"enabled_layers has {len(enabled)} entries for {self.n_conv} "
                "conv layers"
            )
        for p, flag in zip(self.predictors, enabled):
            if not 2 <= settings.window_k <= 5:
                raise ConfigError(f"window_k must be in 2..5, got {settings.window_k}")
            p.window_k = settings.window_k
            p.threshold = settings.zero_threshold
            p.enabled = bool(flag)

    def set_collect_stats(self, flag: bool):
        for p in self.predictors:
            p.collect_stats = flag
            p.last_predicted = 0
            p.last_total = 0

    def forward(self, x):
        ordinal = -1
        pending = None  # conv ordinal whose post-ReLU map awaits masking
        for i, (spec, mod) in enumerate(zip(self.arch, self.ops)):
            x = mod(x)
            if spec["kind"] == "conv":
                ordinal += 1
                followed = (
                    i + 1 < len(self.arch) and self.arch[i + 1]["kind"] == "relu"
                )
                if followed:
                    pending = ordinal
                else:
                    x = self.predictors[ordinal](x)
                    pending = None
            elif spec["kind"] == "relu" and pending is not None:
                x = self.predictors[pending](x)
                pending = None
        return x

    def conv_mac_costs(self):
        """(per_activation_macs, ofmap_elements) per conv layer, per image."""
        c, h, w = self.input_shape
        cur = (c, h, w)
        costs = []
        for spec in self.arch:
            if spec["kind"] == "conv":
                k, s, p = spec["kernel"], spec["stride"], spec["pad"]
                oh = (cur[1] + 2 * p - k) // s + 1
                ow = (cur[2] + 2 * p - k) // s + 1
                per_act = spec["in_channels"] * k * k
                costs.append((per_act, spec["out_channels"] * oh * ow))
                cur = (spec["out_channels"], oh, ow)
            elif spec["kind"] == "maxpool":
                k, s = spec["kernel"], spec["stride"]
                cur = (cur[0], (cur[1] - k) // s + 1, (cur[2] - k) // s + 1)
            elif spec["kind"] == "flatten":
                cur = cur[0] * cur[1] * cur[2]
        return costs


def export_zvpm(net: SmallCNN, path):
    """Write the network as a ZVPM file (the engine's model container).

    The container is written directly from its documented layout: magic,
    u32 LE version, u64 LE header length, canonical JSON header, float32
    LE weight/bias blobs in header order.
    """
    header_layers = []
    for spec in net.arch:
        if spec["kind"] == "conv":
            header_layers.append(
                {
                    "kind": "conv",
                    "in_channels": spec["in_channels"],
                    "out_channels": spec["out_channels"],
                    "kernel_h": spec["kernel"],
                    "kernel_w": spec["kernel"],
                    "stride": spec["stride"],
                    "pad": spec["pad"],
                }
            )
        elif spec["kind"] == "maxpool":
            header_layers.append(
                {"kind": "maxpool", "kernel": spec["kernel"], "stride": spec["stride"]}
            )
        elif spec["kind"] == "linear":
            header_layers.append(
                {
                    "kind": "linear",
                    "in_features": spec["in_features"],
                    "out_features": spec["out_features"],
                }
            )
        else:
            header_layers.append({"kind": spec["kind"]})
    header = {
        "name": net.name,
        "input_shape": list(net.input_shape),
        "class_count": net.class_count,
        "layers": header_layers,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    with open(path, "wb") as f:
        f.write(ZVPM_MAGIC)
        f.write(struct.pack("<I", ZVPM_VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for mod in net.ops:
            if isinstance(mod, (nn.Conv2d, nn.Linear)):
                weights = mod.weight.detach().cpu().numpy().astype("<f4")
                bias = mod.bias.detach().cpu().numpy().astype("<f4")
                f.write(np.ascontiguousarray(weights).tobytes())
                f.write(np.ascontiguousarray(bias).tobytes())
