"""On-disk model container (ZVPM) and IDX dataset loading.

ZVPM layout (all integers little-endian):

    b"ZVPM" | u32 version=1 | u64 header_len | header (UTF-8 JSON) | blobs

The header describes layer kinds and shapes; blobs are the raw float32
little-endian weight/bias arrays in header order (per conv and linear
layer: weights first, then bias). The header JSON is serialized
canonically (sorted keys, no whitespace) so save -> load -> save is
byte-identical.

IDX is the classic MNIST container: big-endian u32 header fields followed
by unsigned bytes.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Union

import numpy as np

from .errors import DataIOError, FormatError, ValidationError
from .tensor import DTYPE, Shape3, check_shape

ZVPM_MAGIC = b"ZVPM"
ZVPM_VERSION = 1

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass(eq=False)
class ConvSpec:
    """2-D convolution: out_channels filters of in_channels x kernel_h x kernel_w."""

    in_channels: int
    out_channels: int
    kernel_h: int
    kernel_w: int
    stride: int
    pad: int
    weights: np.ndarray = field(repr=False)  # (out, in, kh, kw) float32
    bias: np.ndarray = field(repr=False)  # (out,) float32

    kind = "conv"

    @property
    def macs_per_activation(self) -> int:
        """MAC cost of one output activation: in_channels * kernel_h * kernel_w."""
        return self.in_channels * self.kernel_h * self.kernel_w

    def validate(self):
        if self.stride < 1:
            raise ValidationError(f"conv stride must be >= 1, got {self.stride}")
        if self.pad < 0:
            raise ValidationError(f"conv pad must be >= 0, got {self.pad}")
        for name, v in (
            ("in_channels", self.in_channels),
            ("out_channels", self.out_channels),
            ("kernel_h", self.kernel_h),
            ("kernel_w", self.kernel_w),
        ):
            if v < 1:
                raise ValidationError(f"conv {name} must be >= 1, got {v}")
        expect = (self.out_channels, self.in_channels, self.kernel_h, self.kernel_w)
        if self.weights.size != int(np.prod(expect)):
            raise ValidationError(
                f"conv weight count {self.weights.size} != "
                f"out*in*kh*kw = {int(np.prod(expect))}"
            )
        self.weights = np.ascontiguousarray(self.weights, dtype=DTYPE).reshape(expect)
        self.bias = np.ascontiguousarray(self.bias, dtype=DTYPE).reshape(-1)
        if self.bias.size != self.out_channels:
            raise ValidationError(
                f"conv bias count {self.bias.size} != out_channels {self.out_channels}"
            )


@dataclass(eq=False)
class ReLUSpec:
    kind = "relu"

    def validate(self):
        pass


@dataclass(eq=False)
class MaxPoolSpec:
    kernel: int
    stride: int

    kind = "maxpool"

    def validate(self):
        if self.kernel < 1:
            raise ValidationError(f"maxpool kernel must be >= 1, got {self.kernel}")
        if self.stride < 1:
            raise ValidationError(f"maxpool stride must be >= 1, got {self.stride}")


@dataclass(eq=False)
class FlattenSpec:
    kind = "flatten"

    def validate(self):
        pass


@dataclass(eq=False)
class LinearSpec:
    in_features: int
    out_features: int
    weights: np.ndarray = field(repr=False)  # (out, in) float32
    bias: np.ndarray = field(repr=False)  # (out,) float32

    kind = "linear"

    def validate(self):
        if self.in_features < 1 or self.out_features < 1:
            raise ValidationError("linear feature counts must be >= 1")
        expect = (self.out_features, self.in_features)
        if self.weights.size != expect[0] * expect[1]:
            raise ValidationError(
                f"linear weight count {self.weights.size} != out*in = "
                f"{expect[0] * expect[1]}"
            )
        self.weights = np.ascontiguousarray(self.weights, dtype=DTYPE).reshape(expect)
        self.bias = np.ascontiguousarray(self.bias, dtype=DTYPE).reshape(-1)
        if self.bias.size != self.out_features:
            raise ValidationError(
                f"linear bias count {self.bias.size} != out_features "
                f"{self.out_features}"
            )


LayerSpec = Union[ConvSpec, ReLUSpec, MaxPoolSpec, FlattenSpec, LinearSpec]


@dataclass(eq=False)
class Model:
    name: str
    input_shape: Shape3
    layers: list  # list[LayerSpec]
    class_count: int

    def conv_layers(self):
        """(layer_index, ConvSpec) pairs in network order."""
        return [(i, l) for i, l in enumerate(self.layers) if l.kind == "conv"]

    def validate(self):
        """Check every layer and the end-to-end shape composition."""
        if not self.layers:
            raise ValidationError("model has no layers")
        if self.class_count < 1:
            raise ValidationError("class_count must be >= 1")
        self.input_shape = check_shape(self.input_shape)
        for layer in self.layers:
            layer.validate()
        if not any(l.kind == "conv" for l in self.layers):
            raise ValidationError("model must contain at least one conv layer")
        shapes = layer_output_shapes(self)
        final = shapes[-1]
        if isinstance(final, Shape3) or final != self.class_count:
            raise ValidationError(
                f"final layer output {final} does not match class_count "
                f"{self.class_count}"
            )
        return shapes


def conv_output_hw(h: int, w: int, layer: ConvSpec) -> tuple:
    oh = (h + 2 * layer.pad - layer.kernel_h) // layer.stride + 1
    ow = (w + 2 * layer.pad - layer.kernel_w) // layer.stride + 1
    return oh, ow


def layer_output_shapes(model: Model):
    """Propagate the input shape through the layer list.

    Returns one entry per layer: a Shape3 while the value is still a feature
    map, an int feature count after flatten. Raises ValidationError when
    consecutive layers do not compose.
    """
    cur = model.input_shape
    shapes = []
    for i, layer in enumerate(model.layers):
        if layer.kind == "conv":
            if not isinstance(cur, Shape3):
                raise ValidationError(f"layer {i}: conv applied to flat vector")
            if cur.channels != layer.in_channels:
                raise ValidationError(
                    f"layer {i}: conv expects {layer.in_channels} channels, "
                    f"input has {cur.channels}"
                )
            oh, ow = conv_output_hw(cur.height, cur.width, layer)
            if oh < 1 or ow < 1:
                raise ValidationError(
                    f"layer {i}: conv output {oh}x{ow} is empty for input "
                    f"{cur.height}x{cur.width}"
                )
            cur = Shape3(layer.out_channels, oh, ow)
        elif layer.kind == "relu":
            pass  # shape preserved, works on maps and vectors
        elif layer.kind == "maxpool":
            if not isinstance(cur, Shape3):
                raise ValidationError(f"layer {i}: maxpool applied to flat vector")
            if layer.kernel > cur.height or layer.kernel > cur.width:
                raise ValidationError(
                    f"layer {i}: maxpool kernel {layer.kernel} exceeds input "
                    f"{cur.height}x{cur.width}"
                )
            oh = (cur.height - layer.kernel) // layer.stride + 1
            ow = (cur.width - layer.kernel) // layer.stride + 1
            cur = Shape3(cur.channels, oh, ow)
        elif layer.kind == "flatten":
            if not isinstance(cur, Shape3):
                raise ValidationError(f"layer {i}: flatten applied to flat vector")
            cur = cur.channels * cur.height * cur.width
        elif layer.kind == "linear":
            if isinstance(cur, Shape3):
                raise ValidationError(
                    f"layer {i}: linear applied to un-flattened feature map"
                )
            if cur != layer.in_features:
                raise ValidationError(
                    f"layer {i}: linear expects {layer.in_features} features, "
                    f"input has {cur}"
                )
            cur = layer.out_features
        else:
            raise ValidationError(f"layer {i}: unknown kind {layer.kind!r}")
        shapes.append(cur)
    return shapes


# --- ZVPM serialization ---


def _layer_header(layer) -> dict:
    if layer.kind == "conv":
        return {
            "kind": "conv",
            "in_channels": layer.in_channels,
            "out_channels": layer.out_channels,
            "kernel_h": layer.kernel_h,
            "kernel_w": layer.kernel_w,
            "stride": layer.stride,
            "pad": layer.pad,
        }
    if layer.kind == "maxpool":
        return {"kind": "maxpool", "kernel": layer.kernel, "stride": layer.stride}
    if layer.kind == "linear":
        return {
            "kind": "linear",
            "in_features": layer.in_features,
            "out_features": layer.out_features,
        }
    return {"kind": layer.kind}


def save_model(model: Model, path) -> None:
    """Write a validated model to a ZVPM file."""
    model.validate()
    header = {
        "name": model.name,
        "input_shape": list(model.input_shape),
        "class_count": model.class_count,
        "layers": [_layer_header(l) for l in model.layers],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    with open(path, "wb") as f:
        f.write(ZVPM_MAGIC)
        f.write(struct.pack("<I", ZVPM_VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for layer in model.layers:
            if layer.kind in ("conv", "linear"):
                f.write(np.ascontiguousarray(layer.weights, dtype="<f4").tobytes())
                f.write(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise DataIOError(f"truncated file while reading {what}")
    return data


def _layer_from_header(i: int, entry: dict, f: BinaryIO):
    def req(key):
        if key not in entry:
            raise FormatError(f"layer {i}: missing field {key!r}")
        v = entry[key]
        if not isinstance(v, int) or isinstance(v, bool):
            raise FormatError(f"layer {i}: field {key!r} must be an integer")
        return v

    kind = entry.get("kind")
    if kind == "conv":
        out_c, in_c = req("out_channels"), req("in_channels")
        kh, kw = req("kernel_h"), req("kernel_w")
        if min(out_c, in_c, kh, kw) < 1:
            raise ValidationError(f"layer {i}: non-positive conv dimension")
        n_w = out_c * in_c * kh * kw
        weights = np.frombuffer(
            _read_exact(f, 4 * n_w, f"conv weights of layer {i}"), dtype="<f4"
        ).reshape(out_c, in_c, kh, kw)
        bias = np.frombuffer(
            _read_exact(f, 4 * out_c, f"conv bias of layer {i}"), dtype="<f4"
        )
        return ConvSpec(
            in_channels=in_c,
            out_channels=out_c,
            kernel_h=kh,
            kernel_w=kw,
            stride=req("stride"),
            pad=req("pad"),
            weights=weights.astype(DTYPE),
            bias=bias.astype(DTYPE),
        )
    if kind == "relu":
        return ReLUSpec()
    if kind == "maxpool":
        return MaxPoolSpec(kernel=req("kernel"), stride=req("stride"))
    if kind == "flatten":
        return FlattenSpec()
    if kind == "linear":
        out_f, in_f = req("out_features"), req("in_features")
        if min(out_f, in_f) < 1:
            raise ValidationError(f"layer {i}: non-positive linear dimension")
        weights = np.frombuffer(
            _read_exact(f, 4 * out_f * in_f, f"linear weights of layer {i}"),
            dtype="<f4",
        ).reshape(out_f, in_f)
        bias = np.frombuffer(
            _read_exact(f, 4 * out_f, f"linear bias of layer {i}"), dtype="<f4"
        )
        return LinearSpec(
            in_features=in_f,
            out_features=out_f,
            weights=weights.astype(DTYPE),
            bias=bias.astype(DTYPE),
        )
    raise FormatError(f"layer {i}: unknown layer kind {kind!r}")


def load_model(path) -> Model:
    """Load and fully validate a ZVPM file."""
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != ZVPM_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {ZVPM_MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != ZVPM_VERSION:
            raise FormatError(f"unsupported ZVPM version {version}")
        (header_len,) = struct.unpack("<Q", _read_exact(f, 8, "header length"))
        header_bytes = _read_exact(f, header_len, "header")
        try:
            header = json.loads(header_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise FormatError(f"malformed header: {e}") from e
        for key in ("name", "input_shape", "class_count", "layers"):
            if key not in header:
                raise FormatError(f"header missing field {key!r}")
        layers = [
            _layer_from_header(i, entry, f)
            for i, entry in enumerate(header["layers"])
        ]
        trailing = f.read(1)
        if trailing:
            raise FormatError("trailing bytes after weight blobs")
    model = Model(
        name=str(header["name"]),
        input_shape=check_shape(header["input_shape"]),
        layers=layers,
        class_count=int(header["class_count"]),
    )
    model.validate()
    return model


# --- IDX dataset loading ---


@dataclass(eq=False)
class LabeledDataset:
    images: list  # list of (1, H, W) float32 tensors
    labels: np.ndarray  # (N,) int64 class indices

    def __len__(self):
        return len(self.images)


def _read_idx_header(f: BinaryIO, n_fields: int, what: str):
    raw = _read_exact(f, 4 * n_fields, f"{what} header")
    return struct.unpack(f">{n_fields}I", raw)


def load_idx_dataset(images_path, labels_path, normalize: bool = True) -> LabeledDataset:
    """Load an IDX image/label file pair.

    Images become (1, rows, cols) float32 tensors, scaled by 1/255 when
    normalize is set. Image and label counts must agree.
    """
    with open(images_path, "rb") as f:
        magic, count, rows, cols = _read_idx_header(f, 4, "image")
        if magic != IDX_IMAGE_MAGIC:
            raise FormatError(
                f"image magic 0x{magic:08x} != 0x{IDX_IMAGE_MAGIC:08x}"
            )
        pixels = np.frombuffer(
            _read_exact(f, count * rows * cols, "image pixels"), dtype=np.uint8
        )
    with open(labels_path, "rb") as f:
        magic, label_count = _read_idx_header(f, 2, "label")
        if magic != IDX_LABEL_MAGIC:
            raise FormatError(
                f"label magic 0x{magic:08x} != 0x{IDX_LABEL_MAGIC:08x}"
            )
        labels = np.frombuffer(_read_exact(f, label_count, "labels"), dtype=np.uint8)
    if count != label_count:
        raise ValidationError(
            f"image count {count} != label count {label_count}"
        )
    data = pixels.reshape(count, 1, rows, cols).astype(DTYPE)
    if normalize:
        data = data / DTYPE(255.0)
    images = [np.ascontiguousarray(data[i]) for i in range(count)]
    return LabeledDataset(images=images, labels=labels.astype(np.int64))
