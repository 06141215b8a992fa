"""Conditional imitation network: one or two convolutional encoders, a
command vector concatenated into a three-layer dense head, two outputs.

Single-encoder models (one input image) flatten into two 512-wide dense
layers; dual-encoder models pair a 480-wide primary branch with a 32-wide
semantic branch, so the semantic image contributes a deliberately small
feature vector and the output acts as an overlay of the two influences.
Dropout (inverted, p=0.5 by default) applies once after each conv stack and
after the first dense layer following the concatenation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..images import DepthImage, GrayImage, ReprBundle, resize_nearest
from ..noise import MAX_SENSOR_DEPTH
from ..rng import RngStream
from . import layers as L

#: network input resolution (width, height)
INPUT_SIZE = (256, 192)

SINGLE_DENSE = (512, 512)
DUAL_PRIMARY_DENSE = (480, 480)
DUAL_SEMANTIC_DENSE = (32, 32)
COMMAND_WIDTH = 4
OUTPUT_WIDTH = 2


@dataclass(frozen=True)
class ConvSpec:
    out_channels: int
    kernel: int
    stride: int = 2


@dataclass(frozen=True)
class EncoderSpec:
    convs: Tuple[ConvSpec, ...]
    dense: Tuple[int, int]


#: default encoder stacks; five stride-2 convs bring 256x192 to 8x6
DEFAULT_PRIMARY_CONVS = (
    ConvSpec(24, 5),
    ConvSpec(36, 3),
    ConvSpec(48, 3),
    ConvSpec(64, 3),
    ConvSpec(64, 3),
)
DEFAULT_SEMANTIC_CONVS = (
    ConvSpec(12, 5),
    ConvSpec(16, 3),
    ConvSpec(24, 3),
    ConvSpec(32, 3),
    ConvSpec(32, 3),
)


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description; dense widths are fixed by the arity."""

    input_width: int = INPUT_SIZE[0]
    input_height: int = INPUT_SIZE[1]
    encoder1: EncoderSpec = field(
        default_factory=lambda: EncoderSpec(DEFAULT_PRIMARY_CONVS, SINGLE_DENSE)
    )
    encoder2: Optional[EncoderSpec] = None
    head: Tuple[int, int] = (256, 64)
    dropout: float = 0.5

    def __post_init__(self) -> None:
        if self.input_width <= 0 or self.input_height <= 0:
            raise ValueError("input size must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if len(self.head) != 2:
            raise ValueError("head must list two hidden widths (three dense layers total)")
        if self.encoder2 is None:
            if tuple(self.encoder1.dense) != SINGLE_DENSE:
                raise ValueError(f"single-encoder dense widths must be {SINGLE_DENSE}")
        else:
            if tuple(self.encoder1.dense) != DUAL_PRIMARY_DENSE:
                raise ValueError(f"dual-encoder primary dense widths must be {DUAL_PRIMARY_DENSE}")
            if tuple(self.encoder2.dense) != DUAL_SEMANTIC_DENSE:
                raise ValueError(f"dual-encoder semantic dense widths must be {DUAL_SEMANTIC_DENSE}")
        for enc in self.encoders():
            if not enc.convs:
                raise ValueError("encoder needs at least one conv layer")

    @classmethod
    def single(cls, convs=DEFAULT_PRIMARY_CONVS, **kwargs) -> "NetworkSpec":
        return cls(encoder1=EncoderSpec(tuple(convs), SINGLE_DENSE), **kwargs)

    @classmethod
    def dual(cls, convs1=DEFAULT_PRIMARY_CONVS, convs2=DEFAULT_SEMANTIC_CONVS, **kwargs) -> "NetworkSpec":
        return cls(
            encoder1=EncoderSpec(tuple(convs1), DUAL_PRIMARY_DENSE),
            encoder2=EncoderSpec(tuple(convs2), DUAL_SEMANTIC_DENSE),
            **kwargs,
        )

    @property
    def dual_encoder(self) -> bool:
        return self.encoder2 is not None

    def encoders(self) -> Tuple[EncoderSpec, ...]:
        return (self.encoder1,) if self.encoder2 is None else (self.encoder1, self.encoder2)

    def conv_shapes(self, encoder: int = 0) -> List[Tuple[int, int, int]]:
        """(channels, height, width) after each conv of the given encoder."""
        enc = self.encoders()[encoder]
        h, w = self.input_height, self.input_width
        shapes = []
        for conv in enc.convs:
            h = L.conv_out_size(h, conv.stride)
            w = L.conv_out_size(w, conv.stride)
            shapes.append((conv.out_channels, h, w))
        return shapes

    def flatten_width(self, encoder: int = 0) -> int:
        c, h, w = self.conv_shapes(encoder)[-1]
        return c * h * w

    def feature_width(self) -> int:
        width = self.encoder1.dense[-1]
        if self.encoder2 is not None:
            width += self.encoder2.dense[-1]
        return width + COMMAND_WIDTH

    def to_dict(self) -> dict:
        def enc(e: Optional[EncoderSpec]):
            if e is None:
                return None
            return {
                "convs": [[c.out_channels, c.kernel, c.stride] for c in e.convs],
                "dense": list(e.dense),
            }

        return {
            "input_width": self.input_width,
            "input_height": self.input_height,
            "encoder1": enc(self.encoder1),
            "encoder2": enc(self.encoder2),
            "head": list(self.head),
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        def enc(e):
            if e is None:
                return None
            return EncoderSpec(
                tuple(ConvSpec(*c) for c in e["convs"]), tuple(e["dense"])
            )

        return cls(
            input_width=d["input_width"],
            input_height=d["input_height"],
            encoder1=enc(d["encoder1"]),
            encoder2=enc(d["encoder2"]),
            head=tuple(d["head"]),
            dropout=d["dropout"],
        )

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()


@dataclass(frozen=True)
class LossParams:
    """Loss weights: lambda balances the angular term, gamma is the L2
    coefficient on dense-layer weights only."""

    lam: float = 1.0
    gamma: float = 1e-7

    def __post_init__(self) -> None:
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lambda and gamma must be non-negative")


def dense_weight_names(params: Dict[str, np.ndarray]) -> List[str]:
    """The regularizer's scope: dense weights, not biases, not conv kernels."""
    return [k for k in params if ".fc" in k and k.endswith(".w")]


def init_params(spec: NetworkSpec, rng: RngStream, dtype=np.float32) -> Dict[str, np.ndarray]:
    gen = rng.generator()
    params: Dict[str, np.ndarray] = {}
    for e, enc in enumerate(spec.encoders()):
        c_in = 1
        for i, conv in enumerate(enc.convs):
            fan_in = c_in * conv.kernel * conv.kernel
            params[f"enc{e}.conv{i}.w"] = L.he_uniform_init(
                gen, (conv.out_channels, c_in, conv.kernel, conv.kernel), fan_in, dtype
            )
            params[f"enc{e}.conv{i}.b"] = np.zeros(conv.out_channels, dtype=dtype)
            c_in = conv.out_channels
        width = spec.flatten_width(e)
        for j, out in enumerate(enc.dense):
            params[f"enc{e}.fc{j}.w"] = L.he_uniform_init(gen, (width, out), width, dtype)
            params[f"enc{e}.fc{j}.b"] = np.zeros(out, dtype=dtype)
            width = out
    width = spec.feature_width()
    for k, out in enumerate(tuple(spec.head) + (OUTPUT_WIDTH,)):
        params[f"head.fc{k}.w"] = L.he_uniform_init(gen, (width, out), width, dtype)
        params[f"head.fc{k}.b"] = np.zeros(out, dtype=dtype)
        width = out
    return params


def bundle_to_arrays(bundle: ReprBundle, spec: NetworkSpec):
    """Scale images to [0, 1] float32 at the network input size.

    Depth divides by the sensor maximum (8 m) and clamps; 8-bit images divide
    by 255.
    """
    w, h = spec.input_width, spec.input_height

    def prep(img):
        img = resize_nearest(img, w, h)
        if isinstance(img, DepthImage):
            arr = np.minimum(img.data / MAX_SENSOR_DEPTH, 1.0).astype(np.float32)
        else:
            arr = (img.data / 255.0).astype(np.float32)
        return arr[None, :, :]  # channel axis

    x1 = prep(bundle.primary_image)
    x2 = prep(bundle.semantic_image) if bundle.semantic_image is not None else None
    if spec.dual_encoder and x2 is None:
        raise ValueError("dual-encoder network needs a two-image bundle")
    if not spec.dual_encoder and x2 is not None:
        raise ValueError("single-encoder network got a two-image bundle")
    return x1, x2


def _encoder_forward(params, spec, e: int, x, train: bool, gen, dropout: float):
    enc = spec.encoders()[e]
    cache = {"convs": [], "acts": []}
    out = x
    for i in range(len(enc.convs)):
        out, c_cache = L.conv2d_forward(
            out, params[f"enc{e}.conv{i}.w"], params[f"enc{e}.conv{i}.b"], enc.convs[i].stride
        )
        out, r_cache = L.relu_forward(out)
        cache["convs"].append((c_cache, r_cache))
        cache["acts"].append(out)
    n = out.shape[0]
    cache["conv_out_shape"] = out.shape
    flat = out.reshape(n, -1)
    flat, d_cache = L.dropout_forward(flat, dropout, gen, train)
    cache["dropout"] = d_cache
    h = flat
    cache["fcs"] = []
    for j in range(len(enc.dense)):
        h, f_cache = L.dense_forward(h, params[f"enc{e}.fc{j}.w"], params[f"enc{e}.fc{j}.b"])
        h, r_cache = L.relu_forward(h)
        cache["fcs"].append((f_cache, r_cache))
    return h, cache


def forward(
    params: Dict[str, np.ndarray],
    spec: NetworkSpec,
    x1: np.ndarray,
    x2: Optional[np.ndarray],
    cmd: np.ndarray,
    train_mode: bool = False,
    rng: Optional[RngStream] = None,
):
    """Batched forward pass.

    x1/x2: (N, 1, H, W); cmd: (N, 4) one-hot.  Returns (out, cache) with
    out (N, 2); the cache holds every intermediate needed by ``backward`` and
    the per-layer conv activations used for feature maps.
    """
    if x1.ndim == 3:
        x1 = x1[None]
    if x2 is not None and x2.ndim == 3:
        x2 = x2[None]
    if cmd.ndim == 1:
        cmd = cmd[None]
    if train_mode and rng is None:
        raise ValueError("train_mode forward needs an RngStream for dropout")
    gen = rng.generator() if rng is not None else None
    dtype = params["head.fc0.w"].dtype
    x1 = x1.astype(dtype, copy=False)
    cmd = cmd.astype(dtype, copy=False)

    cache: Dict = {"spec": spec, "train": train_mode}
    f1, enc0_cache = _encoder_forward(params, spec, 0, x1, train_mode, gen, spec.dropout)
    cache["enc0"] = enc0_cache
    feats = [f1]
    if spec.dual_encoder:
        if x2 is None:
            raise ValueError("dual-encoder forward needs the semantic image")
        x2 = x2.astype(dtype, copy=False)
        f2, enc1_cache = _encoder_forward(params, spec, 1, x2, train_mode, gen, spec.dropout)
        cache["enc1"] = enc1_cache
        feats.append(f2)
    elif x2 is not None:
        raise ValueError("single-encoder forward got a semantic image")
    feats.append(cmd)
    h = np.concatenate(feats, axis=1)
    cache["concat_widths"] = [f.shape[1] for f in feats]

    cache["head"] = []
    n_head = len(spec.head) + 1
    for k in range(n_head):
        h, f_cache = L.dense_forward(h, params[f"head.fc{k}.w"], params[f"head.fc{k}.b"])
        entry = {"fc": f_cache, "relu": None, "dropout": None}
        if k < n_head - 1:
            h, r_cache = L.relu_forward(h)
            entry["relu"] = r_cache
            if k == 0:  # dropout after the first dense layer post-concatenation
                h, d_cache = L.dropout_forward(h, spec.dropout, gen, train_mode)
                entry["dropout"] = d_cache
        cache["head"].append(entry)
    return h, cache


def loss(action, action_ref, params: Dict[str, np.ndarray], lp: LossParams) -> float:
    """Per-sample loss: (v - v_ref)^2 + lambda (w - w_ref)^2 + gamma sum w_k^2."""
    v, w = float(action[0]), float(action[1])
    vr, wr = float(action_ref[0]), float(action_ref[1])
    reg = 0.0
    if lp.gamma > 0:
        reg = lp.gamma * sum(
            float((params[k].astype(np.float64) ** 2).sum()) for k in dense_weight_names(params)
        )
    return (v - vr) ** 2 + lp.lam * (w - wr) ** 2 + reg


def batch_loss(
    out: np.ndarray, targets: np.ndarray, params: Dict[str, np.ndarray], lp: LossParams
):
    """Mean prediction loss over the batch plus the regularizer.

    Returns (total, pred_component, dout).  The reduction runs in float64 so
    summation order cannot move the result materially.
    """
    n = out.shape[0]
    diff = out.astype(np.float64) - targets.astype(np.float64)
    weights = np.array([1.0, lp.lam], dtype=np.float64)
    pred = float((diff**2 * weights).sum() / n)
    reg = 0.0
    if lp.gamma > 0:
        reg = lp.gamma * sum(
            float((params[k].astype(np.float64) ** 2).sum()) for k in dense_weight_names(params)
        )
    dout = (2.0 * diff * weights / n).astype(out.dtype)
    return pred + reg, pred, dout


def backward(
    dout: np.ndarray,
    cache: Dict,
    params: Dict[str, np.ndarray],
    lp: Optional[LossParams] = None,
) -> Dict[str, np.ndarray]:
    """Analytic gradients for every parameter, including the L2 term."""
    spec: NetworkSpec = cache["spec"]
    grads: Dict[str, np.ndarray] = {}

    dh = dout
    n_head = len(spec.head) + 1
    for k in reversed(range(n_head)):
        entry = cache["head"][k]
        if entry["dropout"] is not None:
            dh = L.dropout_backward(dh, entry["dropout"])
        if entry["relu"] is not None:
            dh = L.relu_backward(dh, entry["relu"])
        dh, dw, db = L.dense_backward(dh, entry["fc"])
        grads[f"head.fc{k}.w"] = dw
        grads[f"head.fc{k}.b"] = db

    widths = cache["concat_widths"]
    splits = np.cumsum(widths)[:-1]
    parts = np.split(dh, splits, axis=1)

    encoder_parts = parts[:-1]  # the last part is the command vector
    for e, dfeat in enumerate(encoder_parts):
        enc = spec.encoders()[e]
        enc_cache = cache[f"enc{e}"]
        d = dfeat
        for j in reversed(range(len(enc.dense))):
            f_cache, r_cache = enc_cache["fcs"][j]
            d = L.relu_backward(d, r_cache)
            d, dw, db = L.dense_backward(d, f_cache)
            grads[f"enc{e}.fc{j}.w"] = dw
            grads[f"enc{e}.fc{j}.b"] = db
        d = L.dropout_backward(d, enc_cache["dropout"])
        d = d.reshape(enc_cache["conv_out_shape"])
        for i in reversed(range(len(enc.convs))):
            c_cache, r_cache = enc_cache["convs"][i]
            d = L.relu_backward(d, r_cache)
            d, dw, db = L.conv2d_backward(d, c_cache)
            grads[f"enc{e}.conv{i}.w"] = dw
            grads[f"enc{e}.conv{i}.b"] = db

    if lp is not None and lp.gamma > 0:
        for k in dense_weight_names(params):
            grads[k] = grads[k] + 2.0 * lp.gamma * params[k]
    return grads


def predict(params: Dict[str, np.ndarray], spec: NetworkSpec, bundle: ReprBundle, cmd: np.ndarray):
    """Inference: dropout off, outputs clamped to the normalized ranges
    (v in [0, 1], omega in [-1, 1]).  Denormalization to physical units is
    the caller's job via the documented (V_MAX, W_MAX)."""
    x1, x2 = bundle_to_arrays(bundle, spec)
    out, _ = forward(params, spec, x1, x2, np.asarray(cmd, dtype=np.float32), train_mode=False)
    v = float(np.clip(out[0, 0], 0.0, 1.0))
    w = float(np.clip(out[0, 1], -1.0, 1.0))
    return v, w


def params_to_dtype(params: Dict[str, np.ndarray], dtype) -> Dict[str, np.ndarray]:
    return {k: v.astype(dtype) for k, v in params.items()}


def check_finite(arrays: Dict[str, np.ndarray], what: str) -> None:
    for k, v in arrays.items():
        if not np.isfinite(v).all():
            raise FloatingPointError(f"non-finite values in {what}: {k}")
