"""Layer primitives with analytic forward/backward passes.

Convolutions use im2col so the heavy lifting is a single GEMM per layer;
backward re-uses the cached column matrix.  Padding follows the
ceil-division rule (output size = ceil(input / stride)), so five stride-2
layers take 256x192 to 8x6 exactly.  All caches hold what the backward pass
needs and nothing else.
"""

from __future__ import annotations

import math
from typing import Dict, Tuple

import numpy as np


def conv_out_size(n: int, stride: int) -> int:
    return -(-n // stride)  # ceil division


def _pad_amounts(n: int, k: int, stride: int) -> Tuple[int, int]:
    out = conv_out_size(n, stride)
    total = max((out - 1) * stride + k - n, 0)
    before = total // 2
    return before, total - before


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    """x: (N, C, H, W), w: (OC, C, k, k), b: (OC,) -> y: (N, OC, OH, OW)."""
    n, c, h, ww = x.shape
    oc, _, kh, kw = w.shape
    pt, pb = _pad_amounts(h, kh, stride)
    pl, pr = _pad_amounts(ww, kw, stride)
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    oh, ow = conv_out_size(h, stride), conv_out_size(ww, stride)

    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # (N, C, OH, OW, kh, kw)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    w2 = w.reshape(oc, c * kh * kw).T
    y = (cols @ w2 + b).reshape(n, oh, ow, oc).transpose(0, 3, 1, 2)
    cache = {
        "cols": cols,
        "w": w,
        "stride": stride,
        "x_shape": x.shape,
        "pad": (pt, pb, pl, pr),
        "out_hw": (oh, ow),
    }
    return np.ascontiguousarray(y), cache


def conv2d_backward(dy: np.ndarray, cache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dw, db)."""
    cols = cache["cols"]
    w = cache["w"]
    stride = cache["stride"]
    n, c, h, ww = cache["x_shape"]
    pt, pb, pl, pr = cache["pad"]
    oh, ow = cache["out_hw"]
    oc, _, kh, kw = w.shape

    dy2 = dy.transpose(0, 2, 3, 1).reshape(n * oh * ow, oc)
    dw = (cols.T @ dy2).T.reshape(oc, c, kh, kw)
    db = dy2.sum(axis=0)

    dcols = dy2 @ w.reshape(oc, c * kh * kw)
    dcols = dcols.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    dxp = np.zeros((n, c, h + pt + pb, ww + pl + pr), dtype=dy.dtype)
    for ki in range(kh):
        for kj in range(kw):
            dxp[:, :, ki : ki + oh * stride : stride, kj : kj + ow * stride : stride] += dcols[
                :, :, ki, kj
            ]
    dx = dxp[:, :, pt : pt + h, pl : pl + ww]
    return dx, dw, db


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: (N, in), w: (in, out), b: (out,)."""
    return x @ w + b, {"x": x, "w": w}


def dense_backward(dy: np.ndarray, cache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, w = cache["x"], cache["w"]
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def relu_forward(x: np.ndarray):
    y = np.maximum(x, 0)
    return y, {"mask": x > 0}


def relu_backward(dy: np.ndarray, cache) -> np.ndarray:
    return dy * cache["mask"]


def dropout_forward(x: np.ndarray, rate: float, gen: np.random.Generator, train: bool):
    """Inverted dropout: activations scale by 1/keep at train time so
    inference needs no rescaling.  The mask is cached for exact replay."""
    if not train or rate <= 0.0:
        return x, {"mask": None, "keep": 1.0}
    keep = 1.0 - rate
    mask = (gen.random(size=x.shape) < keep).astype(x.dtype) / keep
    return x * mask, {"mask": mask, "keep": keep}


def dropout_backward(dy: np.ndarray, cache) -> np.ndarray:
    if cache["mask"] is None:
        return dy
    return dy * cache["mask"]


def he_uniform_init(gen: np.random.Generator, shape: Tuple[int, ...], fan_in: int, dtype) -> np.ndarray:
    """Fan-in-scaled uniform init, limit sqrt(6 / fan_in) (ReLU-friendly)."""
    limit = math.sqrt(6.0 / fan_in)
    return gen.uniform(-limit, limit, size=shape).astype(dtype)
