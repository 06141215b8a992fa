"""Depth-image noise model: edge Gaussian noise, border dropout, salt-and-pepper.

Real RGB-D depth frames are noisy in three characteristic ways that clean
simulated renders are not: boundary pixels of objects jitter with a
depth-dependent Gaussian, a band near the image border returns no
measurement at all, and isolated pixels flip to extreme values.  Embedding
all three into simulated training images narrows the sim-to-real gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edges import CannyParams, EdgeMask, detect_edges
from .images import DepthImage
from .rng import RngStream

#: Sensor maximum range in meters; used as the "salt" replacement value.
MAX_SENSOR_DEPTH = 8.0

# substream roles inside augment()
_SUB_EDGE = 0
_SUB_RATIO = 1
_SUB_BORDER = 2
_SUB_SALT = 3


@dataclass(frozen=True)
class NoiseParams:
    """Configuration of the full depth-noise pipeline.

    ``xi`` is a per-image random coefficient in [xi_min, xi_max] scaling the
    edge-noise standard deviation.  ``alpha`` and ``beta`` shape the border
    dropout mask (band widths w/alpha and h/beta), ``mask_ratio_max`` bounds
    the per-image dropout ratio, and ``sp_density`` is the salt-and-pepper
    pixel probability.
    """

    xi_min: float = 1.0
    xi_max: float = 1.2
    alpha: float = 36.0
    beta: float = 24.0
    mask_ratio_max: float = 0.30
    sp_density: float = 0.005
    salt_depth: float = MAX_SENSOR_DEPTH
    canny: CannyParams = field(default_factory=CannyParams)

    def __post_init__(self) -> None:
        if not 1.0 <= self.xi_min <= self.xi_max:
            raise ValueError(f"need 1.0 <= xi_min <= xi_max, got [{self.xi_min}, {self.xi_max}]")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if not 0.0 <= self.mask_ratio_max <= 1.0:
            raise ValueError(f"mask_ratio_max must be in [0, 1], got {self.mask_ratio_max}")
        if not 0.0 <= self.sp_density < 1.0:
            raise ValueError(f"sp_density must be in [0, 1), got {self.sp_density}")
        if self.salt_depth <= 0:
            raise ValueError("salt_depth must be positive")

    def to_dict(self) -> dict:
        return {
            "xi_min": self.xi_min,
            "xi_max": self.xi_max,
            "alpha": self.alpha,
            "beta": self.beta,
            "mask_ratio_max": self.mask_ratio_max,
            "sp_density": self.sp_density,
            "salt_depth": self.salt_depth,
            "canny": self.canny.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseParams":
        d = dict(d)
        canny = d.pop("canny", None)
        if canny is not None:
            d["canny"] = CannyParams.from_dict(canny)
        return cls(**d)


def sigma(z, xi=1.0):
    """Standard deviation of depth noise at object edges, in meters.

    sigma(z) = (0.0012 + 0.0019 * (z - 0.4)^2) * xi, with z the true depth in
    meters and xi in [1.0, 1.2] a coefficient for extreme situations.  The
    minimum 0.0012*xi is reached at z = 0.4 m.
    """
    z = np.asarray(z, dtype=np.float64)
    out = (0.0012 + 0.0019 * (z - 0.4) ** 2) * xi
    return float(out) if out.ndim == 0 else out


def edge_noise(
    img: DepthImage, mask: EdgeMask, params: NoiseParams, rng: RngStream
) -> DepthImage:
    """Gaussian noise on edge pixels: mean = true depth, std = sigma(z, xi).

    One xi is drawn per image.  Only valid pixels under the mask change;
    draws are clamped below at 0.
    """
    if mask.data.shape != img.data.shape:
        raise ValueError(
            f"edge mask {mask.data.shape} does not match image {img.data.shape}"
        )
    gen = rng.generator()
    xi = gen.uniform(params.xi_min, params.xi_max)
    sel = mask.data & (img.data > 0.0)
    out = np.array(img.data, dtype=np.float32)
    if sel.any():
        z = out[sel].astype(np.float64)
        noisy = gen.normal(loc=z, scale=sigma(z, xi))
        out[sel] = np.maximum(noisy, 0.0).astype(np.float32)
    return DepthImage(out)


def _truncated_normal(gen: np.random.Generator, n: int, sd: float, bound: float) -> np.ndarray:
    """N(0, sd) draws re-drawn until |x| <= bound (rejection, not clamping)."""
    x = gen.normal(0.0, sd, size=n)
    while True:
        bad = np.abs(x) > bound
        if not bad.any():
            return x
        x[bad] = gen.normal(0.0, sd, size=int(bad.sum()))


def _mask_writes(
    gen: np.random.Generator,
    n: int,
    draw_pair,
    flat_zero: np.ndarray,
    w: int,
    max_rounds: int = 100,
) -> None:
    """Mark n border-mask pixels as zeroed, re-drawing writes that land on an
    already-zero pixel so each write removes one real depth value.

    On a (pathological) nearly-all-zero image, re-drawing gives up after
    ``max_rounds`` and accepts duplicates.
    """
    remaining = n
    for _ in range(max_rounds):
        if remaining <= 0:
            return
        xs, ys = draw_pair(gen, remaining)
        idx = ys * w + xs
        fresh = ~flat_zero[idx]
        # of equal indices drawn in one batch, only the first counts as fresh
        order = np.argsort(idx, kind="stable")
        sorted_idx = idx[order]
        first = np.ones(remaining, dtype=bool)
        first[order[1:]] = sorted_idx[1:] != sorted_idx[:-1]
        accepted = idx[fresh & first]
        flat_zero[accepted] = True
        remaining -= accepted.size
    if remaining > 0:
        xs, ys = draw_pair(gen, remaining)
        flat_zero[ys * w + xs] = True


def border_mask(img: DepthImage, r: float, params: NoiseParams, rng: RngStream) -> DepthImage:
    """Remove a ratio ``r`` of depth values near the image border.

    For each of floor(r*w*h/2) steps two pixels are dropped: one at
    (x ~ N(0, w/alpha) truncated to |x| <= w/2, y ~ U(0, h)) and one at
    (x ~ U(0, w), y ~ N(0, h/beta) truncated to |y| <= h/2); negative x and y
    wrap by +w / +h, so the Gaussians hug the left/right and top/bottom
    borders.  Continuous draws are floored to indices and clamped in range.
    Writes that would land on an already-zero pixel are re-drawn so the
    achieved ratio of removed depth values matches ``r``.
    """
    if not 0.0 <= r <= params.mask_ratio_max:
        raise ValueError(f"mask ratio {r} outside [0, {params.mask_ratio_max}]")
    h, w = img.data.shape
    n = int(np.floor(r * w * h / 2.0))
    if n == 0:
        return DepthImage(img.data)

    gen = rng.generator()
    flat_zero = (img.data <= 0.0).reshape(-1).copy()

    def draw_vertical_border(g: np.random.Generator, k: int):
        x = _truncated_normal(g, k, w / params.alpha, w / 2.0)
        y = g.uniform(0.0, h, size=k)
        x = np.where(x < 0.0, x + w, x)
        xs = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
        ys = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
        return xs, ys

    def draw_horizontal_border(g: np.random.Generator, k: int):
        x = g.uniform(0.0, w, size=k)
        y = _truncated_normal(g, k, h / params.beta, h / 2.0)
        y = np.where(y < 0.0, y + h, y)
        xs = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
        ys = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
        return xs, ys

    _mask_writes(gen, n, draw_vertical_border, flat_zero, w)
    _mask_writes(gen, n, draw_horizontal_border, flat_zero, w)

    out = np.array(img.data, dtype=np.float32)
    out.reshape(-1)[flat_zero] = 0.0
    return DepthImage(out)


def salt_pepper(img: DepthImage, density: float, rng: RngStream, salt_depth: float = MAX_SENSOR_DEPTH) -> DepthImage:
    """Flip each pixel with probability ``density`` to salt (max range) or
    pepper (0), with equal odds."""
    if not 0.0 <= density < 1.0:
        raise ValueError(f"density must be in [0, 1), got {density}")
    out = np.array(img.data, dtype=np.float32)
    if density == 0.0:
        return DepthImage(out)
    gen = rng.generator()
    hit = gen.random(size=out.shape) < density
    salt = gen.random(size=out.shape) < 0.5
    out[hit & salt] = salt_depth
    out[hit & ~salt] = 0.0
    return DepthImage(out)


def augment(img: DepthImage, params: NoiseParams, rng: RngStream) -> DepthImage:
    """Full noise pipeline: edge noise, then border mask, then salt-and-pepper.

    The border-mask ratio is drawn uniformly from [0, mask_ratio_max] per
    image.  Every stage draws from its own substream of ``rng``, so results
    are identical regardless of worker scheduling.
    """
    mask = detect_edges(img, params.canny)
    out = edge_noise(img, mask, params, rng.child(_SUB_EDGE))
    if params.mask_ratio_max > 0.0:
        r = rng.child(_SUB_RATIO).generator().uniform(0.0, params.mask_ratio_max)
        out = border_mask(out, r, params, rng.child(_SUB_BORDER))
    out = salt_pepper(out, params.sp_density, rng.child(_SUB_SALT), params.salt_depth)
    return out
