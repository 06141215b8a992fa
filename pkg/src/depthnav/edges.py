"""Canny edge detection on depth images.

The noise model perturbs object boundaries, and on a depth image those
boundaries are exactly where the depth gradient is large, so the detector
runs on depth directly with thresholds in meters per pixel.  Invalid (zero)
pixels are filled from their nearest valid neighbor while blurring and are
excluded from seeding strong edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .images import DepthImage


@dataclass(frozen=True)
class EdgeMask:
    """Boolean edge map with the same dimensions as its source image."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"edge mask must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class CannyParams:
    """Detector configuration; thresholds are depth gradients in m/px.

    Defaults trace corridor-scene object silhouettes fully; the values are
    configuration, exposed as CLI flags.
    """

    sigma: float = 1.4
    low: float = 0.05
    high: float = 0.15

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.low < self.high:
            raise ValueError(f"need 0 < low < high, got low={self.low} high={self.high}")

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, d: dict) -> "CannyParams":
        return cls(**d)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian sampled on integers, radius ceil(3*sigma)."""
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * sigma**2))
    return k / k.sum()


def _fill_invalid(data: np.ndarray) -> np.ndarray:
    """Replace 0-sentinel pixels with their nearest valid neighbor value."""
    invalid = data <= 0.0
    if not invalid.any():
        return data
    if invalid.all():
        return data
    idx = ndimage.distance_transform_edt(invalid, return_distances=False, return_indices=True)
    return data[tuple(idx)]


def gaussian_blur(img: DepthImage, sigma: float) -> DepthImage:
    """Separable Gaussian blur with clamped (replicated) borders.

    Invalid pixels take the value of their nearest valid neighbor during the
    convolution and are restored to 0 afterwards.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    kernel = gaussian_kernel(sigma)
    filled = _fill_invalid(img.data.astype(np.float64))
    out = ndimage.correlate1d(filled, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    out[img.data <= 0.0] = 0.0
    return DepthImage(np.maximum(out, 0.0))


def _sobel_gradients(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Separable Sobel normalized to a central-difference scale (m/px)."""
    smooth = np.array([0.25, 0.5, 0.25])
    diff = np.array([-0.5, 0.0, 0.5])  # central difference
    gx = ndimage.correlate1d(data, smooth, axis=0, mode="nearest")
    gx = ndimage.correlate1d(gx, diff, axis=1, mode="nearest")
    gy = ndimage.correlate1d(data, smooth, axis=1, mode="nearest")
    gy = ndimage.correlate1d(gy, diff, axis=0, mode="nearest")
    return gx, gy


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels whose magnitude is >= both neighbors along the gradient.

    Direction is quantized to 4 bins; out-of-image neighbors count as 0.
    """
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2), dtype=mag.dtype)
    padded[1:-1, 1:-1] = mag

    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    bins = np.zeros(mag.shape, dtype=np.int8)  # 0: 0 deg, 1: 45, 2: 90, 3: 135
    bins[(angle >= 22.5) & (angle < 67.5)] = 1
    bins[(angle >= 67.5) & (angle < 112.5)] = 2
    bins[(angle >= 112.5) & (angle < 157.5)] = 3

    # neighbor offsets (dr, dc) per bin along the gradient direction
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for b, (dr, dc) in offsets.items():
        sel = bins == b
        fwd = padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
        bwd = padded[1 - dr : 1 - dr + h, 1 - dc : 1 - dc + w]
        keep |= sel & (mag >= fwd) & (mag >= bwd)
    return keep


def canny(img: DepthImage, sigma: float, low: float, high: float) -> EdgeMask:
    """Classic 4-stage Canny on a depth image.

    Blur, Sobel gradient magnitude/direction, non-maximum suppression with
    directions quantized to 4 bins, then hysteresis: pixels >= ``high`` seed,
    pixels >= ``low`` survive iff 8-connected to a seed.  Invalid pixels never
    seed.  Deterministic; no randomness anywhere.
    """
    if not 0 < low < high:
        raise ValueError(f"need 0 < low < high, got low={low} high={high}")
    blurred = gaussian_blur(img, sigma)
    gx, gy = _sobel_gradients(blurred.data.astype(np.float64))
    mag = np.hypot(gx, gy)
    ridge = _nonmax_suppress(mag, gx, gy)

    weak = ridge & (mag >= low)
    strong = weak & (mag >= high) & (img.data > 0.0)
    if not strong.any():
        return EdgeMask(np.zeros(img.data.shape, dtype=bool))
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    keep_labels = np.unique(labels[strong])
    return EdgeMask(weak & np.isin(labels, keep_labels))


def detect_edges(img: DepthImage, params: CannyParams) -> EdgeMask:
    return canny(img, params.sigma, params.low, params.high)
