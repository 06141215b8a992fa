"""Core image and observation value types shared by the whole pipeline.

Depth is stored in meters as float32 with 0.0 as the "no return" sentinel
(matching the border-mask semantics: a masked pixel is unmeasurable).  All
image types are immutable after construction; the wrapped arrays are marked
read-only so instances can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np


def _frozen_array(data, dtype) -> np.ndarray:
    arr = np.array(data, dtype=dtype)
    if arr.ndim != 2:
        raise ValueError(f"image data must be 2-D (h, w), got shape {arr.shape}")
    if arr.shape[0] <= 0 or arr.shape[1] <= 0:
        raise ValueError(f"image dimensions must be positive, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DepthImage:
    """Row-major float32 depth in meters; 0.0 means no return / masked."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.data, np.float32)
        if not np.isfinite(arr).all():
            raise ValueError("depth image contains NaN or Inf")
        if (arr < 0).any():
            raise ValueError("depth values must be >= 0 (0 is the invalid sentinel)")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def valid_mask(self) -> np.ndarray:
        """Boolean mask of pixels carrying a real depth measurement."""
        return self.data > 0.0


@dataclass(frozen=True)
class GrayImage:
    """Row-major 8-bit intensity image."""

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _frozen_array(self.data, np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


AnyImage = Union[DepthImage, GrayImage]


@dataclass(frozen=True, order=True)
class RiskCategory:
    """Collision-risk level of a detected object class, 1 (lowest) to 6.

    Level 6 is reserved for pedestrians: the robot should keep its distance
    and stay slow when one shows up.
    """

    level: int

    MIN = 1
    MAX = 6

    def __post_init__(self) -> None:
        if not isinstance(self.level, int) or not self.MIN <= self.level <= self.MAX:
            raise ValueError(f"risk level must be an integer in 1..6, got {self.level!r}")


PEDESTRIAN_RISK = RiskCategory(6)


@dataclass(frozen=True)
class Detection:
    """A detected object: class label, risk category and pixel bounding box.

    Box convention: x_min/y_min inclusive, x_max/y_max exclusive.
    """

    class_name: str
    category: RiskCategory
    bbox: Tuple[int, int, int, int]  # (x_min, y_min, x_max, y_max)

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.bbox
        if not (0 <= x0 < x1 and 0 <= y0 < y1):
            raise ValueError(f"degenerate bounding box {self.bbox}")
        object.__setattr__(self, "bbox", (int(x0), int(y0), int(x1), int(y1)))

    @property
    def area(self) -> int:
        x0, y0, x1, y1 = self.bbox
        return (x1 - x0) * (y1 - y0)


class ReprKind(Enum):
    """The eight compared observation formats.

    The two ``*_DET`` kinds carry a second (semantic) image; all others are a
    single image.  The SEG kinds are tags for ground-truth class-mask renders;
    no segmentation network runs here.
    """

    RGB = "rgb"
    RGB_NOISE = "rgb-noise"
    DEPTH = "depth"
    DEPTH_NOISE = "depth-noise"
    SEG_FC = "seg-fc"
    SEG_PSP = "seg-psp"
    DEPTH_DET = "depth-det"
    DEPTH_NOISE_DET = "depth-noise-det"

    @property
    def needs_semantic(self) -> bool:
        return self in (ReprKind.DEPTH_DET, ReprKind.DEPTH_NOISE_DET)

    @property
    def uses_depth(self) -> bool:
        return self in (
            ReprKind.DEPTH,
            ReprKind.DEPTH_NOISE,
            ReprKind.DEPTH_DET,
            ReprKind.DEPTH_NOISE_DET,
        )

    @property
    def noisy(self) -> bool:
        return self in (ReprKind.RGB_NOISE, ReprKind.DEPTH_NOISE, ReprKind.DEPTH_NOISE_DET)

    @classmethod
    def parse(cls, name: str) -> "ReprKind":
        key = name.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key:
                return kind
        valid = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown representation kind {name!r} (valid: {valid})")


@dataclass(frozen=True)
class ReprBundle:
    """The composed observation fed to the policy network.

    ``semantic_image`` must be present exactly for the two-image kinds and all
    images must share dimensions.
    """

    kind: ReprKind
    primary_image: AnyImage
    semantic_image: Optional[GrayImage] = field(default=None)

    def __post_init__(self) -> None:
        if self.kind.needs_semantic:
            if self.semantic_image is None:
                raise ValueError(f"kind {self.kind.value} requires a semantic image")
        elif self.semantic_image is not None:
            raise ValueError(f"kind {self.kind.value} must not carry a semantic image")
        if self.semantic_image is not None:
            if (self.semantic_image.width, self.semantic_image.height) != (
                self.primary_image.width,
                self.primary_image.height,
            ):
                raise ValueError(
                    "semantic image dimensions "
                    f"{self.semantic_image.width}x{self.semantic_image.height} do not match "
                    f"primary {self.primary_image.width}x{self.primary_image.height}"
                )

    @property
    def width(self) -> int:
        return self.primary_image.width

    @property
    def height(self) -> int:
        return self.primary_image.height


def resize_nearest(img: AnyImage, w: int, h: int) -> AnyImage:
    """Nearest-neighbor resize; every output pixel equals some input pixel.

    Index mapping: source index = floor((dst + 0.5) * src_size / dst_size),
    clamped to the valid range (pixel-center convention).  The invalid-depth
    sentinel is never interpolated because no interpolation happens at all.
    """
    if w <= 0 or h <= 0:
        raise ValueError(f"target dimensions must be positive, got {w}x{h}")
    src = img.data
    if (h, w) == src.shape:
        return type(img)(src)
    rows = np.minimum((np.arange(h) + 0.5) * src.shape[0] / h, src.shape[0] - 1).astype(int)
    cols = np.minimum((np.arange(w) + 0.5) * src.shape[1] / w, src.shape[1] - 1).astype(int)
    return type(img)(src[np.ix_(rows, cols)])


def depth_to_gray(img: DepthImage, max_depth: float) -> GrayImage:
    """Map depth to 8-bit intensity: round(255 * min(d, max) / max), half up.

    The 0.0 sentinel maps to intensity 0 by construction.
    """
    if max_depth <= 0:
        raise ValueError("max_depth must be positive")
    scaled = 255.0 * np.minimum(img.data.astype(np.float64), max_depth) / max_depth
    return GrayImage(np.floor(scaled + 0.5).astype(np.uint8))
