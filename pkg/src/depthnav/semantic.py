"""Categorized detection image: the semantic half of the observation.

Detected objects are graded into six collision-risk categories and each
bounding box is filled with an intensity that grows with the risk level, so a
single gray-scale image tells the policy both where objects are and how
carefully they must be avoided.  Overlaps keep the higher risk.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, Tuple

import numpy as np

from .images import Detection, GrayImage, RiskCategory

log = logging.getLogger(__name__)

#: Intensity per risk level k: round(255 * k / 6). Background stays 0.
LEVEL_INTENSITY: Tuple[int, ...] = tuple(int(255 * k / 6 + 0.5) for k in range(1, 7))

DEFAULT_UNKNOWN_LEVEL = 3

_warned_unknown: set = set()


def parse_category_config(text: str) -> Dict[str, int]:
    """Parse 'class risk_level' lines; '#' comments and blank lines ignored."""
    table: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'class level', got {raw!r}")
        name, level = parts
        try:
            table[name] = int(level)
        except ValueError:
            raise ValueError(f"line {lineno}: level must be an integer, got {level!r}") from None
    return table


@dataclass(frozen=True)
class CategoryMap:
    """class name -> risk category table plus the risk -> intensity table."""

    class_levels: Dict[str, int]
    intensities: Tuple[int, ...] = LEVEL_INTENSITY
    unknown_level: int = DEFAULT_UNKNOWN_LEVEL

    def __post_init__(self) -> None:
        if len(self.intensities) != 6:
            raise ValueError("intensity table must have six entries")
        if any(b <= a for a, b in zip(self.intensities, self.intensities[1:])):
            raise ValueError("intensity must be strictly increasing with risk level")
        if any(i <= 0 or i > 255 for i in self.intensities):
            raise ValueError("intensities must be in 1..255 (0 is background)")
        for name in ("person", "pedestrian"):
            if self.class_levels.get(name, 6) != 6:
                raise ValueError(f"{name!r} must map to the highest level (6)")
        for name, level in self.class_levels.items():
            RiskCategory(level)  # validates range
        RiskCategory(self.unknown_level)

    def intensity(self, category: RiskCategory) -> int:
        return self.intensities[category.level - 1]

    @classmethod
    def from_config(cls, text: str, **kwargs) -> "CategoryMap":
        return cls(parse_category_config(text), **kwargs)

    @classmethod
    def from_file(cls, path, **kwargs) -> "CategoryMap":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_config(fh.read(), **kwargs)


def default_category_map() -> CategoryMap:
    """The shipped table: wall fixtures low, furniture mid, pedestrians top."""
    text = resources.files("depthnav.config").joinpath("categories.txt").read_text("utf-8")
    return CategoryMap.from_config(text)


def categorize(class_name: str, cmap: CategoryMap) -> RiskCategory:
    """Look up the risk category; unknown classes warn once and fall back."""
    level = cmap.class_levels.get(class_name)
    if level is None:
        if class_name not in _warned_unknown:
            _warned_unknown.add(class_name)
            log.warning(
                "unknown object class %r, using default risk level %d",
                class_name,
                cmap.unknown_level,
            )
        level = cmap.unknown_level
    return RiskCategory(level)


def rasterize(dets: Iterable[Detection], w: int, h: int, cmap: CategoryMap) -> GrayImage:
    """Fill each detection box with its category intensity; overlaps keep the max.

    Boxes use inclusive mins and exclusive maxes and must lie within (w, h).
    """
    canvas = np.zeros((h, w), dtype=np.uint8)
    for det in dets:
        x0, y0, x1, y1 = det.bbox
        if x1 > w or y1 > h:
            raise ValueError(f"detection box {det.bbox} exceeds image bounds {w}x{h}")
        value = cmap.intensity(det.category)
        region = canvas[y0:y1, x0:x1]
        np.maximum(region, value, out=region)
    return GrayImage(canvas)
