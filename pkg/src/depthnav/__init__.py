"""depthnav: depth-based sim-to-real navigation toolkit.

Builds noise-model-embedded depth observations plus categorized detection
images, generates expert demonstrations in a lightweight corridor simulator,
trains conditional imitation policies on them, and evaluates the result with
intervention counts, velocity-decrease statistics and CNN feature maps.
"""

from .images import (
    Detection,
    DepthImage,
    GrayImage,
    ReprBundle,
    ReprKind,
    RiskCategory,
    depth_to_gray,
    resize_nearest,
)
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "DepthImage",
    "GrayImage",
    "RiskCategory",
    "Detection",
    "ReprKind",
    "ReprBundle",
    "RngStream",
    "resize_nearest",
    "depth_to_gray",
    "__version__",
]
