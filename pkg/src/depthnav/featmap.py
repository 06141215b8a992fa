"""Feature maps from the network's convolutional layers.

The map is built by averaging all channels of a chosen layer's post-ReLU
activations and min-max scaling to gray.  The middle layer is the default:
deep enough to carry navigation-relevant features, shallow enough to stay
spatially readable.  Per-image normalization means a positive rescaling of
the activations leaves the map unchanged.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from .images import GrayImage, ReprBundle
from .net.model import NetworkSpec, bundle_to_arrays, forward


def extract(
    params: Dict[str, np.ndarray],
    spec: NetworkSpec,
    bundle: ReprBundle,
    cmd: np.ndarray,
    layer_index: Optional[int] = None,
    encoder: int = 0,
) -> GrayImage:
    """Channel-averaged activation map of one conv layer, as gray.

    ``layer_index`` defaults to the middle of the chosen encoder's conv
    stack (floor(n/2)).  A constant activation map renders as all-zero.
    """
    encoders = spec.encoders()
    if not 0 <= encoder < len(encoders):
        raise ValueError(f"encoder index {encoder} out of range for this network")
    n_conv = len(encoders[encoder].convs)
    if layer_index is None:
        layer_index = n_conv // 2
    if not 0 <= layer_index < n_conv:
        raise ValueError(f"layer index {layer_index} out of range (0..{n_conv - 1})")

    x1, x2 = bundle_to_arrays(bundle, spec)
    _, cache = forward(params, spec, x1, x2, np.asarray(cmd, dtype=np.float32), train_mode=False)
    acts = cache[f"enc{encoder}"]["acts"][layer_index]  # (1, C, h, w), post-ReLU
    mean_map = acts[0].mean(axis=0)
    lo = float(mean_map.min())
    hi = float(mean_map.max())
    if hi - lo <= 0.0:
        return GrayImage(np.zeros(mean_map.shape, dtype=np.uint8))
    scaled = (mean_map - lo) * (255.0 / (hi - lo))
    return GrayImage(np.floor(scaled + 0.5).astype(np.uint8))


# Palettes for recoloring.  The viridis-like table is anchored at nine
# points of the standard colormap and linearly interpolated to 256 entries.
_VIRIDIS_ANCHORS = (
    (68, 1, 84),
    (72, 40, 120),
    (62, 74, 137),
    (49, 104, 142),
    (38, 130, 142),
    (31, 158, 137),
    (53, 183, 121),
    (109, 205, 89),
    (253, 231, 37),
)


def _interp_palette(anchors) -> np.ndarray:
    anchors = np.asarray(anchors, dtype=np.float64)
    pos = np.linspace(0.0, 255.0, len(anchors))
    xs = np.arange(256)
    table = np.stack(
        [np.interp(xs, pos, anchors[:, c]) for c in range(3)], axis=1
    )
    return np.floor(table + 0.5).astype(np.uint8)


PALETTES: Dict[str, np.ndarray] = {
    "gray": np.stack([np.arange(256, dtype=np.uint8)] * 3, axis=1),
    "viridis": _interp_palette(_VIRIDIS_ANCHORS),
}


def recolor(map_img: GrayImage, palette: str = "viridis") -> np.ndarray:
    """Map intensities through a fixed lookup table; returns (h, w, 3) uint8."""
    table = PALETTES.get(palette)
    if table is None:
        raise ValueError(f"unknown palette {palette!r} (have: {', '.join(sorted(PALETTES))})")
    return table[map_img.data]
