import math

import numpy as np
import pytest

from depthnav.edges import CannyParams, canny, gaussian_blur, gaussian_kernel
from depthnav.images import DepthImage


def test_kernel_normalized_for_any_sigma():
    for sigma in (0.5, 1.0, 1.4, 3.7):
        k = gaussian_kernel(sigma)
        assert k.size == 2 * math.ceil(3 * sigma) + 1
        assert abs(k.sum() - 1.0) < 1e-12


def test_blur_constant_image_unchanged():
    img = DepthImage(np.full((20, 30), 2.5, np.float32))
    out = gaussian_blur(img, 1.4)
    assert np.abs(out.data - 2.5).max() < 1e-6


def test_blur_impulse_center_weight():
    # normalized 2-D Gaussian sampled on integers, sigma=1: center ~ 0.1592
    base = np.full((11, 11), 1.0, np.float32)
    base[5, 5] = 2.0
    out = gaussian_blur(DepthImage(base), 1.0)
    assert abs((out.data[5, 5] - 1.0) - 0.1592) < 5e-4


def test_blur_restores_invalid_pixels():
    data = np.full((10, 10), 3.0, np.float32)
    data[4:6, 4:6] = 0.0
    out = gaussian_blur(DepthImage(data), 1.0)
    assert (out.data[4:6, 4:6] == 0.0).all()
    # nearest-valid fill means the constant stays constant elsewhere
    valid = out.data[data > 0]
    assert np.abs(valid - 3.0).max() < 1e-6


def test_blur_rejects_bad_sigma():
    with pytest.raises(ValueError):
        gaussian_blur(DepthImage(np.ones((3, 3), np.float32)), 0.0)


def test_canny_constant_image_empty():
    img = DepthImage(np.full((24, 32), 3.0, np.float32))
    assert canny(img, 1.4, 0.05, 0.15).count() == 0


def test_canny_vertical_step():
    # 1 m -> 2 m step at column c: edges hug the step, one per interior row
    h, w, c = 32, 40, 20
    data = np.full((h, w), 1.0, np.float32)
    data[:, c:] = 2.0
    mask = canny(DepthImage(data), 1.4, 0.05, 0.2)
    ys, xs = np.nonzero(mask.data)
    assert xs.size > 0
    assert set(xs.tolist()) <= {c - 1, c, c + 1}
    interior = set(range(1, h - 1))
    assert len(set(ys.tolist()) & interior) >= 0.95 * len(interior)


def test_canny_transpose_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(12):
        a = rng.uniform(0.5, 5.0, size=(16, 16)).astype(np.float32)
        m1 = canny(DepthImage(a), 1.0, 0.05, 0.15).data
        m2 = canny(DepthImage(a.T.copy()), 1.0, 0.05, 0.15).data
        assert np.array_equal(m1, m2.T)


def test_canny_empty_when_range_below_low():
    rng = np.random.default_rng(5)
    base = rng.uniform(2.0, 2.03, size=(20, 20)).astype(np.float32)  # range < low
    assert canny(DepthImage(base), 1.0, 0.05, 0.15).count() == 0


def test_hysteresis_connectivity_property(ramp_depth):
    """Every surviving pixel is 8-connected through the mask to a pixel whose
    gradient magnitude reaches the high threshold (independent BFS check)."""
    from depthnav.edges import _sobel_gradients

    mask = canny(ramp_depth, 1.0, 0.02, 0.08)
    blurred = gaussian_blur(ramp_depth, 1.0)
    gx, gy = _sobel_gradients(blurred.data.astype(np.float64))
    mag = np.hypot(gx, gy)

    strong = mask.data & (mag >= 0.08)
    assert mask.count() > 0 and strong.any()
    # BFS over the final mask from strong pixels must reach every mask pixel
    h, w = mask.data.shape
    seen = np.zeros_like(mask.data)
    stack = list(zip(*np.nonzero(strong)))
    for y, x in stack:
        seen[y, x] = True
    while stack:
        y, x = stack.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and mask.data[ny, nx] and not seen[ny, nx]:
                    seen[ny, nx] = True
                    stack.append((ny, nx))
    assert (seen == mask.data).all()


def test_invalid_pixels_cannot_seed():
    # a lone hole in a flat plane: gradients arise only from the restored 0s,
    # and those pixels must not seed strong edges
    data = np.full((20, 20), 4.0, np.float32)
    data[10, 10] = 0.0
    mask = canny(DepthImage(data), 1.0, 0.05, 0.15)
    assert not mask.data[10, 10]


def test_canny_params_validation():
    with pytest.raises(ValueError):
        CannyParams(sigma=1.0, low=0.2, high=0.1)
    with pytest.raises(ValueError):
        canny(DepthImage(np.ones((4, 4), np.float32)), 1.0, 0.0, 0.1)
    p = CannyParams()
    assert CannyParams.from_dict(p.to_dict()) == p
