import numpy as np
import pytest

from depthnav.edges import EdgeMask, detect_edges
from depthnav.images import DepthImage
from depthnav.noise import (
    NoiseParams,
    augment,
    border_mask,
    edge_noise,
    salt_pepper,
    sigma,
)
from depthnav.rng import RngStream


class TestSigma:
    def test_reference_values(self):
        # direct substitutions into the deviation formula
        assert abs(sigma(0.4, 1.0) - 0.0012) < 1e-12
        assert abs(sigma(1.4, 1.0) - 0.0031) < 1e-12
        assert abs(sigma(1.4, 1.2) - 0.00372) < 1e-12

    def test_monotone_in_distance_from_minimum_and_linear_in_xi(self):
        zs = np.linspace(0.0, 8.0, 161)
        vals = sigma(zs, 1.0)
        d = np.abs(zs - 0.4)
        order = np.argsort(d)
        assert (np.diff(vals[order]) >= -1e-15).all()
        assert np.allclose(sigma(zs, 1.2), 1.2 * sigma(zs, 1.0))
        assert (sigma(zs, 1.0) >= 0.0012).all()


class TestEdgeNoise:
    def test_empty_mask_identity(self):
        img = DepthImage(np.full((10, 10), 2.0, np.float32))
        mask = EdgeMask(np.zeros((10, 10), bool))
        out = edge_noise(img, mask, NoiseParams(), RngStream(1))
        assert np.array_equal(out.data, img.data)

    def test_statistics_match_model(self):
        # 1e5-pixel constant plane, all-edge mask, xi pinned to 1.0
        img = DepthImage(np.full((250, 400), 1.4, np.float32))
        mask = EdgeMask(np.ones((250, 400), bool))
        params = NoiseParams(xi_min=1.0, xi_max=1.0)
        out = edge_noise(img, mask, params, RngStream(77))
        n = out.data.size
        assert abs(out.data.mean() - 1.4) < 3 * 0.0031 / np.sqrt(n)
        assert 0.97 * 0.0031 < out.data.std(ddof=1) < 1.03 * 0.0031

    def test_invalid_pixels_untouched(self):
        data = np.full((8, 8), 1.5, np.float32)
        data[2, 2] = 0.0
        out = edge_noise(DepthImage(data), EdgeMask(np.ones((8, 8), bool)), NoiseParams(), RngStream(2))
        assert out.data[2, 2] == 0.0

    def test_fixed_seed_determinism(self):
        img = DepthImage(np.full((20, 20), 1.0, np.float32))
        mask = EdgeMask(np.ones((20, 20), bool))
        a = edge_noise(img, mask, NoiseParams(), RngStream(5))
        b = edge_noise(img, mask, NoiseParams(), RngStream(5))
        assert np.array_equal(a.data, b.data)

    def test_dimension_mismatch_rejected(self):
        img = DepthImage(np.ones((4, 4), np.float32))
        with pytest.raises(ValueError):
            edge_noise(img, EdgeMask(np.ones((3, 4), bool)), NoiseParams(), RngStream(0))


class TestBorderMask:
    def test_r_zero_identity(self):
        img = DepthImage(np.full((48, 64), 2.0, np.float32))
        out = border_mask(img, 0.0, NoiseParams(), RngStream(3))
        assert np.array_equal(out.data, img.data)

    def test_masked_count_and_band(self):
        w, h, r = 640, 480, 0.1
        img = DepthImage(np.full((h, w), 2.0, np.float32))
        params = NoiseParams()
        for seed in (0, 1, 2):
            out = border_mask(img, r, params, RngStream(seed))
            zeros = out.data == 0.0
            frac = zeros.sum() / (w * h)
            assert 0.095 <= frac <= 0.100 + 1e-12
            ys, xs = np.nonzero(zeros)
            bx, by = 5 * w / params.alpha, 5 * h / params.beta
            in_band = (xs < bx) | (xs >= w - bx) | (ys < by) | (ys >= h - by)
            assert in_band.mean() >= 0.999

    def test_out_of_range_ratio_rejected(self):
        img = DepthImage(np.ones((8, 8), np.float32))
        with pytest.raises(ValueError):
            border_mask(img, 0.5, NoiseParams(), RngStream(0))
        with pytest.raises(ValueError):
            border_mask(img, -0.01, NoiseParams(), RngStream(0))

    def test_saturated_input_does_not_hang(self):
        img = DepthImage(np.zeros((16, 16), np.float32))
        out = border_mask(img, 0.3, NoiseParams(), RngStream(4))
        assert (out.data == 0.0).all()


class TestSaltPepper:
    def test_zero_density_identity(self):
        img = DepthImage(np.full((20, 20), 1.0, np.float32))
        out = salt_pepper(img, 0.0, RngStream(1))
        assert np.array_equal(out.data, img.data)

    def test_binomial_count(self):
        w, h, p = 640, 480, 0.005
        img = DepthImage(np.full((h, w), 2.0, np.float32))
        out = salt_pepper(img, p, RngStream(8))
        flipped = ((out.data == 0.0) | (out.data == 8.0)).sum()
        mean = w * h * p
        sd = np.sqrt(w * h * p * (1 - p))
        assert abs(flipped - mean) <= 4 * sd
        # salt and pepper roughly balanced
        assert 0.3 < (out.data == 8.0).sum() / flipped < 0.7

    def test_fixed_seed_determinism(self):
        img = DepthImage(np.full((30, 30), 1.0, np.float32))
        a = salt_pepper(img, 0.05, RngStream(9))
        b = salt_pepper(img, 0.05, RngStream(9))
        assert np.array_equal(a.data, b.data)

    def test_density_validation(self):
        img = DepthImage(np.ones((4, 4), np.float32))
        with pytest.raises(ValueError):
            salt_pepper(img, 1.0, RngStream(0))


class TestAugment:
    def test_identity_configuration(self, ramp_depth):
        # flat image has no edges; zeroed mask ratio and density disable the rest
        img = DepthImage(np.full((32, 32), 2.0, np.float32))
        params = NoiseParams(xi_min=1.0, xi_max=1.0, mask_ratio_max=0.0, sp_density=0.0)
        out = augment(img, params, RngStream(6))
        assert np.array_equal(out.data, img.data)

    def test_no_negative_or_nan(self, ramp_depth):
        out = augment(ramp_depth, NoiseParams(), RngStream(7))
        assert np.isfinite(out.data).all()
        assert (out.data >= 0.0).all()

    def test_untouched_pixels_bit_identical(self, ramp_depth):
        # edge-noise stage only: pixels outside the edge mask must not change
        params = NoiseParams(mask_ratio_max=0.0, sp_density=0.0)
        mask = detect_edges(ramp_depth, params.canny)
        out = augment(ramp_depth, params, RngStream(11))
        untouched = ~mask.data
        assert np.array_equal(out.data[untouched], ramp_depth.data[untouched])

    def test_border_stage_only_zeroes(self):
        img = DepthImage(np.full((64, 64), 3.0, np.float32))  # no edges
        params = NoiseParams(sp_density=0.0)
        out = augment(img, params, RngStream(12))
        changed = out.data != img.data
        assert (out.data[changed] == 0.0).all()

    def test_salt_stage_values(self):
        img = DepthImage(np.full((64, 64), 3.0, np.float32))
        params = NoiseParams(mask_ratio_max=0.0, sp_density=0.05)
        out = augment(img, params, RngStream(13))
        changed = out.data != img.data
        assert set(np.unique(out.data[changed])) <= {0.0, np.float32(8.0)}

    def test_fixed_seed_reproducible(self, ramp_depth):
        a = augment(ramp_depth, NoiseParams(), RngStream(42))
        b = augment(ramp_depth, NoiseParams(), RngStream(42))
        assert np.array_equal(a.data, b.data)


class TestNoiseParams:
    def test_defaults_match_model_constants(self):
        p = NoiseParams()
        assert (p.xi_min, p.xi_max) == (1.0, 1.2)
        assert (p.alpha, p.beta) == (36.0, 24.0)
        assert p.mask_ratio_max == 0.30

    def test_round_trips_through_dict(self):
        p = NoiseParams(sp_density=0.01, mask_ratio_max=0.2)
        assert NoiseParams.from_dict(p.to_dict()) == p

    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseParams(xi_min=0.9)
        with pytest.raises(ValueError):
            NoiseParams(xi_min=1.3, xi_max=1.2)
        with pytest.raises(ValueError):
            NoiseParams(mask_ratio_max=1.5)
        with pytest.raises(ValueError):
            NoiseParams(sp_density=1.0)
