import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthnav.images import (
    Detection,
    DepthImage,
    GrayImage,
    ReprBundle,
    ReprKind,
    RiskCategory,
    depth_to_gray,
    resize_nearest,
)


class TestDepthImage:
    def test_valid_construction_and_immutability(self):
        img = DepthImage(np.ones((4, 6), np.float32))
        assert (img.width, img.height) == (6, 4)
        with pytest.raises(ValueError):
            img.data[0, 0] = 2.0

    def test_rejects_nan_inf_negative(self):
        for bad in (np.nan, np.inf, -0.1):
            data = np.ones((2, 2), np.float32)
            data[0, 0] = bad
            with pytest.raises(ValueError):
                DepthImage(data)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            DepthImage(np.ones(5, np.float32))


class TestRiskCategory:
    def test_six_levels_only(self):
        for level in range(1, 7):
            RiskCategory(level)
        for bad in (0, 7, -1):
            with pytest.raises(ValueError):
                RiskCategory(bad)

    def test_ordering(self):
        assert RiskCategory(6) > RiskCategory(2)


class TestDetection:
    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            Detection("chair", RiskCategory(4), (5, 5, 5, 9))
        with pytest.raises(ValueError):
            Detection("chair", RiskCategory(4), (-1, 0, 3, 3))


class TestReprKind:
    def test_parse_and_two_image_kinds(self):
        assert ReprKind.parse("Depth_Noise_Det") is ReprKind.DEPTH_NOISE_DET
        assert ReprKind.DEPTH_DET.needs_semantic
        assert ReprKind.DEPTH_NOISE_DET.needs_semantic
        assert sum(k.needs_semantic for k in ReprKind) == 2
        with pytest.raises(ValueError):
            ReprKind.parse("depthish")


class TestReprBundle:
    def test_semantic_iff_det_kind(self):
        d = DepthImage(np.ones((4, 4), np.float32))
        g = GrayImage(np.zeros((4, 4), np.uint8))
        ReprBundle(ReprKind.DEPTH_DET, d, g)
        ReprBundle(ReprKind.DEPTH, d)
        with pytest.raises(ValueError):
            ReprBundle(ReprKind.DEPTH, d, g)
        with pytest.raises(ValueError):
            ReprBundle(ReprKind.DEPTH_DET, d)

    @settings(max_examples=60, deadline=None)
    @given(
        w1=st.integers(1, 12), h1=st.integers(1, 12),
        w2=st.integers(1, 12), h2=st.integers(1, 12),
    )
    def test_dimension_check_property(self, w1, h1, w2, h2):
        d = DepthImage(np.ones((h1, w1), np.float32))
        g = GrayImage(np.zeros((h2, w2), np.uint8))
        if (w1, h1) == (w2, h2):
            ReprBundle(ReprKind.DEPTH_DET, d, g)
        else:
            with pytest.raises(ValueError):
                ReprBundle(ReprKind.DEPTH_DET, d, g)


class TestResizeNearest:
    def test_identity_is_bit_identical(self):
        rng = np.random.default_rng(0)
        img = DepthImage(rng.uniform(0, 8, (48, 64)).astype(np.float32))
        out = resize_nearest(img, 64, 48)
        assert np.array_equal(out.data, img.data)

    def test_output_values_come_from_input(self):
        # distinct values so membership is meaningful
        img = DepthImage(np.arange(640 * 480, dtype=np.float32).reshape(480, 640))
        out = resize_nearest(img, 256, 192)
        assert (out.height, out.width) == (192, 256)
        assert np.isin(out.data, img.data).all()
        # documented mapping: src = floor((dst + 0.5) * src / dst)
        assert out.data[0, 0] == img.data[int(0.5 * 480 / 192), int(0.5 * 640 / 256)]

    def test_2x2_to_1x1_per_mapping_rule(self):
        img = DepthImage(np.array([[1.0, 2.0], [3.0, 4.0]], np.float32))
        out = resize_nearest(img, 1, 1)
        # floor((0 + 0.5) * 2 / 1) = 1 on both axes -> bottom-right pixel
        assert out.data[0, 0] == 4.0

    def test_sentinel_never_interpolated(self):
        data = np.zeros((4, 4), np.float32)
        data[::2, ::2] = 3.0
        out = resize_nearest(DepthImage(data), 3, 3)
        assert set(np.unique(out.data)) <= {0.0, 3.0}

    def test_zero_target_rejected(self):
        img = DepthImage(np.ones((2, 2), np.float32))
        for w, h in ((0, 2), (2, 0), (-1, 2)):
            with pytest.raises(ValueError):
                resize_nearest(img, w, h)

    def test_gray_images_too(self):
        img = GrayImage(np.arange(16, dtype=np.uint8).reshape(4, 4))
        out = resize_nearest(img, 2, 2)
        assert isinstance(out, GrayImage) and out.data.shape == (2, 2)


class TestDepthToGray:
    def test_saturation_and_sentinel(self):
        img = DepthImage(np.full((3, 3), 5.0, np.float32))
        assert (depth_to_gray(img, 5.0).data == 255).all()
        img0 = DepthImage(np.zeros((3, 3), np.float32))
        assert (depth_to_gray(img0, 5.0).data == 0).all()

    def test_half_rounds_up(self):
        img = DepthImage(np.full((1, 1), 2.5, np.float32))
        assert depth_to_gray(img, 5.0).data[0, 0] == 128  # 127.5 rounds half up

    def test_clamps_beyond_max(self):
        img = DepthImage(np.full((1, 1), 9.0, np.float32))
        assert depth_to_gray(img, 5.0).data[0, 0] == 255

    def test_bad_max_depth(self):
        with pytest.raises(ValueError):
            depth_to_gray(DepthImage(np.ones((1, 1), np.float32)), 0.0)
