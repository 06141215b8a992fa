import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthnav.images import Detection, RiskCategory
from depthnav.semantic import (
    LEVEL_INTENSITY,
    CategoryMap,
    categorize,
    default_category_map,
    parse_category_config,
    rasterize,
)


@pytest.fixture(scope="module")
def cmap() -> CategoryMap:
    return default_category_map()


def det(level: int, box, name="obj") -> Detection:
    return Detection(name, RiskCategory(level), box)


class TestCategoryMap:
    def test_intensity_table_values(self):
        # round(255 * k / 6) for k = 1..6
        assert LEVEL_INTENSITY == (43, 85, 128, 170, 213, 255)

    def test_default_table_assignments(self, cmap):
        assert categorize("person", cmap).level == 6
        assert categorize("pedestrian", cmap).level == 6
        assert categorize("chair", cmap).level == 4

    def test_unknown_class_falls_back_with_warning(self, cmap, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="depthnav.semantic"):
            assert categorize("xyz_unknown_thing", cmap).level == 3

    def test_person_must_be_top_level(self):
        with pytest.raises(ValueError):
            CategoryMap({"person": 2})

    def test_intensities_strictly_increasing(self):
        with pytest.raises(ValueError):
            CategoryMap({}, intensities=(43, 43, 128, 170, 213, 255))
        with pytest.raises(ValueError):
            CategoryMap({}, intensities=(0, 85, 128, 170, 213, 255))

    def test_config_parsing(self):
        table = parse_category_config("# comment\nperson 6\n\nchair   4 # trailing\n")
        assert table == {"person": 6, "chair": 4}
        with pytest.raises(ValueError):
            parse_category_config("person six")
        with pytest.raises(ValueError):
            parse_category_config("person 6 extra")


class TestRasterize:
    def test_empty_gives_zeros(self, cmap):
        out = rasterize([], 32, 16, cmap)
        assert (out.data == 0).all() and out.data.shape == (16, 32)

    def test_single_box_pixel_count(self, cmap):
        out = rasterize([det(1, (10, 10, 20, 20))], 64, 64, cmap)
        nz = out.data != 0
        assert int(nz.sum()) == 100  # inclusive mins, exclusive maxes
        assert set(np.unique(out.data[nz])) == {LEVEL_INTENSITY[0]}
        assert out.data[10, 10] != 0 and out.data[19, 19] != 0
        assert out.data[20, 20] == 0 and out.data[9, 9] == 0

    def test_overlap_keeps_higher_risk(self, cmap):
        a = det(2, (0, 0, 10, 10))
        b = det(6, (5, 5, 15, 15), name="person")
        out = rasterize([a, b], 20, 20, cmap)
        assert out.data[7, 7] == LEVEL_INTENSITY[5]
        assert out.data[2, 2] == LEVEL_INTENSITY[1]

    def test_out_of_bounds_rejected(self, cmap):
        with pytest.raises(ValueError):
            rasterize([det(3, (0, 0, 33, 8))], 32, 16, cmap)

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_permutation_invariance_and_support(self, cmap, data):
        n = data.draw(st.integers(1, 6))
        dets = []
        for _ in range(n):
            x0 = data.draw(st.integers(0, 28))
            y0 = data.draw(st.integers(0, 12))
            x1 = data.draw(st.integers(x0 + 1, 32))
            y1 = data.draw(st.integers(y0 + 1, 16))
            dets.append(det(data.draw(st.integers(1, 6)), (x0, y0, x1, y1)))
        base = rasterize(dets, 32, 16, cmap)
        perm = data.draw(st.permutations(dets))
        assert np.array_equal(base.data, rasterize(perm, 32, 16, cmap).data)
        union = np.zeros((16, 32), bool)
        for d in dets:
            x0, y0, x1, y1 = d.bbox
            union[y0:y1, x0:x1] = True
        assert np.array_equal(base.data != 0, union)

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_monotonicity_adding_detection(self, cmap, data):
        boxes = [det(data.draw(st.integers(1, 6)), (2, 2, 12, 9)), det(3, (5, 1, 9, 14))]
        before = rasterize(boxes, 16, 16, cmap)
        extra = det(data.draw(st.integers(1, 6)), (0, 0, 16, 16))
        after = rasterize(boxes + [extra], 16, 16, cmap)
        assert (after.data.astype(int) - before.data.astype(int) >= 0).all()
