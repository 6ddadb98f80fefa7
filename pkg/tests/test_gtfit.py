import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyband.core import Axis, CurveSegment, PolyBand, band_to_annotation, band_to_contour, sample_curve
from polyband.demo import random_band
from polyband.errors import ArgumentError, DegeneracyError, FormatError
from polyband.evaluation import polygon_iou
from polyband.gtfit import GtInstance, fit_side, normalize_polygon, padding_instance, polygon_to_gt, split_polygon_sides

H, V = Axis.HORIZONTAL, Axis.VERTICAL
RECT = np.array([(0.2, 0.3), (0.7, 0.3), (0.7, 0.5), (0.2, 0.5)])


class TestSplit:
    def test_rectangle(self):
        s = split_polygon_sides(RECT)
        assert all(len(s[k]) == 2 for k in ("top", "bottom", "left", "right"))
        np.testing.assert_array_equal(s["bottom"], [(0.2, 0.5), (0.7, 0.5)])
        np.testing.assert_array_equal(s["left"], [(0.2, 0.3), (0.2, 0.5)])
        np.testing.assert_array_equal(s["right"], [(0.7, 0.3), (0.7, 0.5)])

    def test_fourteen_points(self):
        top = [(0.1 + 0.1 * i, 0.2) for i in range(7)]
        bottom = [(0.7 - 0.1 * i, 0.4) for i in range(7)]
        s = split_polygon_sides(top + bottom)
        assert [len(s[k]) for k in ("top", "bottom", "left", "right")] == [7, 7, 2, 2]
        assert np.all(np.diff(s["bottom"][:, 0]) > 0)

    @pytest.mark.parametrize("n", [2, 3, 5, 7])
    def test_bad_counts(self, n):
        with pytest.raises(FormatError):
            split_polygon_sides(np.random.default_rng(0).random((n, 2)))


class TestFitSide:
    def test_collinear(self):
        seg = fit_side([(0, 0), (0.5, 0.5), (1, 1)], H)
        np.testing.assert_allclose(seg.coefficients, (0, 1, 0), atol=1e-12)
        assert (seg.e0, seg.e1) == (0, 1)

    def test_exact_quadratic(self):
        x = np.linspace(0.1, 0.9, 5)
        y = 0.2 * x**2 + 0.1 * x + 0.3
        seg = fit_side(np.column_stack([x, y]), H)
        np.testing.assert_allclose(seg.coefficients, (0.2, 0.1, 0.3), atol=1e-9)

    def test_two_points_linear(self):
        seg = fit_side([(0.2, 0.3), (0.8, 0.3)], H)
        np.testing.assert_allclose(seg.coefficients, (0, 0, 0.3), atol=1e-12)

    def test_vertical_axis(self):
        seg = fit_side([(0.4, 0.1), (0.5, 0.3)], V)
        assert seg.axis is V
        assert seg.e0 == 0.1 and seg.e1 == 0.3
        assert seg(0.2) == pytest.approx(0.45)

    def test_too_few(self):
        with pytest.raises(ArgumentError):
            fit_side([(0.1, 0.1)], H)

    def test_zero_spread(self):
        with pytest.raises(DegeneracyError):
            fit_side([(0.5, 0.1), (0.5, 0.9), (0.5, 0.4)], H)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=3, max_size=12, unique_by=lambda p: p[0]))
    def test_reversal_invariant(self, pts):
        pts = np.array(pts)
        if np.ptp(pts[:, 0]) < 1e-3:
            return
        a = fit_side(pts, H)
        b = fit_side(pts[::-1], H)
        np.testing.assert_allclose(a.as_tuple(), b.as_tuple(), atol=1e-8)


class TestPolygonToGt:
    def test_rectangle_iou(self):
        gt = polygon_to_gt(RECT, 4)
        assert gt.class_indicator == 1
        assert polygon_iou(band_to_contour(gt.band, 4), RECT) >= 0.99

    def test_equal_spacing(self):
        band = random_band(np.random.default_rng(3))
        gt = polygon_to_gt(band_to_annotation(band, 7), 8)
        for side in ("top", "bottom", "left", "right"):
            pts = gt.side_points(side)
            assert len(pts) == 9
            t = pts.independent
            # t_i = t_0 + (t_K - t_0) i / K
            np.testing.assert_allclose(t, t[0] + (t[-1] - t[0]) * np.arange(9) / 8, atol=1e-12)
        assert np.all(np.diff(gt.top_pts.points[:, 0]) > 0)
        assert np.all(np.diff(gt.left_pts.points[:, 1]) > 0)

    def test_band_round_trip(self):
        band = random_band(np.random.default_rng(11))
        gt = polygon_to_gt(band_to_annotation(band, 7), 8)
        for side in ("top", "bottom", "left", "right"):
            expect = sample_curve(getattr(band, side), 8).points
            np.testing.assert_allclose(gt.side_points(side).points, expect, atol=1e-6)
        np.testing.assert_allclose(gt.band.flatten(), band.flatten(), atol=1e-6)

    def test_curved_annotation_chords(self):
        x = np.linspace(0.1, 0.7, 7)
        top = np.column_stack([x, 0.3 + 0.4 * (x - 0.4) ** 2])
        bottom = np.column_stack([x[::-1] + 0.02, 0.45 + 0.4 * (x[::-1] - 0.4) ** 2])
        poly = np.vstack([top, bottom])
        gt = polygon_to_gt(poly, 8)
        # left chord runs from poly[0] to poly[-1]: a straight line, resampled at 9 points
        left = gt.left_pts.points
        assert len(left) == 9
        np.testing.assert_allclose(left[0], poly[0], atol=1e-12)
        np.testing.assert_allclose(left[-1], poly[-1], atol=1e-12)
        d = left - left[0]
        cross = d[:, 0] * (poly[-1] - poly[0])[1] - d[:, 1] * (poly[-1] - poly[0])[0]
        np.testing.assert_allclose(cross, 0, atol=1e-12)
        assert gt.band.left.a2 == 0.0

    def test_padding_instance(self):
        pad = padding_instance()
        assert pad.class_indicator == 0
        assert all(len(pad.side_points(s)) == 0 for s in ("top", "bottom", "left", "right"))

    def test_serialization_round_trip(self):
        gt = polygon_to_gt(RECT, 4)
        back = GtInstance.from_dict(gt.to_dict())
        np.testing.assert_array_equal(back.arrays(), gt.arrays())
        assert back.band == gt.band

    def test_normalize(self):
        p = normalize_polygon([[100, 50], [300, 50], [300, 150], [100, 150]], 400, 200)
        np.testing.assert_allclose(p, [[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]])
