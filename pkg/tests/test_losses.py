import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyband.core import Axis, CurveSegment, PolyBand, SampledPoints, sample_curve
from polyband.errors import ArgumentError, DomainError
from polyband.gtfit import GtInstance, padding_instance, polygon_to_gt
from polyband.losses import (
    Detection,
    LossConfig,
    fit_loss,
    focal_cost,
    focal_loss,
    grad_overall,
    loss_shape_constrained,
    loss_unconstrained,
    overall_loss,
)

H, V = Axis.HORIZONTAL, Axis.VERTICAL
CFG = LossConfig()
LN2 = math.log(2.0)

IDENTITY_GT = SampledPoints([(0, 0), (0.5, 0.5), (1, 1)], H)
HALF = CurveSegment(0, 1, 0, 0, 0.5, H)
SHIFTED = CurveSegment(0, 1, 0.1, 0, 1, H)


def gt_for(band, k=8):
    pts = {f"{s}_pts": sample_curve(getattr(band, s), k) for s in ("top", "bottom", "left", "right")}
    return GtInstance(polygon=np.zeros((0, 2)), band=band, **pts)


class TestSideLosses:
    def test_identity_zero(self):
        seg = CurveSegment(0.2, -0.1, 0.3, 0.1, 0.9, H)
        gt = sample_curve(seg, 8)
        assert loss_unconstrained(seg, gt) == 0
        assert loss_shape_constrained(seg, gt, 8) == 0

    def test_half_range(self):
        # |0.5 - 1| from the e1 term only
        assert loss_unconstrained(HALF, IDENTITY_GT) == pytest.approx(0.5, abs=1e-15)
        # x: 0 + 0.25 + 0.5, y: 0 + 0.25 + 0.5
        assert loss_shape_constrained(HALF, IDENTITY_GT, 2) == pytest.approx(1.5, abs=1e-15)

    def test_shifted(self):
        assert loss_unconstrained(SHIFTED, IDENTITY_GT) == pytest.approx(0.3, abs=1e-15)
        assert loss_shape_constrained(SHIFTED, IDENTITY_GT, 2) == pytest.approx(0.3, abs=1e-15)

    def test_shorter_domain_penalised_more(self):
        assert loss_shape_constrained(HALF, IDENTITY_GT, 2) > loss_unconstrained(HALF, IDENTITY_GT)

    def test_vertical_exchanges_axes(self):
        gt = SampledPoints([(0, 0), (0.5, 0.5), (1, 1)], V)
        seg = CurveSegment(0, 1, 0, 0, 0.5, V)
        assert loss_shape_constrained(seg, gt, 2) == pytest.approx(1.5)
        assert loss_unconstrained(seg, gt) == pytest.approx(0.5)

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            loss_shape_constrained(HALF, IDENTITY_GT, 4)
        with pytest.raises(ArgumentError):
            loss_unconstrained(HALF, IDENTITY_GT, 3)

    def test_axis_mismatch(self):
        with pytest.raises(ArgumentError):
            loss_shape_constrained(CurveSegment(0, 1, 0, 0, 1, V), IDENTITY_GT, 2)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=5, max_size=5), st.integers(1, 12))
    def test_nonnegative_and_zero_iff_equal(self, p, k):
        seg = CurveSegment(*p, H)
        gt = sample_curve(CurveSegment(0.1, 0.2, 0.3, 0.2, 0.7, H), k)
        value = loss_shape_constrained(seg, gt, k)
        assert value >= 0
        ours = sample_curve(seg, k).points
        assert (value == 0) == bool(np.all(ours == gt.points))


class TestFitLoss:
    def test_non_text_is_zero(self):
        assert fit_loss(PolyBand.rectangle(0, 0, 1, 1), padding_instance(), CFG) == 0.0

    def test_identity_zero(self):
        band = PolyBand.rectangle(0.1, 0.2, 0.6, 0.4)
        assert fit_loss(band, gt_for(band), CFG) == 0.0

    def test_four_side_sum(self):
        # top/bottom shifted by 0.1 (0.3 each at K=2), left/right by 0.1/3 (0.1 each)
        gt_band = PolyBand(
            CurveSegment(0, 1, 0, 0, 1, H),
            CurveSegment(0, 1, 0.2, 0, 1, H),
            CurveSegment(0, 0, 0.0, 0, 1, V),
            CurveSegment(0, 0, 1.0, 0, 1, V),
        )
        pred = PolyBand(
            CurveSegment(0, 1, 0.1, 0, 1, H),
            CurveSegment(0, 1, 0.3, 0, 1, H),
            CurveSegment(0, 0, 0.1 / 3, 0, 1, V),
            CurveSegment(0, 0, 1.0 - 0.1 / 3, 0, 1, V),
        )
        assert fit_loss(pred, gt_for(gt_band, 2), LossConfig(k=2)) == pytest.approx(0.8, abs=1e-12)

    def test_empty_text_instance(self):
        empty = padding_instance()
        broken = GtInstance(
            polygon=empty.polygon, top_pts=empty.top_pts, bottom_pts=empty.bottom_pts,
            left_pts=empty.left_pts, right_pts=empty.right_pts, class_indicator=1,
        )  # fmt: skip
        with pytest.raises(ArgumentError):
            fit_loss(PolyBand.rectangle(0, 0, 1, 1), broken, CFG)


class TestFocal:
    def test_positive_loss(self):
        # 2 * 0.25 * 0.5^2 * ln 2
        assert focal_loss(0.5, 1, CFG) == pytest.approx(2 * 0.25 * 0.25 * LN2, abs=1e-15)
        assert focal_loss(0.5, 1, CFG) == pytest.approx(0.086643, abs=1e-6)

    def test_negative_loss(self):
        assert focal_loss(0.5, 0, CFG) == pytest.approx(2 * 0.75 * 0.25 * LN2, abs=1e-15)
        assert focal_loss(0.5, 0, CFG) == pytest.approx(0.259930, abs=1e-6)

    def test_cost(self):
        assert focal_cost(0.5, 1, CFG) == pytest.approx(2 * (0.25 * 0.25 * LN2 - 0.75 * 0.25 * LN2), abs=1e-15)
        assert focal_cost(0.5, 1, CFG) == pytest.approx(-0.173287, abs=1e-6)
        assert focal_cost(0.37, 0, CFG) == 0.0

    def test_cost_decreases_with_confidence(self):
        assert focal_cost(0.9, 1, CFG) < focal_cost(0.5, 1, CFG)
        grid = np.linspace(0.01, 0.99, 500)
        costs = [focal_cost(c, 1, CFG) for c in grid]
        assert np.all(np.diff(costs) < 0)

    def test_limit(self):
        assert focal_loss(1 - 1e-12, 1, CFG) < 1e-12

    def test_monotone(self):
        grid = np.linspace(0.001, 0.999, 999)
        pos = np.array([focal_loss(c, 1, CFG) for c in grid])
        neg = np.array([focal_loss(c, 0, CFG) for c in grid])
        assert np.all(np.diff(pos) < 0)
        assert np.all(np.diff(neg) > 0)

    def test_cost_is_positive_minus_negative(self):
        for c in np.linspace(0.001, 0.999, 200):
            assert focal_cost(c, 1, CFG) == pytest.approx(focal_loss(c, 1, CFG) - focal_loss(c, 0, CFG), abs=1e-12)

    @pytest.mark.parametrize("c", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, c):
        with pytest.raises(DomainError):
            focal_loss(c, 1, CFG)
        with pytest.raises(DomainError):
            focal_cost(c, 1, CFG)

    def test_config_validation(self):
        with pytest.raises(ArgumentError):
            LossConfig(alpha=1.0)
        with pytest.raises(ArgumentError):
            LossConfig(k=0)
        assert LossConfig.from_dict(LossConfig().to_dict()) == LossConfig()
        assert LossConfig().to_dict() == {"alpha": 0.25, "gamma": 2.0, "lambda": 2.0, "K": 8}


class TestOverall:
    def setup_method(self):
        self.band = PolyBand.rectangle(0.1, 0.2, 0.6, 0.4)
        self.gt = gt_for(self.band)

    def test_limit_to_zero(self):
        values = []
        for eps in (1e-2, 1e-4, 1e-6):
            preds = [Detection.from_confidence(self.band, 1 - eps), Detection.from_confidence(self.band, eps)]
            values.append(overall_loss(preds, [self.gt], [0, 1], CFG))
        assert values[0] > values[1] > values[2]
        assert values[-1] < 1e-9

    def test_hand_composition(self):
        other = PolyBand.rectangle(0.15, 0.2, 0.6, 0.4)
        preds = [Detection.from_confidence(self.band, 0.5), Detection.from_confidence(other, 0.5)]
        expect = 0.086643397569993 + 0.259930192709979 + fit_loss(other, self.gt, CFG)
        # ground truth 0 -> prediction 1, padding -> prediction 0
        assert overall_loss(preds, [self.gt], [1, 0], CFG) == pytest.approx(expect, abs=1e-12)

    def test_permutation_invariance(self, rng):
        bands = [PolyBand.rectangle(0.1 * i, 0.1, 0.1 * i + 0.2, 0.3) for i in range(4)]
        gts = [gt_for(bands[0]), padding_instance(), gt_for(bands[2]), padding_instance()]
        preds = [Detection(PolyBand.unflatten(b.flatten() + rng.normal(0, 0.02, 20)), rng.normal()) for b in bands]
        mapping = np.array([2, 0, 3, 1])
        base = overall_loss(preds, gts, mapping, CFG)
        perm = rng.permutation(4)
        assert overall_loss(preds, [gts[p] for p in perm], mapping[perm], CFG) == pytest.approx(base, abs=1e-12)

    def test_not_injective(self):
        preds = [Detection(self.band, 0.0), Detection(self.band, 0.0)]
        with pytest.raises(ArgumentError):
            overall_loss(preds, [self.gt], [0, 0], CFG)

    def test_gradient_zero_at_optimum(self):
        preds = [Detection(self.band, 40.0), Detection(self.band, -40.0)]
        g = grad_overall(preds, [self.gt], [0, 1], CFG)
        assert np.all(g.bands == 0) and np.all(g.logits == 0)
