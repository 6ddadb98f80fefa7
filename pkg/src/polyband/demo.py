"""Synthetic scenes and direct set-prediction fitting.

A scene is a handful of quadratic-band text instances on the unit square.
``direct_fit`` optimises a fixed-size set of (logit, band) candidates with
plain gradient descent on the overall objective, re-solving the bipartite
matching at every step, i.e. the training mechanics without a network.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import PolyBand, band_to_annotation, band_to_contour
from .errors import ArgumentError, DegeneracyError, GenerationError, NumericalError
from .evaluation import evaluate_detections, polygon_iou
from .gtfit import GtInstance, polygon_to_gt
from .losses import Detection, LossConfig, objective, sigmoid
from .matching import cost_matrix_arrays, hungarian_assign

__all__ = [
    "SyntheticScene",
    "FitTrace",
    "FitResult",
    "generate_scene",
    "random_band",
    "direct_fit",
    "domain_length_error",
    "MAX_ATTEMPTS",
    "scene_report",
    "confidences",
]

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 10_000
MAX_PAIR_IOU = 0.3
ANNOTATION_POINTS = 7  # per long side, as in 14-point annotations


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    seed: int
    instances: list[GtInstance]

    @property
    def bands(self) -> list[PolyBand]:
        return [g.band for g in self.instances]

    @property
    def polygons(self) -> list[np.ndarray]:
        return [g.polygon for g in self.instances]

    def gt_sides(self) -> np.ndarray:
        return np.stack([g.arrays() for g in self.instances])


@dataclass
class FitTrace:
    losses: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)
    steps: int = 0
    mapping: list[int] = field(default_factory=list)
    instance_ious: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "loss", "lr"])
        for i, (loss, lr) in enumerate(zip(self.losses, self.learning_rates)):
            w.writerow([i, repr(float(loss)), repr(float(lr))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class FitResult:
    detections: list[Detection]
    trace: FitTrace

    def __iter__(self):
        return iter((self.detections, self.trace))


def _shifted(a2, a1, a0, s, h):
    """Coefficients of x -> f(x - s) + h."""
    return a2, a1 - 2 * a2 * s, a2 * s * s - a1 * s + a0 + h


def random_band(rng: np.random.Generator) -> PolyBand:
    """A band with quadratic top/bottom (|a2| <= 0.5) and straight chord sides."""
    length = rng.uniform(0.15, 0.45)
    height = rng.uniform(0.05, 0.15)
    shift = rng.uniform(-0.05, 0.05)
    x0 = rng.uniform(0.02, 0.98 - length)
    x1 = x0 + length
    xc, yc = 0.5 * (x0 + x1), rng.uniform(0.1, 0.9)
    a2 = rng.uniform(-0.5, 0.5)
    slope = rng.uniform(-0.3, 0.3)
    top = (a2, slope - 2 * a2 * xc, a2 * xc * xc - slope * xc + yc)
    bottom = _shifted(*top, shift, height)
    ft = lambda x: (top[0] * x + top[1]) * x + top[2]  # noqa: E731
    y0, y1 = ft(x0), ft(x1)
    theta = [
        *top, x0, x1,
        *bottom, x0 + shift, x1 + shift,
        0.0, shift / height, x0 - shift * y0 / height, y0, y0 + height,
        0.0, shift / height, x1 - shift * y1 / height, y1, y1 + height,
    ]  # fmt: skip
    return PolyBand.unflatten(theta)


def generate_scene(seed: int, m: int, k: int = 8) -> SyntheticScene:
    if not 1 <= m <= 8:
        raise ArgumentError(f"scene size must be in 1..8, got {m}")
    rng = np.random.default_rng(seed)
    contours: list[np.ndarray] = []
    instances: list[GtInstance] = []
    for _ in range(MAX_ATTEMPTS):
        band = random_band(rng)
        try:
            contour = band_to_contour(band, k)
        except DegeneracyError:
            continue
        if contour.min() < 0.0 or contour.max() > 1.0:
            continue
        if any(polygon_iou(contour, c) >= MAX_PAIR_IOU for c in contours):
            continue
        contours.append(contour)
        instances.append(polygon_to_gt(band_to_annotation(band, ANNOTATION_POINTS), k))
        if len(instances) == m:
            return SyntheticScene(seed, instances)
    raise GenerationError(f"could not place {m} instances in {MAX_ATTEMPTS} attempts (seed {seed})")


def _initial_candidates(n: int, rng: np.random.Generator):
    base = PolyBand.rectangle(0.35, 0.45, 0.65, 0.55).flatten()
    theta = base + rng.normal(0.0, 0.02, size=(n, 20))
    logits = -2.0 + rng.normal(0.0, 0.1, size=n)
    return theta, logits


def _safe_iou(band: PolyBand, poly: np.ndarray, k: int) -> float:
    try:
        return polygon_iou(band_to_contour(band, k), poly)
    except DegeneracyError:
        return 0.0


def direct_fit(
    scene: SyntheticScene,
    n: int = 20,
    steps: int = 3000,
    lr: float = 0.01,
    seed: int = 0,
    cfg: LossConfig = LossConfig(),
    constrained: bool = True,
) -> FitResult:
    """Gradient descent on the overall objective, with the learning rate cut
    tenfold for the last fifth of the steps."""
    m = len(scene.instances)
    if n < m:
        raise ArgumentError(f"N={n} is smaller than the {m} instances in the scene")
    if steps < 1:
        raise ArgumentError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    theta, logits = _initial_candidates(n, rng)
    gt_sides = scene.gt_sides()
    if gt_sides.shape[-1] != cfg.k + 1:
        raise ArgumentError(f"scene is sampled at K={gt_sides.shape[-1] - 1}, config has K={cfg.k}")
    text_rows = np.arange(m)
    decay_from = steps - steps // 5

    trace = FitTrace()
    mapping = np.arange(n)
    for step in range(steps):
        with np.errstate(over="ignore", invalid="ignore"):
            cost = cost_matrix_arrays(theta, logits, gt_sides, text_rows, cfg, constrained)
        if not np.all(np.isfinite(cost)):
            trace.steps = step
            raise NumericalError(f"non-finite matching cost at step {step}", trace)
        mapping = hungarian_assign(cost).mapping
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grad = objective(theta, logits, gt_sides, text_rows, mapping, cfg, constrained)
        rate = lr if step < decay_from else lr / 10.0
        trace.losses.append(loss)
        trace.learning_rates.append(rate)
        if not (np.isfinite(loss) and np.all(np.isfinite(grad.bands)) and np.all(np.isfinite(grad.logits))):
            trace.steps = step + 1
            raise NumericalError(f"non-finite loss or gradient at step {step}", trace)
        theta = theta - rate * grad.bands
        logits = logits - rate * grad.logits

    trace.steps = steps
    cost = cost_matrix_arrays(theta, logits, gt_sides, text_rows, cfg, constrained)
    mapping = hungarian_assign(cost).mapping
    trace.mapping = [int(x) for x in mapping]
    detections = [Detection(PolyBand.unflatten(t), float(z)) for t, z in zip(theta, logits)]
    trace.instance_ious = [
        _safe_iou(detections[mapping[j]].band, scene.instances[j].polygon, cfg.k) for j in range(m)
    ]
    log.debug("direct fit finished: loss %.4g, ious %s", trace.losses[-1], trace.instance_ious)
    return FitResult(detections, trace)


def domain_length_error(detections, trace: FitTrace, scene: SyntheticScene) -> float:
    """Mean |predicted - true| domain length over matched instances and their four sides."""
    errs = []
    for j, gt in enumerate(scene.instances):
        band = detections[trace.mapping[j]].band
        for seg, true in zip(band, gt.band):
            errs.append(abs((seg.e1 - seg.e0) - (true.e1 - true.e0)))
    return float(np.mean(errs))


def scene_report(detections, scene: SyntheticScene, iou_threshold=0.5, score_threshold=0.5, k=8):
    return evaluate_detections([detections], [scene.polygons], iou_threshold, score_threshold, k)


def confidences(detections) -> np.ndarray:
    return sigmoid(np.array([d.logit for d in detections]))
