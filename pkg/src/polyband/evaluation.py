"""Polygon IoU and detection precision / recall / F-measure."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from shapely.geometry import Polygon as ShapelyPolygon

from .core import PolyBand, band_to_contour
from .errors import DegeneracyError, PolyBandError

__all__ = ["EvalReport", "polygon_iou", "raster_iou", "evaluate_detections", "RASTER_RESOLUTION"]

log = logging.getLogger(__name__)

RASTER_RESOLUTION = 1024
MIN_AREA = 1e-12


def _as_array(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 3:
        raise DegeneracyError("polygon needs at least three (x, y) vertices")
    if not np.all(np.isfinite(p)):
        raise DegeneracyError("polygon has non-finite coordinates")
    return p


def _raster_masks(polys: Sequence[np.ndarray], res: int) -> list[np.ndarray]:
    """Even-odd fill of each polygon on a shared res x res grid over their joint bbox."""
    allp = np.concatenate(polys)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    pw, ph = span / res
    ys = lo[1] + (np.arange(res) + 0.5) * ph
    masks = []
    for p in polys:
        a, b = p, np.roll(p, -1, axis=0)
        keep = a[:, 1] != b[:, 1]
        a, b = a[keep], b[keep]
        y_lo = np.minimum(a[:, 1], b[:, 1])[:, None]
        y_hi = np.maximum(a[:, 1], b[:, 1])[:, None]
        hit = (ys[None, :] >= y_lo) & (ys[None, :] < y_hi)
        xc = a[:, 0:1] + (ys[None, :] - a[:, 1:2]) * (b[:, 0:1] - a[:, 0:1]) / (b[:, 1:2] - a[:, 1:2])
        col = np.ceil((xc - lo[0]) / pw - 0.5).astype(int)
        col = np.clip(col, 0, res)
        toggles = np.zeros((res, res + 1), dtype=np.int32)
        e_idx, r_idx = np.nonzero(hit)
        np.add.at(toggles, (r_idx, col[e_idx, r_idx]), 1)
        masks.append((np.cumsum(toggles, axis=1)[:, :res] & 1).astype(bool))
    return masks


def raster_iou(a, b, res: int = RASTER_RESOLUTION) -> float:
    """IoU by even-odd rasterisation; also valid for self-intersecting input."""
    a, b = _as_array(a), _as_array(b)
    ma, mb = _raster_masks([a, b], res)
    if not ma.any() or not mb.any():
        raise DegeneracyError("polygon has zero rasterised area")
    union = np.count_nonzero(ma | mb)
    return np.count_nonzero(ma & mb) / union


def polygon_iou(a, b) -> float:
    a, b = _as_array(a), _as_array(b)
    pa, pb = ShapelyPolygon(a), ShapelyPolygon(b)
    if not (pa.is_valid and pb.is_valid):
        return raster_iou(a, b)
    if pa.area <= MIN_AREA or pb.area <= MIN_AREA:
        raise DegeneracyError("polygon has zero area")
    inter = pa.intersection(pb).area
    union = pa.area + pb.area - inter
    return float(min(1.0, max(0.0, inter / union)))


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_measure: float
    true_positives: int
    false_positives: int
    false_negatives: int
    per_image: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "per_image": self.per_image,
            "errors": self.errors,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(**d)


def _scored(det: Any, k: int) -> tuple[float, np.ndarray]:
    if isinstance(det, dict):
        score = float(det["score"])
        if "polygon" in det:
            return score, _as_array(det["polygon"])
        return score, band_to_contour(PolyBand.from_dict(det["band"]), k)
    if hasattr(det, "band") and hasattr(det, "confidence"):
        return float(det.confidence), band_to_contour(det.band, k)
    score, shape = det
    if isinstance(shape, PolyBand):
        return float(score), band_to_contour(shape, k)
    return float(score), _as_array(shape)


def _gt_polygon(gt: Any, k: int) -> np.ndarray:
    if isinstance(gt, PolyBand):
        return band_to_contour(gt, k)
    poly = getattr(gt, "polygon", gt)
    return _as_array(poly)


def evaluate_detections(
    detections: Sequence[Sequence[Any]],
    ground_truth: Sequence[Sequence[Any]],
    iou_threshold: float = 0.5,
    score_threshold: float = 0.5,
    k: int = 8,
) -> EvalReport:
    """Micro-averaged P/R/F with greedy confidence-ordered one-to-one matching.

    A detection is a true positive when its IoU with the matched ground
    truth is strictly larger than ``iou_threshold``.
    """
    if len(detections) != len(ground_truth):
        raise ValueError(f"{len(detections)} detection lists for {len(ground_truth)} images")
    tp = fp = fn = 0
    per_image, errors = [], []
    for img, (dets, gts) in enumerate(zip(detections, ground_truth)):
        gt_polys = []
        for g_idx, g in enumerate(gts):
            try:
                gt_polys.append(_gt_polygon(g, k))
            except (PolyBandError, ValueError, KeyError, TypeError) as exc:
                errors.append({"image": img, "kind": "ground_truth", "index": g_idx, "error": str(exc)})
        scored = []
        for d_idx, d in enumerate(dets):
            try:
                score, poly = _scored(d, k)
            except (PolyBandError, ValueError, KeyError, TypeError) as exc:
                errors.append({"image": img, "kind": "detection", "index": d_idx, "error": str(exc)})
                continue
            if score >= score_threshold:
                scored.append((score, d_idx, poly))
        scored.sort(key=lambda s: -s[0])

        matched = [False] * len(gt_polys)
        i_tp = i_fp = 0
        for score, d_idx, poly in scored:
            best, best_iou = -1, 0.0
            for g_idx, gp in enumerate(gt_polys):
                if matched[g_idx]:
                    continue
                try:
                    iou = polygon_iou(poly, gp)
                except DegeneracyError as exc:
                    errors.append({"image": img, "kind": "iou", "index": d_idx, "error": str(exc)})
                    continue
                if iou > best_iou:
                    best, best_iou = g_idx, iou
            if best >= 0 and best_iou > iou_threshold:
                matched[best] = True
                i_tp += 1
            else:
                i_fp += 1
        i_fn = matched.count(False)
        per_image.append({"image": img, "true_positives": i_tp, "false_positives": i_fp, "false_negatives": i_fn})
        tp, fp, fn = tp + i_tp, fp + i_fp, fn + i_fn

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    if errors:
        log.info("evaluation recorded %d malformed instances", len(errors))
    return EvalReport(precision, recall, f, tp, fp, fn, per_image, errors)
