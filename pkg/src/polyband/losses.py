"""Fitting losses, focal terms and the set-prediction objective.

Per-side losses come in two flavours:

* shape-constrained: points are sampled on the predicted curve over its own
  domain and compared one-to-one with the equally spaced ground-truth points,
  so a wrong domain length is penalised at every sample;
* unconstrained: the predicted curve is evaluated at the ground-truth
  abscissae and the domain ends are compared separately.

The array kernels below work on band parameters shaped ``(..., 20)`` and
ground-truth sides shaped ``(..., 4, 2, K+1)`` holding (independent,
dependent) coordinates per side. The object-level functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import SIDES, CurveSegment, PolyBand, SampledPoints
from .errors import ArgumentError, DomainError
from .gtfit import GtInstance, padding_instance

__all__ = [
    "LossConfig",
    "Detection",
    "OverallGradient",
    "sigmoid",
    "logit",
    "loss_unconstrained",
    "loss_shape_constrained",
    "fit_loss",
    "focal_cost",
    "focal_loss",
    "pad_ground_truth",
    "overall_loss",
    "grad_overall",
    "side_loss_grad",
    "fit_loss_matrix",
    "objective",
]

CLAMP = 1e-7


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.25
    gamma: float = 2.0
    lam: float = 2.0
    k: int = 8

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.gamma < 0:
            raise ArgumentError(f"gamma must be >= 0, got {self.gamma}")
        if self.lam <= 0:
            raise ArgumentError(f"lambda must be > 0, got {self.lam}")
        if int(self.k) != self.k or self.k < 1:
            raise ArgumentError(f"K must be a positive integer, got {self.k}")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {"alpha": d["alpha"], "gamma": d["gamma"], "lambda": d["lam"], "K": d["k"]}

    @classmethod
    def from_dict(cls, d: dict) -> "LossConfig":
        kw = {}
        for key, name in (("alpha", "alpha"), ("gamma", "gamma"), ("lambda", "lam"), ("K", "k"), ("k", "k")):
            if key in d:
                kw[name] = int(d[key]) if name == "k" else float(d[key])
        return cls(**kw)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def logit(c):
    c = np.asarray(c, dtype=float)
    out = np.log(c) - np.log1p(-c)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Detection:
    """One predicted candidate: a band plus a confidence stored as a logit."""

    band: PolyBand
    logit: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.logit):
            raise DomainError("detection logit must be finite")

    @property
    def confidence(self) -> float:
        return sigmoid(self.logit)

    @classmethod
    def from_confidence(cls, band: PolyBand, confidence: float) -> "Detection":
        if not 0.0 < confidence < 1.0:
            raise DomainError(f"confidence must lie in (0, 1), got {confidence}")
        return cls(band, logit(confidence))


class OverallGradient(NamedTuple):
    bands: np.ndarray  # (N, 20)
    logits: np.ndarray  # (N,)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.bands.ravel(), self.logits])


# --------------------------------------------------------------------- kernels


def _sign(x):
    return np.sign(x)  # sign(0) == 0 picks the zero subgradient


def side_loss_grad(params, gt, constrained: bool = True, need_grad: bool = True):
    """Per-side loss and gradient.

    ``params``: (..., 5) as (a2, a1, a0, e0, e1); ``gt``: (..., 2, K+1) as
    (independent, dependent). Leading dimensions broadcast. Returns the loss
    with shape ``(...)`` and, if requested, the gradient with shape ``(..., 5)``.
    """
    params = np.asarray(params, dtype=float)
    gt = np.asarray(gt, dtype=float)
    a2, a1, a0, e0, e1 = (params[..., i, None] for i in range(5))
    t_hat, d_hat = gt[..., 0, :], gt[..., 1, :]
    k = t_hat.shape[-1] - 1
    s = np.arange(k + 1) / k

    if constrained:
        # same arithmetic as sample_curve, so an exact match gives exactly zero
        t = e0 + (e1 - e0) * np.arange(k + 1) / k
        t[..., -1] = e1[..., 0]
        f = (a2 * t + a1) * t + a0
        r_t, r_f = t - t_hat, f - d_hat
        loss = np.abs(r_t).sum(-1) + np.abs(r_f).sum(-1)
        if not need_grad:
            return loss
        g_t, g_f = _sign(r_t), _sign(r_f)
        slope = 2.0 * a2 * t + a1
        dt = g_t + g_f * slope
        grad = np.stack(
            [
                (g_f * t * t).sum(-1),
                (g_f * t).sum(-1),
                g_f.sum(-1),
                (dt * (1.0 - s)).sum(-1),
                (dt * s).sum(-1),
            ],
            axis=-1,
        )
        return loss, grad

    f = (a2 * t_hat + a1) * t_hat + a0
    r = f - d_hat
    r0 = e0[..., 0] - t_hat[..., 0]
    r1 = e1[..., 0] - t_hat[..., -1]
    loss = np.abs(r).sum(-1) + np.abs(r0) + np.abs(r1)
    if not need_grad:
        return loss
    g = _sign(r)
    grad = np.stack(
        [(g * t_hat * t_hat).sum(-1), (g * t_hat).sum(-1), g.sum(-1), _sign(r0), _sign(r1)],
        axis=-1,
    )
    return loss, grad


def fit_loss_matrix(theta, gt_sides, constrained: bool = True) -> np.ndarray:
    """Fit loss of every (ground truth, prediction) pair.

    ``theta``: (N, 20); ``gt_sides``: (M, 4, 2, K+1). Returns (M, N).
    """
    theta = np.asarray(theta, dtype=float).reshape(-1, 4, 5)
    gt_sides = np.asarray(gt_sides, dtype=float)
    per_side = side_loss_grad(theta[None], gt_sides[:, None], constrained, need_grad=False)
    return per_side.sum(-1)


def _clamped(c):
    return np.clip(c, CLAMP, 1.0 - CLAMP)


def _focal_pos(c, cfg):
    return -cfg.lam * cfg.alpha * (1.0 - c) ** cfg.gamma * np.log(c)


def _focal_neg(c, cfg):
    return -cfg.lam * (1.0 - cfg.alpha) * c**cfg.gamma * np.log1p(-c)


def _focal_pos_dc(c, cfg):
    g = cfg.gamma
    return -cfg.lam * cfg.alpha * ((1.0 - c) ** g / c - g * (1.0 - c) ** (g - 1) * np.log(c))


def _focal_neg_dc(c, cfg):
    g = cfg.gamma
    return cfg.lam * (1.0 - cfg.alpha) * (c**g / (1.0 - c) - g * c ** (g - 1) * np.log1p(-c))


def _focal_logit_terms(z, positive, cfg):
    """Focal loss and its derivative w.r.t. the logit, elementwise."""
    c_raw = sigmoid(np.asarray(z, dtype=float))
    c = _clamped(c_raw)
    loss = np.where(positive, _focal_pos(c, cfg), _focal_neg(c, cfg))
    dc = np.where(positive, _focal_pos_dc(c, cfg), _focal_neg_dc(c, cfg))
    inside = (c_raw > CLAMP) & (c_raw < 1.0 - CLAMP)
    return loss, np.where(inside, dc * c_raw * (1.0 - c_raw), 0.0)


def focal_cost_vector(z, cfg) -> np.ndarray:
    """Positive-minus-negative focal cost for a vector of logits."""
    c = _clamped(sigmoid(np.asarray(z, dtype=float)))
    return _focal_pos(c, cfg) - _focal_neg(c, cfg)


def objective(theta, logits, gt_sides, text_rows, mapping, cfg: LossConfig, constrained=True, need_grad=True):
    """Overall loss for a fixed assignment, on arrays.

    ``gt_sides`` holds the M text instances; ``text_rows[m]`` is the row of
    instance m inside the padded ground-truth list; ``mapping[j]`` is the
    prediction assigned to padded row j.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1, 4, 5)
    logits = np.asarray(logits, dtype=float)
    mapping = np.asarray(mapping, dtype=int)
    n = len(logits)
    positive = np.zeros(n, dtype=bool)
    positive[np.asarray(text_rows, dtype=int)] = True

    fl, fg = _focal_logit_terms(logits[mapping], positive, cfg)
    total = float(fl.sum())
    if len(text_rows):
        matched = mapping[np.asarray(text_rows, dtype=int)]
        res = side_loss_grad(theta[matched], gt_sides, constrained, need_grad)
        if need_grad:
            side_loss, side_grad = res
        else:
            side_loss = res
        total += float(side_loss.sum())
    if not need_grad:
        return total

    g_theta = np.zeros_like(theta)
    if len(text_rows):
        np.add.at(g_theta, matched, side_grad)
    g_logit = np.zeros(n)
    np.add.at(g_logit, mapping, fg)
    return total, OverallGradient(g_theta.reshape(n, 20), g_logit)


# -------------------------------------------------------------- object level


def _check_side(seg: CurveSegment, gt: SampledPoints, k: int | None):
    if seg.axis is not gt.axis:
        raise ArgumentError("segment axis does not match ground-truth orientation")
    if len(gt) < 2:
        raise ArgumentError("ground-truth point set needs at least two points")
    if k is not None and len(gt) != k + 1:
        raise ArgumentError(f"ground truth has {len(gt)} points, expected K+1={k + 1}")


def _gt_array(gt: SampledPoints) -> np.ndarray:
    return np.stack([gt.independent, gt.dependent])


def loss_unconstrained(seg: CurveSegment, gt: SampledPoints, k: int | None = None) -> float:
    _check_side(seg, gt, k)
    return float(side_loss_grad(seg.as_tuple(), _gt_array(gt), constrained=False, need_grad=False))


def loss_shape_constrained(seg: CurveSegment, gt: SampledPoints, k: int | None = None) -> float:
    _check_side(seg, gt, k)
    return float(side_loss_grad(seg.as_tuple(), _gt_array(gt), constrained=True, need_grad=False))


def fit_loss(band: PolyBand, gt: GtInstance, cfg: LossConfig = LossConfig(), constrained: bool = True) -> float:
    if not gt.is_text:
        return 0.0
    if any(len(gt.side_points(s)) == 0 for s in SIDES):
        raise ArgumentError("text instance has empty point sets")
    side_fn = loss_shape_constrained if constrained else loss_unconstrained
    return sum(side_fn(getattr(band, s), gt.side_points(s), cfg.k) for s in SIDES)


def _check_confidence(c: float):
    if not (0.0 < c < 1.0):
        raise DomainError(f"confidence must lie in (0, 1), got {c}")


def focal_cost(c: float, c_hat: int, cfg: LossConfig = LossConfig()) -> float:
    _check_confidence(c)
    if not c_hat:
        return 0.0
    c = float(_clamped(c))
    return float(_focal_pos(c, cfg) - _focal_neg(c, cfg))


def focal_loss(c: float, c_hat: int, cfg: LossConfig = LossConfig()) -> float:
    _check_confidence(c)
    c = float(_clamped(c))
    return float(_focal_pos(c, cfg) if c_hat else _focal_neg(c, cfg))


def pad_ground_truth(gts: Sequence[GtInstance], n: int) -> list[GtInstance]:
    gts = list(gts)
    if len(gts) > n:
        raise ArgumentError(f"{len(gts)} ground-truth instances exceed N={n}")
    return gts + [padding_instance() for _ in range(n - len(gts))]


def _mapping_of(assignment) -> np.ndarray:
    mapping = getattr(assignment, "mapping", assignment)
    return np.asarray(mapping, dtype=int)


def _prepare(preds, gts, assignment, cfg):
    n = len(preds)
    gts = pad_ground_truth(gts, n)
    mapping = _mapping_of(assignment)
    if mapping.shape != (n,):
        raise ArgumentError(f"assignment must have length N={n}")
    if len(set(mapping.tolist())) != n or mapping.min() < 0 or mapping.max() >= n:
        raise ArgumentError("assignment is not a bijection onto the predictions")
    text_rows = [j for j, g in enumerate(gts) if g.is_text]
    for j in text_rows:
        if any(len(gts[j].side_points(s)) != cfg.k + 1 for s in SIDES):
            raise ArgumentError(f"ground-truth instance {j} is not sampled at K={cfg.k}")
    gt_sides = np.stack([gts[j].arrays() for j in text_rows]) if text_rows else np.zeros((0, 4, 2, cfg.k + 1))
    theta = np.stack([p.band.flatten() for p in preds])
    logits = np.array([p.logit for p in preds], dtype=float)
    return theta, logits, gt_sides, text_rows, mapping


def overall_loss(preds, gts, assignment, cfg: LossConfig = LossConfig(), constrained: bool = True) -> float:
    theta, logits, gt_sides, text_rows, mapping = _prepare(preds, gts, assignment, cfg)
    return objective(theta, logits, gt_sides, text_rows, mapping, cfg, constrained, need_grad=False)


def grad_overall(preds, gts, assignment, cfg: LossConfig = LossConfig(), constrained: bool = True) -> OverallGradient:
    theta, logits, gt_sides, text_rows, mapping = _prepare(preds, gts, assignment, cfg)
    return objective(theta, logits, gt_sides, text_rows, mapping, cfg, constrained)[1]
