"""Polynomial band value types, curve evaluation, sampling and contours.

All coordinates are normalized to the unit square. A band is four quadratic
segments: top and bottom are ``y = f(x)``, left and right are ``x = f(y)``,
each restricted to its own domain ``[e0, e1]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import ArgumentError, DegeneracyError, DomainError

__all__ = [
    "Axis",
    "CurveSegment",
    "PolyBand",
    "SampledPoints",
    "Diagnostic",
    "SIDES",
    "eval_curve",
    "sample_curve",
    "band_to_contour",
    "band_to_annotation",
    "validate_band",
    "polygon_area",
]

SIDES = ("top", "bottom", "left", "right")
SEGMENT_FIELDS = ("a2", "a1", "a0", "e0", "e1")

DUPLICATE_TOL = 1e-9
DEGENERATE_AREA = 1e-8
FRAME_MARGIN = 0.1


class Axis(enum.Enum):
    HORIZONTAL = "horizontal"  # y = f(x), top/bottom
    VERTICAL = "vertical"  # x = f(y), left/right


SIDE_AXES = {
    "top": Axis.HORIZONTAL,
    "bottom": Axis.HORIZONTAL,
    "left": Axis.VERTICAL,
    "right": Axis.VERTICAL,
}


@dataclass(frozen=True)
class CurveSegment:
    a2: float
    a1: float
    a0: float
    e0: float
    e1: float
    axis: Axis = Axis.HORIZONTAL

    def __call__(self, t):
        return eval_curve(self, t)

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.a2, self.a1, self.a0)

    @property
    def length(self) -> float:
        return self.e1 - self.e0

    def canonicalize(self) -> "CurveSegment":
        """Return a copy with ``e0 <= e1``."""
        if self.e0 <= self.e1:
            return self
        return replace(self, e0=self.e1, e1=self.e0)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.a2, self.a1, self.a0, self.e0, self.e1)

    def to_dict(self) -> dict:
        return dict(zip(SEGMENT_FIELDS, map(float, self.as_tuple())))

    @classmethod
    def from_dict(cls, d: dict, axis: Axis) -> "CurveSegment":
        try:
            return cls(*(float(d[k]) for k in SEGMENT_FIELDS), axis=axis)
        except KeyError as exc:
            raise ArgumentError(f"curve segment is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class PolyBand:
    top: CurveSegment
    bottom: CurveSegment
    left: CurveSegment
    right: CurveSegment

    def __post_init__(self):
        for side in SIDES:
            seg = getattr(self, side)
            if seg.axis is not SIDE_AXES[side]:
                raise ArgumentError(f"{side} segment must have axis {SIDE_AXES[side].value}")

    def __iter__(self) -> Iterator[CurveSegment]:
        return iter((self.top, self.bottom, self.left, self.right))

    def flatten(self) -> np.ndarray:
        """The 20 parameters in (top, bottom, left, right) x (a2, a1, a0, e0, e1) order."""
        return np.array([v for seg in self for v in seg.as_tuple()], dtype=float)

    @classmethod
    def unflatten(cls, theta: Sequence[float]) -> "PolyBand":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (20,):
            raise ArgumentError(f"expected 20 band parameters, got shape {theta.shape}")
        segs = {
            side: CurveSegment(*map(float, theta[5 * i : 5 * i + 5]), axis=SIDE_AXES[side])
            for i, side in enumerate(SIDES)
        }
        return cls(**segs)

    def canonicalize(self) -> "PolyBand":
        return PolyBand(*(seg.canonicalize() for seg in self))

    def to_dict(self) -> dict:
        return {side: getattr(self, side).to_dict() for side in SIDES}

    @classmethod
    def from_dict(cls, d: dict) -> "PolyBand":
        try:
            return cls(**{side: CurveSegment.from_dict(d[side], SIDE_AXES[side]) for side in SIDES})
        except KeyError as exc:
            raise ArgumentError(f"band is missing side {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ArgumentError(f"malformed band: {exc}") from None

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float) -> "PolyBand":
        """Axis-aligned band with corners (x0, y0) and (x1, y1)."""
        h, v = Axis.HORIZONTAL, Axis.VERTICAL
        return cls(
            top=CurveSegment(0.0, 0.0, y0, x0, x1, h),
            bottom=CurveSegment(0.0, 0.0, y1, x0, x1, h),
            left=CurveSegment(0.0, 0.0, x0, y0, y1, v),
            right=CurveSegment(0.0, 0.0, x1, y0, y1, v),
        )


@dataclass(frozen=True, eq=False)
class SampledPoints:
    """K+1 ordered points along one side, stored as an (K+1, 2) array of (x, y)."""

    points: np.ndarray
    axis: Axis = Axis.HORIZONTAL

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampledPoints):
            return NotImplemented
        return self.axis is other.axis and np.array_equal(self.points, other.points)

    @property
    def k_segments(self) -> int:
        return len(self.points) - 1

    @property
    def independent(self) -> np.ndarray:
        return self.points[:, 0] if self.axis is Axis.HORIZONTAL else self.points[:, 1]

    @property
    def dependent(self) -> np.ndarray:
        return self.points[:, 1] if self.axis is Axis.HORIZONTAL else self.points[:, 0]

    @classmethod
    def empty(cls, axis: Axis) -> "SampledPoints":
        return cls(np.zeros((0, 2)), axis)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    side: str
    code: str
    message: str


def eval_curve(seg: CurveSegment, t):
    """Evaluate ``a2 t^2 + a1 t + a0``; ``t`` may be a scalar or an array."""
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("curve evaluated at a non-finite coordinate")
    out = (seg.a2 * arr + seg.a1) * arr + seg.a0
    return float(out) if out.ndim == 0 else out


def _sample_positions(e0: float, e1: float, k: int) -> np.ndarray:
    t = e0 + (e1 - e0) * np.arange(k + 1) / k
    # keep the end point exact
    t[-1] = e1
    return t


def sample_curve(seg: CurveSegment, k: int) -> SampledPoints:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ArgumentError(f"K must be a positive integer, got {k!r}")
    t = _sample_positions(seg.e0, seg.e1, int(k))
    f = eval_curve(seg, t)
    pts = np.column_stack([t, f] if seg.axis is Axis.HORIZONTAL else [f, t])
    return SampledPoints(pts, seg.axis)


def polygon_area(poly) -> float:
    """Shoelace area (absolute value)."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _dedup(points: np.ndarray, tol: float = DUPLICATE_TOL) -> np.ndarray:
    keep = [points[0]]
    for p in points[1:]:
        if np.max(np.abs(p - keep[-1])) > tol:
            keep.append(p)
    while len(keep) > 1 and np.max(np.abs(keep[-1] - keep[0])) <= tol:
        keep.pop()
    return np.array(keep)


def band_to_contour(pb: PolyBand, k: int = 8) -> np.ndarray:
    """Closed contour: top left->right, right top->bottom, bottom right->left, left bottom->top."""
    pb = pb.canonicalize()
    top = sample_curve(pb.top, k).points
    right = sample_curve(pb.right, k).points
    bottom = sample_curve(pb.bottom, k).points[::-1]
    left = sample_curve(pb.left, k).points[::-1]
    contour = _dedup(np.concatenate([top, right, bottom, left]))
    if len(contour) < 4 or polygon_area(contour) < DEGENERATE_AREA:
        raise DegeneracyError("band contour has (near) zero area")
    return contour


def band_to_annotation(pb: PolyBand, n: int = 7) -> np.ndarray:
    """Annotation-style polygon of 2n vertices: n along the top left->right,
    then n along the bottom right->left."""
    pb = pb.canonicalize()
    top = sample_curve(pb.top, n - 1).points
    bottom = sample_curve(pb.bottom, n - 1).points[::-1]
    return np.concatenate([top, bottom])


def validate_band(pb: PolyBand, k: int = 8) -> list[Diagnostic]:
    out = []
    for side in SIDES:
        seg = getattr(pb, side)
        if not seg.is_finite():
            out.append(Diagnostic("error", side, "non_finite", f"{side}: non-finite parameter"))
            continue
        for name in ("e0", "e1"):
            v = getattr(seg, name)
            if not 0.0 <= v <= 1.0:
                out.append(
                    Diagnostic("error", side, "bound_out_of_range", f"{side}: {name}={v:g} outside [0, 1]")
                )
        if seg.e0 > seg.e1:
            out.append(
                Diagnostic("error", side, "reversed_domain", f"{side}: reversed domain e0={seg.e0:g} > e1={seg.e1:g}")
            )
        pts = sample_curve(seg.canonicalize(), k).points
        lo, hi = -FRAME_MARGIN, 1.0 + FRAME_MARGIN
        if np.any(pts < lo) or np.any(pts > hi):
            out.append(
                Diagnostic("warning", side, "out_of_frame", f"{side}: sampled points leave [{lo:g}, {hi:g}]")
            )
    return out
