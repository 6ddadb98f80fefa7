"""Annotated polygon -> four ground-truth point sets and a reference band.

Annotations follow the CTW1500 / Total-Text ordering: a polygon of 2n
vertices whose first n run along the top edge left to right and whose last
n run back along the bottom edge right to left. The left and right sides
are the chords joining the two ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SIDE_AXES, SIDES, Axis, CurveSegment, PolyBand, SampledPoints, sample_curve
from .errors import ArgumentError, DegeneracyError, FormatError

__all__ = [
    "GtInstance",
    "split_polygon_sides",
    "fit_side",
    "polygon_to_gt",
    "polygon_to_band",
    "normalize_polygon",
    "padding_instance",
]

MIN_SPREAD = 1e-6
MAX_CONDITION = 1e10


@dataclass(frozen=True, eq=False)
class GtInstance:
    polygon: np.ndarray
    top_pts: SampledPoints
    bottom_pts: SampledPoints
    left_pts: SampledPoints
    right_pts: SampledPoints
    class_indicator: int = 1
    band: PolyBand | None = field(default=None)

    @property
    def is_text(self) -> bool:
        return self.class_indicator > 0

    def side_points(self, side: str) -> SampledPoints:
        return getattr(self, f"{side}_pts")

    def arrays(self) -> np.ndarray:
        """(4, 2, K+1) array of (independent, dependent) coordinates per side."""
        return np.stack(
            [np.stack([self.side_points(s).independent, self.side_points(s).dependent]) for s in SIDES]
        )

    def to_dict(self) -> dict:
        out = {
            "class_indicator": int(self.class_indicator),
            "polygon": np.asarray(self.polygon).tolist(),
        }
        for side in SIDES:
            out[side] = self.side_points(side).points.tolist()
        if self.band is not None:
            out["band"] = self.band.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "GtInstance":
        try:
            pts = {f"{s}_pts": SampledPoints(np.asarray(d[s], dtype=float), SIDE_AXES[s]) for s in SIDES}
            band = PolyBand.from_dict(d["band"]) if "band" in d else None
            return cls(
                polygon=np.asarray(d.get("polygon", []), dtype=float).reshape(-1, 2),
                class_indicator=int(d.get("class_indicator", 1)),
                band=band,
                **pts,
            )
        except KeyError as exc:
            raise FormatError(f"ground-truth instance is missing {exc.args[0]!r}") from None


def padding_instance() -> GtInstance:
    """A non-text instance used to pad the ground-truth set up to N."""
    empty = {f"{s}_pts": SampledPoints.empty(SIDE_AXES[s]) for s in SIDES}
    return GtInstance(polygon=np.zeros((0, 2)), class_indicator=0, **empty)


def normalize_polygon(poly, image_w: float, image_h: float) -> np.ndarray:
    if image_w <= 0 or image_h <= 0:
        raise FormatError("image size must be positive")
    p = np.asarray(poly, dtype=float).reshape(-1, 2)
    return p / np.array([image_w, image_h], dtype=float)


def split_polygon_sides(poly) -> dict[str, np.ndarray]:
    p = np.asarray(poly, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise FormatError("polygon must be a list of (x, y) pairs")
    m = len(p)
    if m % 2 or m < 4:
        raise FormatError(f"polygon needs an even number (>= 4) of vertices, got {m}")
    n = m // 2
    return {
        "top": p[:n].copy(),
        "bottom": p[n:][::-1].copy(),
        "left": np.array([p[0], p[m - 1]]),
        "right": np.array([p[n - 1], p[n]]),
    }


def fit_side(points, axis: Axis) -> CurveSegment:
    """Least-squares quadratic through ``points`` along ``axis``.

    Falls back to a line for two points or an ill-conditioned system.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(p) < 2:
        raise ArgumentError("at least two points are needed to fit a side")
    t, v = (p[:, 0], p[:, 1]) if axis is Axis.HORIZONTAL else (p[:, 1], p[:, 0])
    lo, hi = float(t.min()), float(t.max())
    if hi - lo < MIN_SPREAD:
        raise DegeneracyError(f"independent coordinate spread {hi - lo:g} is too small")

    coeffs = None
    if len(p) >= 3:
        vander = np.column_stack([t * t, t, np.ones_like(t)])
        normal = vander.T @ vander
        if np.linalg.cond(normal) <= MAX_CONDITION:
            coeffs = np.linalg.solve(normal, vander.T @ v)
    if coeffs is None:
        vander = np.column_stack([t, np.ones_like(t)])
        a1, a0 = np.linalg.solve(vander.T @ vander, vander.T @ v)
        coeffs = (0.0, a1, a0)
    a2, a1, a0 = (float(c) for c in coeffs)
    return CurveSegment(a2, a1, a0, lo, hi, axis)


def polygon_to_band(poly) -> PolyBand:
    sides = split_polygon_sides(poly)
    return PolyBand(**{s: fit_side(sides[s], SIDE_AXES[s]) for s in SIDES})


def polygon_to_gt(poly, k: int = 8) -> GtInstance:
    poly = np.asarray(poly, dtype=float)
    band = polygon_to_band(poly)
    pts = {f"{s}_pts": sample_curve(getattr(band, s), k) for s in SIDES}
    return GtInstance(polygon=poly.reshape(-1, 2), class_indicator=1, band=band, **pts)
