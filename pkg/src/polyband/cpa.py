"""Cross-scale pixel attention.

A parameter-free operator over a four-level feature pyramid. Each level is
resized to its target size, then all levels are brought to a shared grid
and stacked; a softmax over the scale axis (per pixel, per channel) weights
the stacked features, and the weighted maps are resized back to the target
sizes. Channel counts must already agree across levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError

__all__ = ["FeatureMap", "CpaConfig", "resize_bilinear", "scale_softmax", "cpa_forward", "cpa_attention"]


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """A (height, width, channels) float64 array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 2:
            v = v[..., None]
        if v.ndim != 3 or v.size == 0:
            raise ArgumentError(f"feature map must be a non-empty (h, w, c) array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ArgumentError("feature map holds non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def to_dict(self) -> dict:
        return {"h": self.height, "w": self.width, "c": self.channels, "data": self.values.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMap":
        h, w, c = int(d["h"]), int(d["w"]), int(d["c"])
        data = np.asarray(d["data"], dtype=np.float32).astype(np.float64)
        if data.size != h * w * c:
            raise ArgumentError(f"tensor data has {data.size} values, expected {h}*{w}*{c}")
        return cls(data.reshape(h, w, c))


@dataclass(frozen=True)
class CpaConfig:
    target_sizes: tuple[int, int, int, int] = (128, 64, 32, 16)
    common_size: int = 64

    def __post_init__(self):
        if len(self.target_sizes) != 4 or any(int(s) < 1 for s in self.target_sizes):
            raise ArgumentError("CPA needs four positive target sizes")
        if self.common_size not in self.target_sizes:
            raise ArgumentError(f"common size {self.common_size} must be one of {self.target_sizes}")

    def to_dict(self) -> dict:
        return {"target_sizes": list(self.target_sizes), "common_size": self.common_size}

    @classmethod
    def from_dict(cls, d: dict) -> "CpaConfig":
        kw = {}
        if "target_sizes" in d:
            kw["target_sizes"] = tuple(int(s) for s in d["target_sizes"])
        if "common_size" in d:
            kw["common_size"] = int(d["common_size"])
        return cls(**kw)


def _axis_weights(n_in: int, n_out: int):
    # corner-aligned: output i samples input position i * (n_in - 1) / (n_out - 1)
    if n_out == 1 or n_in == 1:
        pos = np.zeros(n_out)
    else:
        pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    lo = np.clip(np.floor(pos).astype(int), 0, n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    return lo, hi, frac


def resize_bilinear(fmap, out_h: int, out_w: int) -> FeatureMap:
    fmap = fmap if isinstance(fmap, FeatureMap) else FeatureMap(fmap)
    if out_h < 1 or out_w < 1:
        raise ArgumentError(f"output size must be positive, got {out_h}x{out_w}")
    v = fmap.values
    if (out_h, out_w) == v.shape[:2]:
        return FeatureMap(v.copy())
    r0, r1, fr = _axis_weights(v.shape[0], out_h)
    c0, c1, fc = _axis_weights(v.shape[1], out_w)
    fr = fr[:, None, None]
    fc = fc[None, :, None]
    rows = v[r0] * (1.0 - fr) + v[r1] * fr
    out = rows[:, c0] * (1.0 - fc) + rows[:, c1] * fc
    return FeatureMap(out)


def scale_softmax(stacked: np.ndarray) -> np.ndarray:
    """Softmax over the last (scale) axis."""
    z = stacked - stacked.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_pyramid(pyramid: Sequence) -> list[FeatureMap]:
    maps = [m if isinstance(m, FeatureMap) else FeatureMap(m) for m in pyramid]
    if len(maps) != 4:
        raise ArgumentError(f"CPA expects four feature maps, got {len(maps)}")
    if len({m.channels for m in maps}) != 1:
        raise ArgumentError(f"channel counts differ: {[m.channels for m in maps]}")
    return maps


def cpa_attention(pyramid: Sequence, cfg: CpaConfig = CpaConfig()):
    """Run the operator and also return the (D, D, C, 4) stacked features and attention."""
    maps = _check_pyramid(pyramid)
    d = cfg.common_size
    enlarged = [resize_bilinear(m, s, s) for m, s in zip(maps, cfg.target_sizes)]
    stacked = np.stack([resize_bilinear(m, d, d).values for m in enlarged], axis=-1)
    attention = scale_softmax(stacked)
    weighted = attention * stacked
    outputs = [resize_bilinear(weighted[..., s], size, size) for s, size in enumerate(cfg.target_sizes)]
    return outputs, stacked, attention


def cpa_forward(pyramid: Sequence, cfg: CpaConfig = CpaConfig()) -> list[FeatureMap]:
    return cpa_attention(pyramid, cfg)[0]
