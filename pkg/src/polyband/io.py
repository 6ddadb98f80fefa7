"""JSON file formats.

Every reader raises :class:`FormatError` with ``path:line:col`` context on
malformed input, so the CLI can map it to a data-error exit code.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import SIDE_AXES, Axis, CurveSegment, PolyBand, SampledPoints, band_to_contour
from .cpa import FeatureMap
from .errors import FormatError, PolyBandError
from .gtfit import GtInstance, normalize_polygon, polygon_to_gt
from .losses import Detection

__all__ = [
    "read_json",
    "write_json",
    "dumps",
    "load_band",
    "load_segment",
    "load_side_points",
    "load_annotation",
    "load_gt_instances",
    "load_predictions",
    "load_tensors",
    "tensors_to_dict",
    "load_detection_images",
    "load_gt_images",
    "load_shapes",
]


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(obj: Any, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _wrap(path, fn, *args):
    try:
        return fn(*args)
    except FormatError:
        raise
    except (PolyBandError, KeyError, TypeError, ValueError, IndexError) as exc:
        detail = f"missing key {exc.args[0]!r}" if isinstance(exc, KeyError) else str(exc)
        raise FormatError(f"{path}: {detail}") from None


def _axis(name: str) -> Axis:
    return Axis(name.lower())


def load_band(path) -> PolyBand:
    data = read_json(path)
    return _wrap(path, PolyBand.from_dict, data.get("band", data) if isinstance(data, dict) else data)


def load_segment(path) -> CurveSegment:
    """``{"segment": {a2, a1, a0, e0, e1}, "axis": "horizontal"|"vertical"}``."""
    data = read_json(path)

    def build(d):
        seg = d.get("segment", d)
        return CurveSegment.from_dict(seg, _axis(d.get("axis", seg.get("axis", "horizontal"))))

    return _wrap(path, build, data)


def load_side_points(path) -> SampledPoints:
    """``{"points": [[x, y], ...], "axis": ...}``."""
    data = read_json(path)
    return _wrap(path, lambda d: SampledPoints(np.asarray(d["points"], float), _axis(d.get("axis", "horizontal"))), data)


def load_annotation(path) -> tuple[dict, list[np.ndarray]]:
    """Annotation file -> (metadata, normalized polygons)."""
    data = read_json(path)

    def build(d):
        w, h = d["image_w"], d["image_h"]
        polys = [normalize_polygon(p, w, h) for p in d["polygons"]]
        return {"image_w": w, "image_h": h}, polys

    return _wrap(path, build, data)


def load_gt_instances(path, k: int) -> list[GtInstance]:
    """Either an annotation file (fitted on the fly) or a saved ``fit`` output."""
    data = read_json(path)

    def build(d):
        if "instances" in d:
            out = [GtInstance.from_dict(g) for g in d["instances"]]
            for g in out:
                if g.is_text and len(g.top_pts) != k + 1:
                    raise FormatError(f"{path}: instances are sampled at K={len(g.top_pts) - 1}, expected {k}")
            return out
        return [polygon_to_gt(normalize_polygon(p, d["image_w"], d["image_h"]), k) for p in d["polygons"]]

    return _wrap(path, build, data)


def _detection(d: dict) -> Detection:
    band = PolyBand.from_dict(d["band"])
    if "logit" in d:
        return Detection(band, float(d["logit"]))
    return Detection.from_confidence(band, float(d["score"]))


def load_predictions(path) -> list[Detection]:
    """``{"predictions": [{"score" | "logit": ..., "band": {...}}, ...]}``."""
    data = read_json(path)
    items = data["predictions"] if isinstance(data, dict) and "predictions" in data else data
    return _wrap(path, lambda xs: [_detection(x) for x in xs], items)


def load_tensors(path) -> list[FeatureMap]:
    data = read_json(path)
    return _wrap(path, lambda d: [FeatureMap.from_dict(m) for m in d["maps"]], data)


def tensors_to_dict(maps) -> dict:
    return {"maps": [m.to_dict() for m in maps]}


def load_detection_images(path) -> list[list[dict]]:
    """Detections per image: ``{"images": [[...], ...]}``, a list of lists, or one image's list."""
    data = read_json(path)
    if isinstance(data, dict):
        if "images" not in data:
            raise FormatError(f"{path}: expected an 'images' key")
        data = data["images"]
    if not isinstance(data, list):
        raise FormatError(f"{path}: detections must be a list")
    if data and all(isinstance(x, dict) for x in data):
        return [data]
    return data


def load_gt_images(path) -> list[list[np.ndarray]]:
    """Ground truth per image as normalized polygons.

    Accepts one annotation object, a list of them, or a saved ``fit`` output.
    """
    data = read_json(path)
    images = data if isinstance(data, list) else [data]

    def build(img):
        if "instances" in img:
            return [np.asarray(g["polygon"], float) for g in img["instances"] if g.get("class_indicator", 1)]
        return [normalize_polygon(p, img["image_w"], img["image_h"]) for p in img["polygons"]]

    return [_wrap(path, build, img) for img in images]


def load_shapes(path, k: int) -> list[tuple[str, np.ndarray]]:
    """Anything drawable: a band, a predictions file, a polygon, an annotation or a contour output."""
    data = read_json(path)

    def build(d):
        if isinstance(d, dict) and all(s in d for s in SIDE_AXES):
            return [("band", band_to_contour(PolyBand.from_dict(d), k))]
        if isinstance(d, dict) and "band" in d:
            return [("band", band_to_contour(PolyBand.from_dict(d["band"]), k))]
        if isinstance(d, dict) and "predictions" in d:
            return [("band", band_to_contour(_detection(p).band, k)) for p in d["predictions"]]
        if isinstance(d, dict) and "polygons" in d:
            return [("polygon", normalize_polygon(p, d["image_w"], d["image_h"])) for p in d["polygons"]]
        if isinstance(d, dict) and "instances" in d:
            return [("polygon", np.asarray(g["polygon"], float)) for g in d["instances"]]
        if isinstance(d, dict) and ("polygon" in d or "points" in d):
            return [("polygon", np.asarray(d.get("polygon", d.get("points")), float).reshape(-1, 2))]
        raise FormatError(f"{path}: not a band, polygon or annotation file")

    return _wrap(path, build, data)
