"""Polynomial band text shapes with set-prediction losses, matching, attention and evaluation."""

from .core import (
    Axis,
    CurveSegment,
    Diagnostic,
    PolyBand,
    SampledPoints,
    band_to_annotation,
    band_to_contour,
    eval_curve,
    sample_curve,
    validate_band,
)
from .cpa import CpaConfig, FeatureMap, cpa_forward, resize_bilinear
from .errors import (
    ArgumentError,
    DegeneracyError,
    DomainError,
    FormatError,
    GenerationError,
    NumericalError,
    PolyBandError,
)
from .evaluation import EvalReport, evaluate_detections, polygon_iou
from .gtfit import GtInstance, fit_side, polygon_to_gt, split_polygon_sides
from .losses import (
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
from .matching import MatchAssignment, cost_matrix, hungarian_assign

__version__ = "0.1.0"
