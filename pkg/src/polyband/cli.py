"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Settings resolve as flags > ``--config`` file > built-in defaults.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from .core import band_to_contour, validate_band
from .cpa import CpaConfig, cpa_attention
from .demo import direct_fit, domain_length_error, generate_scene, scene_report
from .errors import NumericalError, PolyBandError
from .evaluation import evaluate_detections
from .gtfit import polygon_to_gt
from .losses import (
    LossConfig,
    fit_loss,
    focal_loss,
    loss_shape_constrained,
    loss_unconstrained,
    overall_loss,
    pad_ground_truth,
)
from .matching import cost_matrix, hungarian_assign

log = logging.getLogger("polyband")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class CommandResult:
    exit_code: int = EXIT_OK
    artifacts: list[str] = field(default_factory=list)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(obj, out, result: CommandResult):
    text = io.dumps(obj)
    if out:
        Path(out).write_text(text)
        result.artifacts.append(str(out))
    else:
        sys.stdout.write(text)


def _configs(args) -> tuple[LossConfig, CpaConfig]:
    doc = io.read_json(args.config) if args.config else {}
    loss_doc = dict(doc.get("loss", doc))
    for flag, key in (("alpha", "alpha"), ("gamma", "gamma"), ("lam", "lambda"), ("k", "K")):
        v = getattr(args, flag, None)
        if v is not None:
            loss_doc[key] = v
    cpa_doc = dict(doc.get("cpa", doc))
    return LossConfig.from_dict(loss_doc), CpaConfig.from_dict(cpa_doc)


# ----------------------------------------------------------------- commands


def cmd_fit(args, result):
    loss_cfg, _ = _configs(args)
    meta, polys = io.load_annotation(args.ann)
    instances = [polygon_to_gt(p, loss_cfg.k) for p in polys]
    _emit({**meta, "K": loss_cfg.k, "instances": [g.to_dict() for g in instances]}, args.out, result)
    if args.svg:
        from .plotting import plot_shapes

        shapes = [("polygon", g.polygon) for g in instances] + [
            ("band", band_to_contour(g.band, loss_cfg.k)) for g in instances
        ]
        result.artifacts.append(str(plot_shapes(shapes, args.svg, title="annotation vs fitted band")))


def cmd_sample(args, result):
    loss_cfg, _ = _configs(args)
    band = io.load_band(args.band)
    k = loss_cfg.k
    contour = band_to_contour(band, k)
    report = {
        "K": k,
        "raw_points": 4 * (k + 1),
        "points": contour.tolist(),
        "diagnostics": [d.__dict__ for d in validate_band(band, k)],
    }
    _emit(report, args.out, result)
    if args.svg:
        from .plotting import plot_shapes

        result.artifacts.append(str(plot_shapes([("band", contour)], args.svg)))


def cmd_loss(args, result):
    loss_cfg, _ = _configs(args)
    constrained = not args.unconstrained
    pred_doc = io.read_json(args.pred)
    if isinstance(pred_doc, dict) and "segment" in pred_doc:
        # single-side mode: one segment against one point set
        seg = io.load_segment(args.pred)
        pts = io.load_side_points(args.gt)
        fn = loss_shape_constrained if constrained else loss_unconstrained
        value = fn(seg, pts, pts.k_segments)
        _emit({"mode": "side", "constrained": constrained, "K": pts.k_segments, "loss": value}, args.out, result)
        return

    preds = io.load_predictions(args.pred)
    gts = io.load_gt_instances(args.gt, loss_cfg.k)
    padded = pad_ground_truth(gts, len(preds))
    assignment = hungarian_assign(cost_matrix(preds, padded, loss_cfg, constrained))
    terms = []
    for j, g in enumerate(padded):
        p = preds[assignment.mapping[j]]
        entry = {"gt": j, "prediction": int(assignment.mapping[j]), "class_indicator": g.class_indicator}
        entry["focal"] = focal_loss(p.confidence, g.class_indicator, loss_cfg)
        entry["fit"] = fit_loss(p.band, g, loss_cfg, constrained)
        terms.append(entry)
    total = overall_loss(preds, padded, assignment, loss_cfg, constrained)
    _emit(
        {
            "mode": "set",
            "constrained": constrained,
            "config": loss_cfg.to_dict(),
            "mapping": [int(x) for x in assignment.mapping],
            "terms": terms,
            "total": total,
        },
        args.out,
        result,
    )


def cmd_match(args, result):
    loss_cfg, _ = _configs(args)
    preds = io.load_predictions(args.pred)
    gts = pad_ground_truth(io.load_gt_instances(args.gt, loss_cfg.k), len(preds))
    cost = cost_matrix(preds, gts, loss_cfg, not args.unconstrained)
    out = hungarian_assign(cost).to_dict()
    if args.with_cost:
        out["cost"] = cost.tolist()
    _emit(out, args.out, result)


def cmd_cpa(args, result):
    _, cpa_cfg = _configs(args)
    maps = io.load_tensors(getattr(args, "in"))
    outputs, _, attention = cpa_attention(maps, cpa_cfg)
    _emit(io.tensors_to_dict(outputs), args.out, result)
    if args.svg:
        from .plotting import plot_attention

        result.artifacts.append(str(plot_attention(attention, args.svg, cpa_cfg.target_sizes)))


def cmd_eval(args, result):
    loss_cfg, _ = _configs(args)
    dets = io.load_detection_images(args.det)
    gts = io.load_gt_images(args.gt)
    if len(dets) != len(gts):
        raise PolyBandError(f"{len(dets)} detection images but {len(gts)} ground-truth images")
    report = evaluate_detections(dets, gts, args.iou_threshold, args.score_threshold, loss_cfg.k)
    _emit(report.to_dict(), args.out, result)


def cmd_demo(args, result):
    from .plotting import plot_scene, plot_trace

    loss_cfg, _ = _configs(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scene = generate_scene(args.seed, args.m, loss_cfg.k)
    try:
        dets, trace = direct_fit(scene, args.n, args.steps, args.lr, args.seed, loss_cfg, not args.unconstrained)
    except NumericalError as exc:
        if exc.trace is not None:
            (out_dir / "trace.csv").write_text(exc.trace.to_csv())
            result.artifacts.append(str(out_dir / "trace.csv"))
        raise

    csv_path = out_dir / "trace.csv"
    csv_path.write_text(trace.to_csv())
    result.artifacts.append(str(csv_path))

    report = scene_report(dets, scene, args.iou_threshold, args.score_threshold, loss_cfg.k)
    contours, scores = [], []
    for d in dets:
        if d.confidence < args.score_threshold:
            continue
        try:
            contours.append(band_to_contour(d.band, loss_cfg.k))
        except PolyBandError:
            continue
        scores.append(d.confidence)
    result.artifacts.append(
        str(
            plot_scene(
                scene.polygons,
                contours,
                out_dir / "scene.svg",
                title=f"seed {args.seed}: F={report.f_measure:.2f}",
                scores=scores,
            )
        )
    )
    result.artifacts.append(str(plot_trace(trace.losses, out_dir / "loss.svg", trace.learning_rates)))
    summary = {
        "seed": args.seed,
        "m": args.m,
        "n": args.n,
        "steps": args.steps,
        "lr": args.lr,
        "constrained": not args.unconstrained,
        "final_loss": trace.losses[-1],
        "instance_ious": trace.instance_ious,
        "mapping": trace.mapping,
        "domain_length_error": domain_length_error(dets, trace, scene),
        "report": {k: v for k, v in report.to_dict().items() if k != "per_image"},
        "detections": [{"logit": d.logit, "score": d.confidence, "band": d.band.to_dict()} for d in dets],
    }
    io.write_json(summary, out_dir / "summary.json")
    result.artifacts.append(str(out_dir / "summary.json"))
    sys.stdout.write(io.dumps({k: summary[k] for k in ("final_loss", "instance_ious", "report")}))


def cmd_render(args, result):
    from .plotting import plot_shapes

    loss_cfg, _ = _configs(args)
    shapes = []
    for path in args.inputs:
        shapes.extend(io.load_shapes(path, loss_cfg.k))
    result.artifacts.append(str(plot_shapes(shapes, args.out)))


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with loss (alpha, gamma, lambda, K) and CPA settings")
    common.add_argument("--k", type=int, default=None, help="segments sampled per curve (default 8)")

    parser = _Parser(prog="polyband", description="Polynomial band text shapes: fitting, losses, matching, evaluation")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common], help="annotation polygons -> ground-truth point sets and bands")
    p.add_argument("--ann", required=True)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", parents=[common], help="band -> contour")
    p.add_argument("--band", required=True)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_sample)

    focal = _Parser(add_help=False)
    focal.add_argument("--alpha", type=float, default=None)
    focal.add_argument("--gamma", type=float, default=None)
    focal.add_argument("--lambda", dest="lam", type=float, default=None)
    mode = focal.add_mutually_exclusive_group()
    mode.add_argument("--constrained", action="store_true", help="shape-constrained fitting loss (default)")
    mode.add_argument("--unconstrained", action="store_true", help="conventional fitting loss")

    p = sub.add_parser("loss", parents=[common, focal], help="prediction + ground truth -> loss report")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("match", parents=[common, focal], help="prediction set + ground truth -> assignment")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--with-cost", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("cpa", parents=[common], help="cross-scale pixel attention over a tensor file")
    p.add_argument("--in", required=True)
    p.add_argument("--out")
    p.add_argument("--svg", help="write per-scale attention maps")
    p.set_defaults(func=cmd_cpa)

    thresholds = _Parser(add_help=False)
    thresholds.add_argument("--iou-threshold", type=float, default=0.5)
    thresholds.add_argument("--score-threshold", type=float, default=0.5)

    p = sub.add_parser("eval", parents=[common, thresholds], help="detections + ground truth -> P/R/F")
    p.add_argument("--det", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("demo", parents=[common, focal, thresholds], help="fit a candidate set to a synthetic scene")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--steps", type=int, default=3000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--out-dir", default="demo_out")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("render", parents=[common], help="overlay bands and polygons as SVG")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def _setup_logging():
    level = os.environ.get("POLYBAND_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def dispatch(argv=None) -> CommandResult:
    _setup_logging()
    result = CommandResult()
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("polyband: a subcommand is required")
        args.func(args, result)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        result.exit_code = EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        result.exit_code = EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        result.exit_code = EXIT_NUMERIC
    except (PolyBandError, ValueError, KeyError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        result.exit_code = EXIT_DATA
    return result


def main(argv=None) -> int:
    return dispatch(argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
