"""Command-line interface.

Commands:
    resolve    Resolve pointing targets for frame documents.
    simulate   Generate synthetic frame + ground-truth documents.
    evaluate   Score result documents against ground truth.
    sweep      Accuracy grid over scene depth and pixel noise.

Exit codes: 0 on success, 1 on a fatal error (unreadable or malformed
input, bad output directory), 2 when every input was processed but at
least one frame was rejected by the pipeline.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import PipelineConfig, apply_overrides, default_config, parse_config
from .errors import IdMismatch, StereopointError
from .evaluation import resolve_frame, score_frame, summarize
from .frames import FrameMeta, parse_calibration, parse_frame, serialize_frame
from .reports import (
    format_error_table,
    format_sweep_table,
    plot_accuracy_vs_depth,
    plot_selection_histogram,
    records_csv,
    serialize_report,
    serialize_sweep_report,
)
from .resolver import Rejection, serialize_result, parse_result
from .simulator import generate_batch, parse_scene_spec, parse_truth, serialize_truth
from . import evaluation

FATAL, REJECTED, OK = 1, 2, 0


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return FATAL


def _read_text(path: Path, what: str) -> str:
    try:
        return path.read_text()
    except OSError as e:
        raise StereopointError(f"{what} {path}: {e}") from e


def _prepare_out_dir(path: Path, force: bool) -> None:
    path.mkdir(parents=True, exist_ok=True)
    if not force and any(path.iterdir()):
        raise StereopointError(f"output directory {path} is not empty (use --force to overwrite)")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline overrides (flag beats config file beats default)")
    group.add_argument("--mask-offset", type=float, dest="mask_offset", help="mask margin from the wrist, px")
    group.add_argument(
        "--side-rule",
        choices=("auto_from_arm", "keep_left_of_wrist", "keep_right_of_wrist"),
        dest="side_rule",
    )
    group.add_argument("--ratio-threshold", type=float, dest="ratio_threshold")
    group.add_argument("--epipolar-tolerance", type=float, dest="epipolar_tolerance", help="px")
    group.add_argument("--min-disparity", type=float, dest="min_disparity", help="px")
    group.add_argument("--scale-factor", type=float, dest="scale_factor", help="pointing-ray extension factor")
    group.add_argument("--z-gap-max", type=float, dest="z_gap_max", help="arm depth-gap feasibility limit, m")
    group.add_argument("--tie-break", choices=("closest_z", "lowest_index"), dest="tie_break")
    group.add_argument(
        "--require-shoulder",
        choices=("true", "false"),
        dest="require_shoulder",
        help="enable/disable the shoulder feasibility filter",
    )


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config is not None:
        config = parse_config(_read_text(Path(args.config), "config"))
    else:
        config = default_config()
    require_shoulder = None if args.require_shoulder is None else args.require_shoulder == "true"
    return apply_overrides(
        config,
        {
            "mask.offset_px": args.mask_offset,
            "mask.side_rule": args.side_rule,
            "match.ratio_threshold": args.ratio_threshold,
            "match.epipolar_tolerance_px": args.epipolar_tolerance,
            "match.min_disparity_px": args.min_disparity,
            "pointing.scale_factor": args.scale_factor,
            "pointing.z_gap_max": args.z_gap_max,
            "pointing.tie_break": args.tie_break,
            "pointing.require_shoulder": require_shoulder,
        },
    )


def _cmd_resolve(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
        rig = parse_calibration(_read_text(Path(args.calib), "calibration"))
    except StereopointError as e:
        return _fail(str(e))
    meta = FrameMeta.from_rig(rig)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def process(path_str: str):
        path = Path(path_str)
        frame = parse_frame(
            _read_text(path, "frame"), meta, require_shoulder=config.pointing.require_shoulder
        )
        return frame.frame_id, resolve_frame(frame, rig, config)

    fatal = []
    outcomes = []
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        for path_str, future in [(p, pool.submit(process, p)) for p in args.frames]:
            try:
                outcomes.append(future.result())
            except StereopointError as e:
                fatal.append(f"{path_str}: {e}")

    outcomes.sort(key=lambda pair: pair[0])
    rejected = False
    for frame_id, result in outcomes:
        target = out_dir / f"{frame_id}.result"
        if target.exists() and not args.force:
            fatal.append(f"{target} exists (use --force to overwrite)")
            continue
        target.write_text(serialize_result(result))
        if isinstance(result, Rejection):
            rejected = True
            print(f"{frame_id}: rejected at stage {result.stage}: {result.reason}", file=sys.stderr)
        else:
            print(f"{frame_id}: selected candidate {result.selected_index}")
    for message in fatal:
        print(f"error: {message}", file=sys.stderr)
    if fatal:
        return FATAL
    return REJECTED if rejected else OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        spec = parse_scene_spec(_read_text(Path(args.spec), "scene spec"))
        out_dir = Path(args.out)
        _prepare_out_dir(out_dir, args.force)
        seed = args.seed if args.seed is not None else spec.seed
        scenes = generate_batch(spec, args.count, seed)
    except (StereopointError, ValueError) as e:
        return _fail(str(e))
    for frame, truth in scenes:
        (out_dir / f"{frame.frame_id}.frame").write_text(serialize_frame(frame))
        (out_dir / f"{frame.frame_id}.truth").write_text(serialize_truth(truth))
    print(f"wrote {len(scenes)} frame/truth pairs to {out_dir}")
    return OK


def _load_pairs(results_dir: Path, truth_dir: Path):
    result_ids = {p.stem: p for p in sorted(results_dir.glob("*.result"))}
    truth_ids = {p.stem: p for p in sorted(truth_dir.glob("*.truth"))}
    if not result_ids:
        raise StereopointError(f"no .result documents in {results_dir}")
    if not truth_ids:
        raise StereopointError(f"no .truth documents in {truth_dir}")
    missing = sorted(set(result_ids) ^ set(truth_ids))
    if missing:
        raise IdMismatch("unpaired frame ids: " + ", ".join(missing))
    pairs = []
    for stem in sorted(result_ids):
        result = parse_result(result_ids[stem].read_text())
        truth = parse_truth(truth_ids[stem].read_text())
        pairs.append((result, truth))
    return pairs


def _cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        out_dir = Path(args.out)
        _prepare_out_dir(out_dir, args.force)
        pairs = _load_pairs(Path(args.results), Path(args.truth))
        records = [score_frame(result, truth) for result, truth in pairs]
        summary = summarize(records)
    except StereopointError as e:
        return _fail(str(e))
    (out_dir / "report.json").write_text(serialize_report(summary))
    (out_dir / "records.csv").write_text(records_csv(records))
    table = format_error_table(records)
    (out_dir / "table.txt").write_text(table)
    if args.plots:
        plot_selection_histogram(summary, out_dir / "histogram.svg")
    print(table, end="")
    print(f"accuracy {summary.accuracy:.3f} over {summary.count} frames; report in {out_dir}")
    return OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
        base = parse_scene_spec(_read_text(Path(args.spec), "scene spec"))
        if args.seed is not None:
            from dataclasses import replace

            base = replace(base, seed=args.seed)
        out_dir = Path(args.out)
        _prepare_out_dir(out_dir, args.force)
        depths = [float(v) for v in args.depths.split(",") if v]
        sigmas = [float(v) for v in args.sigmas.split(",") if v]
        sweep = evaluation.depth_sweep(base, depths, sigmas, args.n, config)
    except (StereopointError, ValueError) as e:
        return _fail(str(e))
    (out_dir / "sweep.json").write_text(serialize_sweep_report(sweep))
    table = format_sweep_table(sweep)
    (out_dir / "table.txt").write_text(table)
    lines = [records_csv(cell.records, extra={"depth": cell.depth, "pixel_sigma": cell.pixel_sigma}) for cell in sweep.cells]
    header, *_ = lines[0].splitlines(keepends=True)
    body = "".join("".join(chunk.splitlines(keepends=True)[1:]) for chunk in lines)
    (out_dir / "records.csv").write_text(header + body)
    if args.plots:
        for cell in sweep.cells:
            plot_selection_histogram(
                cell.summary,
                out_dir / f"histogram_d{cell.depth:g}_s{cell.pixel_sigma:g}.svg",
                title=f"depth {cell.depth:g} m, noise {cell.pixel_sigma:g} px",
            )
        plot_accuracy_vs_depth(sweep, out_dir / "accuracy_vs_depth.svg")
    print(table, end="")
    print(f"sweep report in {out_dir}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereopoint",
        description="Resolve which 3D object a person points at from rectified stereo keypoints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_resolve = sub.add_parser("resolve", help="resolve pointing targets for frame documents")
    p_resolve.add_argument("frames", nargs="+", metavar="FRAME", help="frame document paths")
    p_resolve.add_argument("--calib", required=True, help="calibration document")
    p_resolve.add_argument("--config", help="pipeline config document")
    p_resolve.add_argument("--out", required=True, help="directory for .result documents")
    p_resolve.add_argument("--jobs", type=int, default=1, help="concurrent frames (default 1)")
    p_resolve.add_argument("--force", action="store_true", help="overwrite existing results")
    _add_config_flags(p_resolve)
    p_resolve.set_defaults(func=_cmd_resolve)

    p_sim = sub.add_parser("simulate", help="generate synthetic frame/truth documents")
    p_sim.add_argument("--spec", required=True, help="scene spec document")
    p_sim.add_argument("--count", type=int, required=True, help="number of scenes")
    p_sim.add_argument("--seed", type=int, help="batch seed (default: spec seed)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--force", action="store_true", help="allow a non-empty output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="score result documents against ground truth")
    p_eval.add_argument("--results", required=True, help="directory of .result documents")
    p_eval.add_argument("--truth", required=True, help="directory of .truth documents")
    p_eval.add_argument("--out", required=True, help="output directory for the report")
    p_eval.add_argument("--force", action="store_true", help="allow a non-empty output directory")
    p_eval.add_argument("--no-plots", dest="plots", action="store_false", help="skip SVG figures")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="accuracy grid over depth and pixel noise")
    p_sweep.add_argument("--spec", required=True, help="base scene spec document")
    p_sweep.add_argument("--depths", required=True, help="comma-separated depths, m (e.g. 2,4,6)")
    p_sweep.add_argument("--sigmas", required=True, help="comma-separated pixel noise levels (e.g. 0,1)")
    p_sweep.add_argument("--n", type=int, required=True, help="scenes per cell")
    p_sweep.add_argument("--seed", type=int, help="override the spec seed")
    p_sweep.add_argument("--config", help="pipeline config document")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--force", action="store_true", help="allow a non-empty output directory")
    p_sweep.add_argument("--no-plots", dest="plots", action="store_false", help="skip SVG figures")
    _add_config_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
