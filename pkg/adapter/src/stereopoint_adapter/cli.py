"""Extraction command line.

Exit codes follow the core CLI: 0 success, 1 fatal, 2 when at least one
pair was rejected (no pose, mismatched images).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import AdapterError, ImageMismatch, NoPoseDetected
from .extract import ExtractionJob, extract_batch, extract_frame


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--calib", required=True, help="calibration document")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--backend", default="marker", choices=("marker", "mediapipe"))
    parser.add_argument("--arm", default="right", choices=("right", "left"))
    parser.add_argument("--feature-cap", type=int, default=500, dest="feature_cap")
    parser.add_argument(
        "--confidence-floor", type=float, default=0.5, dest="confidence_floor",
        help="minimum pose landmark confidence",
    )
    parser.add_argument(
        "--allow-missing-shoulder", action="store_true",
        help="tolerate frames without a shoulder landmark",
    )


def _job(args: argparse.Namespace, left: Path, right: Path, frame_id: str | None) -> ExtractionJob:
    return ExtractionJob(
        left_image=left,
        right_image=right,
        calibration=Path(args.calib),
        out_dir=Path(args.out),
        frame_id=frame_id,
        arm=args.arm,
        pose_backend=args.backend,
        feature_cap=args.feature_cap,
        confidence_floor=args.confidence_floor,
        require_shoulder=not args.allow_missing_shoulder,
    )


def _cmd_pair(args: argparse.Namespace) -> int:
    try:
        path = extract_frame(_job(args, Path(args.left), Path(args.right), args.frame_id))
    except (NoPoseDetected, ImageMismatch) as e:
        print(f"rejected: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except AdapterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


def _cmd_batch(args: argparse.Namespace) -> int:
    try:
        manifest = extract_batch(Path(args.dir), _job(args, Path(args.dir), Path(args.dir), None))
    except AdapterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    ok = sum(1 for entry in manifest["pairs"] if entry["status"] == "ok")
    rejected = len(manifest["pairs"]) - ok
    print(f"extracted {ok} frames, rejected {rejected}; manifest in {args.out}")
    return 2 if rejected else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereopoint-extract",
        description="Extract stereopoint frame documents from rectified stereo image pairs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_pair = sub.add_parser("pair", help="extract a single stereo pair")
    p_pair.add_argument("--left", required=True, help="left image")
    p_pair.add_argument("--right", required=True, help="right image")
    p_pair.add_argument("--frame-id", dest="frame_id", help="frame id (default: left image stem)")
    _common_flags(p_pair)
    p_pair.set_defaults(func=_cmd_pair)

    p_batch = sub.add_parser("batch", help="extract every *_left/*_right pair in a directory")
    p_batch.add_argument("--dir", required=True, help="directory of image pairs")
    _common_flags(p_batch)
    p_batch.set_defaults(func=_cmd_batch)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
