"""Turn rectified stereo image pairs into frame documents.

The frame document format is the contract with the geometry core; this
module writes it directly and never imports the core. Images are
expected to be rectified already (the calibration format carries no
distortion or rectification data), which each manifest records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .errors import AdapterError, ImageMismatch, NoPoseDetected
from .features import DESCRIPTOR_DIM, detect_features
from .pose_backends import KEYPOINTS, Detection, get_backend

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExtractionJob:
    """One stereo pair to extract.

    ``backend_options`` are forwarded to the pose backend constructor.
    The confidence floor drops keypoints the backend is unsure about;
    a frame without wrist, elbow, and shoulder in both images (shoulder
    exempt when ``require_shoulder`` is off) is rejected.
    """

    left_image: Path
    right_image: Path
    calibration: Path
    out_dir: Path
    frame_id: str | None = None
    arm: str = "right"
    pose_backend: str = "marker"
    backend_options: dict = field(default_factory=dict)
    feature_cap: int = 500
    confidence_floor: float = 0.5
    require_shoulder: bool = True


def _load_calibration_dims(path: Path) -> tuple[int, int]:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise AdapterError(f"calibration {path}: {e}") from e
    try:
        return int(doc["image_width_px"]), int(doc["image_height_px"])
    except (KeyError, TypeError, ValueError) as e:
        raise AdapterError(f"calibration {path}: missing image dimensions ({e})") from e


def _read_image(path: Path) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise AdapterError(f"cannot read image {path}")
    return image


def _detect_pose(
    backend, image: np.ndarray, side: str, job: ExtractionJob
) -> dict[str, Detection]:
    found = backend.detect(image, job.arm)
    usable = {k: d for k, d in found.items() if d.confidence >= job.confidence_floor}
    required = KEYPOINTS if job.require_shoulder else ("wrist", "elbow")
    missing = [k for k in required if k not in usable]
    if missing:
        raise NoPoseDetected(side, f"missing or low-confidence keypoints: {', '.join(missing)}")
    return usable


def _pose_to_json(pose: dict[str, Detection]) -> dict:
    out: dict = {}
    for name in KEYPOINTS:
        detection = pose.get(name)
        out[name] = None if detection is None else [detection.x, detection.y]
    out["confidence"] = {k: d.confidence for k, d in pose.items()}
    return out


def extract_frame(job: ExtractionJob) -> Path:
    """Extract one pair and write ``{frame_id}.frame`` into ``job.out_dir``.

    Returns the written path.

    Raises:
        ImageMismatch: Image sizes differ or disagree with the calibration.
        NoPoseDetected: A required keypoint is absent in one image.
        AdapterError: Unreadable inputs.
    """
    width, height = _load_calibration_dims(job.calibration)
    left = _read_image(job.left_image)
    right = _read_image(job.right_image)
    if left.shape[:2] != right.shape[:2]:
        raise ImageMismatch(
            f"left {left.shape[1]}x{left.shape[0]} vs right {right.shape[1]}x{right.shape[0]}"
        )
    if (left.shape[1], left.shape[0]) != (width, height):
        raise ImageMismatch(
            f"images are {left.shape[1]}x{left.shape[0]} but calibration says {width}x{height}"
        )

    backend = get_backend(job.pose_backend, **job.backend_options)
    pose_left = _detect_pose(backend, left, "left", job)
    pose_right = _detect_pose(backend, right, "right", job)

    features_left = detect_features(left, job.feature_cap)
    features_right = detect_features(right, job.feature_cap)

    frame_id = job.frame_id or job.left_image.stem.removesuffix("_left")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "frame_id": frame_id,
        "arm": job.arm,
        "image_width_px": width,
        "image_height_px": height,
        "pose_left": _pose_to_json(pose_left),
        "pose_right": _pose_to_json(pose_right),
        "descriptor_dim": DESCRIPTOR_DIM,
        "features_left": [{"x": x, "y": y, "desc": d} for x, y, d in features_left],
        "features_right": [{"x": x, "y": y, "desc": d} for x, y, d in features_right],
    }
    job.out_dir.mkdir(parents=True, exist_ok=True)
    out_path = job.out_dir / f"{frame_id}.frame"
    out_path.write_text(json.dumps(doc, indent=2) + "\n")
    return out_path


def _find_pairs(image_dir: Path) -> list[tuple[str, Path, Path]]:
    pairs = []
    for left in sorted(image_dir.glob("*_left.*")):
        stem = left.name[: -len("_left" + left.suffix)]
        right = left.with_name(f"{stem}_right{left.suffix}")
        if right.exists():
            pairs.append((stem, left, right))
    return pairs


def extract_batch(image_dir: Path, template: ExtractionJob) -> dict:
    """Extract every ``{stem}_left.*`` / ``{stem}_right.*`` pair in a
    directory and write a manifest.

    The manifest records the detector names and versions, the settings,
    the pose-landmark mapping for the configured arm, and a per-pair
    status (``ok`` with the frame path, or ``rejected`` with the
    reason); re-running on the same inputs reproduces it exactly.
    """
    backend = get_backend(template.pose_backend, **template.backend_options)
    entries = []
    for stem, left, right in _find_pairs(image_dir):
        job = ExtractionJob(
            left_image=left,
            right_image=right,
            calibration=template.calibration,
            out_dir=template.out_dir,
            frame_id=stem,
            arm=template.arm,
            pose_backend=template.pose_backend,
            backend_options=template.backend_options,
            feature_cap=template.feature_cap,
            confidence_floor=template.confidence_floor,
            require_shoulder=template.require_shoulder,
        )
        try:
            out_path = extract_frame(job)
            entries.append({"frame_id": stem, "status": "ok", "frame": out_path.name})
        except (NoPoseDetected, ImageMismatch) as e:
            entries.append(
                {
                    "frame_id": stem,
                    "status": "rejected",
                    "reason": type(e).__name__,
                    "detail": str(e),
                }
            )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "detectors": {
            "pose": {"name": backend.name, "version": backend.version},
            "features": {"name": "sift", "version": cv2.__version__},
        },
        "settings": {
            "arm": template.arm,
            "feature_cap": template.feature_cap,
            "confidence_floor": template.confidence_floor,
            "require_shoulder": template.require_shoulder,
            "rectification": "images assumed pre-rectified; calibration carries no distortion model",
        },
        "landmark_mapping": backend.landmark_mapping(template.arm),
        "pairs": entries,
    }
    template.out_dir.mkdir(parents=True, exist_ok=True)
    (template.out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
