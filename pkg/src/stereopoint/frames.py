"""Domain types for one stereo observation plus file ingestion.

A frame document is the boundary between upstream detectors (pose
landmarks, feature keypoints with descriptors) and the geometric core:
the core never links a detector, it only reads documents of this shape.

Frame document, JSON::

    {
      "schema_version": 1,
      "frame_id": "scene-00000",
      "arm": "right",
      "image_width_px": 1600,
      "image_height_px": 1200,
      "pose_left":  {"wrist": [x, y], "elbow": [x, y], "shoulder": [x, y]},
      "pose_right": {"wrist": [x, y], "elbow": [x, y], "shoulder": [x, y]},
      "descriptor_dim": 32,
      "features_left":  [{"x": x, "y": y, "desc": [f0, ...]}, ...],
      "features_right": [{"x": x, "y": y, "desc": [f0, ...]}, ...]
    }

Poses may carry an optional ``"confidence"`` object and features an
optional ``"confidence"`` number; both are recorded but never acted on.
``shoulder`` may be null only when parsing with ``require_shoulder=False``.

Calibration document, JSON::

    {
      "schema_version": 1,
      "focal_length_px": 1000.0,
      "principal_x_px": 800.0,
      "principal_y_px": 600.0,
      "principal_x_right_px": 800.0,
      "baseline_m": 0.1,
      "image_width_px": 1600,
      "image_height_px": 1200
    }
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import docio
from .camera import CalibratedStereoRig, PixelPoint
from .errors import ValidationError

KEYPOINT_NAMES = ("wrist", "elbow", "shoulder")
ARM_SIDES = ("right", "left")

# Advisory threshold for validate_frame, matching the default stereo
# matching epipolar tolerance.
DEFAULT_EPIPOLAR_TOLERANCE_PX = 2.0


@dataclass(frozen=True)
class FrameMeta:
    """Image dimensions a frame's coordinates are validated against."""

    image_width_px: int
    image_height_px: int

    def __post_init__(self):
        if self.image_width_px <= 0:
            raise ValidationError("image_width_px", f"must be positive, got {self.image_width_px}")
        if self.image_height_px <= 0:
            raise ValidationError("image_height_px", f"must be positive, got {self.image_height_px}")

    @classmethod
    def from_rig(cls, rig: CalibratedStereoRig) -> "FrameMeta":
        return cls(rig.image_width_px, rig.image_height_px)


@dataclass(frozen=True)
class Pose2D:
    """Wrist, elbow, and shoulder landmarks of the pointing arm in one
    image. The shoulder may be absent when the shoulder feasibility
    filter has been disabled."""

    wrist: PixelPoint
    elbow: PixelPoint
    shoulder: PixelPoint | None

    def keypoints(self) -> dict[str, PixelPoint | None]:
        return {"wrist": self.wrist, "elbow": self.elbow, "shoulder": self.shoulder}


@dataclass(frozen=True, eq=False)
class FeatureCandidate:
    """One detected keypoint with its descriptor vector.

    The descriptor array is read-only; equality compares positions,
    descriptors, and the recorded (unused) confidence.
    """

    point: PixelPoint
    descriptor: np.ndarray
    confidence: float | None = None

    def __post_init__(self):
        desc = np.asarray(self.descriptor, dtype=np.float64)
        if desc.ndim != 1 or desc.size == 0:
            raise ValidationError("desc", f"descriptor must be a non-empty vector, got shape {desc.shape}")
        if not np.all(np.isfinite(desc)):
            raise ValidationError("desc", "descriptor entries must be finite")
        desc.flags.writeable = False
        object.__setattr__(self, "descriptor", desc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureCandidate):
            return NotImplemented
        return (
            self.point == other.point
            and self.confidence == other.confidence
            and np.array_equal(self.descriptor, other.descriptor)
        )


@dataclass(frozen=True)
class Frame:
    """One stereo observation: poses in both images plus candidate
    features on each side. Feature lists may be empty; both poses must
    be present before any downstream processing."""

    frame_id: str
    meta: FrameMeta
    pose_left: Pose2D
    pose_right: Pose2D
    features_left: tuple[FeatureCandidate, ...]
    features_right: tuple[FeatureCandidate, ...]
    descriptor_dim: int
    arm: str = "right"
    pose_confidence_left: dict[str, float] = field(default_factory=dict)
    pose_confidence_right: dict[str, float] = field(default_factory=dict)


def rig_from_json(obj: dict, path: str = "") -> CalibratedStereoRig:
    """Build a rig from an already-parsed JSON object; field names in
    errors are prefixed with ``path`` when the object is nested."""

    def field_name(name: str) -> str:
        return f"{path}.{name}" if path else name

    width = docio.as_int(docio.require(obj, "image_width_px", path), field_name("image_width_px"))
    height = docio.as_int(docio.require(obj, "image_height_px", path), field_name("image_height_px"))
    try:
        return CalibratedStereoRig(
            focal_length_px=docio.as_number(
                docio.require(obj, "focal_length_px", path), field_name("focal_length_px")
            ),
            principal_x_px=docio.as_number(
                docio.require(obj, "principal_x_px", path), field_name("principal_x_px")
            ),
            principal_y_px=docio.as_number(
                docio.require(obj, "principal_y_px", path), field_name("principal_y_px")
            ),
            principal_x_right_px=docio.as_number(
                docio.require(obj, "principal_x_right_px", path), field_name("principal_x_right_px")
            ),
            baseline_m=docio.as_number(docio.require(obj, "baseline_m", path), field_name("baseline_m")),
            image_width_px=width,
            image_height_px=height,
        )
    except ValidationError as e:
        if path and not e.field.startswith(path):
            raise ValidationError(field_name(e.field), str(e)) from e
        raise


def rig_to_json(rig: CalibratedStereoRig) -> dict:
    return {
        "focal_length_px": float(rig.focal_length_px),
        "principal_x_px": float(rig.principal_x_px),
        "principal_y_px": float(rig.principal_y_px),
        "principal_x_right_px": float(rig.principal_x_right_px),
        "baseline_m": float(rig.baseline_m),
        "image_width_px": rig.image_width_px,
        "image_height_px": rig.image_height_px,
    }


def parse_calibration(document: str) -> CalibratedStereoRig:
    """Parse and validate a calibration document.

    Raises:
        ParseError: On malformed JSON or a missing/mistyped field.
        ValidationError: When a field violates a rig invariant, named
            after the offending field.
    """
    obj = docio.parse_object(document)
    docio.check_schema_version(obj)
    return rig_from_json(obj)


def serialize_calibration(rig: CalibratedStereoRig) -> str:
    return docio.dumps({"schema_version": docio.SCHEMA_VERSION, **rig_to_json(rig)})


def _check_in_frame(x: float, y: float, meta: FrameMeta, field_name: str) -> PixelPoint:
    if not (0 <= x <= meta.image_width_px):
        raise ValidationError(field_name, f"x={x} outside [0, {meta.image_width_px}]")
    if not (0 <= y <= meta.image_height_px):
        raise ValidationError(field_name, f"y={y} outside [0, {meta.image_height_px}]")
    return PixelPoint(x, y)


def _parse_pose(obj: dict, side: str, meta: FrameMeta, require_shoulder: bool) -> tuple[Pose2D, dict[str, float]]:
    value = obj.get(side)
    if value is None:
        raise ValidationError(side, "pose missing; frames without a pose in both images are unusable")
    pose_obj = docio.as_object(value, side)

    points: dict[str, PixelPoint | None] = {}
    for name in KEYPOINT_NAMES:
        field_name = f"{side}.{name}"
        raw = pose_obj.get(name)
        if raw is None:
            if name == "shoulder" and not require_shoulder:
                points[name] = None
                continue
            raise ValidationError(field_name, "keypoint missing")
        x, y = docio.as_xy(raw, field_name)
        points[name] = _check_in_frame(x, y, meta, field_name)

    confidence: dict[str, float] = {}
    if "confidence" in pose_obj:
        conf_obj = docio.as_object(pose_obj["confidence"], f"{side}.confidence")
        for name, raw in conf_obj.items():
            confidence[str(name)] = docio.as_number(raw, f"{side}.confidence.{name}")

    return Pose2D(wrist=points["wrist"], elbow=points["elbow"], shoulder=points["shoulder"]), confidence


def _parse_features(
    obj: dict, side: str, meta: FrameMeta, descriptor_dim: int
) -> tuple[FeatureCandidate, ...]:
    raw_list = docio.as_list(docio.require(obj, side), side)
    features = []
    for i, raw in enumerate(raw_list):
        field_name = f"{side}[{i}]"
        entry = docio.as_object(raw, field_name)
        x = docio.as_finite(docio.require(entry, "x", field_name), f"{field_name}.x")
        y = docio.as_finite(docio.require(entry, "y", field_name), f"{field_name}.y")
        point = _check_in_frame(x, y, meta, field_name)
        desc_raw = docio.as_list(docio.require(entry, "desc", field_name), f"{field_name}.desc")
        if len(desc_raw) != descriptor_dim:
            raise ValidationError(
                f"{field_name}.desc", f"length {len(desc_raw)} != descriptor_dim {descriptor_dim}"
            )
        desc = np.array(
            [docio.as_finite(v, f"{field_name}.desc") for v in desc_raw], dtype=np.float64
        )
        confidence = None
        if "confidence" in entry:
            confidence = docio.as_number(entry["confidence"], f"{field_name}.confidence")
        features.append(FeatureCandidate(point=point, descriptor=desc, confidence=confidence))
    return tuple(features)


def parse_frame(document: str, meta: FrameMeta, *, require_shoulder: bool = True) -> Frame:
    """Parse and validate one frame document against ``meta``.

    Args:
        document: Frame document text.
        meta: Image dimensions the coordinates must fall inside.
        require_shoulder: When False, a missing or null shoulder is
            tolerated (matching a disabled shoulder feasibility filter).

    Raises:
        ParseError: Malformed JSON, missing fields, wrong types.
        ValidationError: Out-of-range pixel, ragged descriptor length,
            missing pose or keypoint; named after the offending field.
    """
    obj = docio.parse_object(document)
    docio.check_schema_version(obj)

    frame_id = docio.as_str(docio.require(obj, "frame_id"), "frame_id")
    if not frame_id:
        raise ValidationError("frame_id", "must be non-empty")

    arm = obj.get("arm", "right")
    if arm not in ARM_SIDES:
        raise ValidationError("arm", f"expected one of {ARM_SIDES}, got {arm!r}")

    width = docio.as_int(docio.require(obj, "image_width_px"), "image_width_px")
    height = docio.as_int(docio.require(obj, "image_height_px"), "image_height_px")
    if width != meta.image_width_px:
        raise ValidationError("image_width_px", f"{width} != expected {meta.image_width_px}")
    if height != meta.image_height_px:
        raise ValidationError("image_height_px", f"{height} != expected {meta.image_height_px}")

    pose_left, conf_left = _parse_pose(obj, "pose_left", meta, require_shoulder)
    pose_right, conf_right = _parse_pose(obj, "pose_right", meta, require_shoulder)

    descriptor_dim = docio.as_int(docio.require(obj, "descriptor_dim"), "descriptor_dim")
    if descriptor_dim < 1:
        raise ValidationError("descriptor_dim", f"must be >= 1, got {descriptor_dim}")

    return Frame(
        frame_id=frame_id,
        meta=meta,
        pose_left=pose_left,
        pose_right=pose_right,
        features_left=_parse_features(obj, "features_left", meta, descriptor_dim),
        features_right=_parse_features(obj, "features_right", meta, descriptor_dim),
        descriptor_dim=descriptor_dim,
        arm=arm,
        pose_confidence_left=conf_left,
        pose_confidence_right=conf_right,
    )


def _pose_to_json(pose: Pose2D, confidence: dict[str, float]) -> dict:
    out: dict = {}
    for name, point in pose.keypoints().items():
        out[name] = None if point is None else [float(point.x), float(point.y)]
    if confidence:
        out["confidence"] = {k: float(v) for k, v in confidence.items()}
    return out


def _features_to_json(features: tuple[FeatureCandidate, ...]) -> list:
    out = []
    for f in features:
        entry = {
            "x": float(f.point.x),
            "y": float(f.point.y),
            "desc": [float(v) for v in f.descriptor],
        }
        if f.confidence is not None:
            entry["confidence"] = float(f.confidence)
        out.append(entry)
    return out


def serialize_frame(frame: Frame) -> str:
    """Render a frame back to its canonical document form.

    Parsing the output yields a frame equal to the input field by field.
    """
    return docio.dumps(
        {
            "schema_version": docio.SCHEMA_VERSION,
            "frame_id": frame.frame_id,
            "arm": frame.arm,
            "image_width_px": frame.meta.image_width_px,
            "image_height_px": frame.meta.image_height_px,
            "pose_left": _pose_to_json(frame.pose_left, frame.pose_confidence_left),
            "pose_right": _pose_to_json(frame.pose_right, frame.pose_confidence_right),
            "descriptor_dim": frame.descriptor_dim,
            "features_left": _features_to_json(frame.features_left),
            "features_right": _features_to_json(frame.features_right),
        }
    )


def validate_frame(
    frame: Frame,
    rig: CalibratedStereoRig,
    epipolar_tolerance_px: float = DEFAULT_EPIPOLAR_TOLERANCE_PX,
) -> list[str]:
    """Non-fatal consistency advisories for a parsed frame.

    Checks that the frame's dimensions match the rig, that corresponding
    pose keypoints sit on (nearly) the same rectified row, and that
    candidates exist at all. Returns an empty list for a clean frame.
    """
    warnings = []
    if (frame.meta.image_width_px, frame.meta.image_height_px) != (
        rig.image_width_px,
        rig.image_height_px,
    ):
        warnings.append(
            "frame dimensions "
            f"{frame.meta.image_width_px}x{frame.meta.image_height_px} differ from rig "
            f"{rig.image_width_px}x{rig.image_height_px}"
        )
    left = frame.pose_left.keypoints()
    right = frame.pose_right.keypoints()
    for name in KEYPOINT_NAMES:
        a, b = left[name], right[name]
        if a is None or b is None:
            continue
        if abs(a.y - b.y) > epipolar_tolerance_px:
            warnings.append(f"epipolar inconsistency: {name}")
    if not frame.features_left or not frame.features_right:
        warnings.append("no candidates")
    return warnings
