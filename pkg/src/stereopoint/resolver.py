"""Pointing-target resolution from one stereo frame.

Pipeline: triangulate the arm keypoints and the matched candidates to
the camera frame, extend the forearm ray past the wrist, and select the
candidate with the smallest perpendicular distance to that ray's
supporting line. The selected candidate's left-image pixel is recovered
for downstream image-space control.

Feasibility filters: keypoints with non-positive disparity reject the
frame (depth would be negative or infinite), and arms whose wrist-elbow
or elbow-shoulder depth gap exceeds ``z_gap_max`` are rejected as
physically implausible triangulations.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import docio
from .camera import CalibratedStereoRig, CameraPoint3D, PixelPoint, disparity, reproject
from .detection import MaskConfig, MatchConfig, MatchedCandidate, compute_mask, filter_candidates, match_stereo
from .errors import (
    DegeneratePointing,
    InfeasiblePose,
    InvalidDisparity,
    NoCandidates,
    PoseRejected,
    StereopointError,
    ValidationError,
)
from .frames import Frame, validate_frame

TIE_BREAK_RULES = ("closest_z", "lowest_index")
DISTANCE_TIE_M = 1e-9
MIN_FOREARM_M = 1e-6
MIN_RAY_M = 1e-9
DEFAULT_Z_GAP_MAX_M = 0.5

# Typical observed depth gaps of an extended pointing arm, for reference
# alongside the 0.5 m feasibility limit that bounds both.
TYPICAL_WRIST_ELBOW_Z_GAP_M = 0.254
TYPICAL_ELBOW_SHOULDER_Z_GAP_M = 0.377


@dataclass(frozen=True)
class PointingConfig:
    """Ray extension and selection parameters.

    scale_factor stretches the wrist-ward forearm vector when reporting
    the extension point; selection itself measures distance to the
    infinite supporting line, so it does not depend on scale_factor.
    require_shoulder gates the elbow-shoulder feasibility filter.
    """

    scale_factor: float = 3.0
    z_gap_max: float = DEFAULT_Z_GAP_MAX_M
    tie_break: str = "closest_z"
    require_shoulder: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.scale_factor) and self.scale_factor > 0):
            raise ValidationError("scale_factor", f"must be > 0, got {self.scale_factor}")
        if not (math.isfinite(self.z_gap_max) and self.z_gap_max > 0):
            raise ValidationError("z_gap_max", f"must be > 0, got {self.z_gap_max}")
        if self.tie_break not in TIE_BREAK_RULES:
            raise ValidationError("tie_break", f"expected one of {TIE_BREAK_RULES}, got {self.tie_break!r}")


@dataclass(frozen=True)
class Pose3D:
    """Triangulated arm keypoints in the camera frame. The shoulder is
    None when its feasibility filter is disabled and it could not be
    triangulated."""

    wrist: CameraPoint3D
    elbow: CameraPoint3D
    shoulder: CameraPoint3D | None


@dataclass(frozen=True)
class Object3D:
    """A triangulated candidate object and the stereo match it came from."""

    point: CameraPoint3D
    source: MatchedCandidate


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of resolving one frame.

    distances holds the perpendicular line distance of every surviving
    candidate, indexed like the candidate list; selected_index is the
    argmin under the configured tie-break. object_2d_left is the
    left-image pixel of the selected candidate's source match.
    """

    frame_id: str
    selected_index: int
    object_3d: CameraPoint3D
    object_2d_left: PixelPoint
    distances: tuple[float, ...]
    extension_point: CameraPoint3D
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class Rejection:
    """A frame the pipeline refused, with the stage and error that did."""

    frame_id: str
    stage: str
    reason: str
    detail: str = ""
    warnings: tuple[str, ...] = ()

    @classmethod
    def from_error(cls, frame_id: str, error: StereopointError) -> "Rejection":
        return cls(
            frame_id=frame_id,
            stage=error.stage or "unknown",
            reason=type(error).__name__,
            detail=str(error),
        )


def triangulate_pose(frame: Frame, rig: CalibratedStereoRig, cfg: PointingConfig) -> Pose3D:
    """Triangulate wrist, elbow, and shoulder from their stereo columns.

    Each keypoint's disparity is taken between its left and right image
    columns and back-projected at the left-image pixel. A keypoint with
    invalid disparity makes the whole frame unusable; the shoulder is
    exempt only when ``cfg.require_shoulder`` is False.

    Raises:
        PoseRejected: A required keypoint has non-positive disparity.
        InfeasiblePose: A depth gap exceeds ``cfg.z_gap_max``.
    """
    left = frame.pose_left.keypoints()
    right = frame.pose_right.keypoints()
    points: dict[str, CameraPoint3D | None] = {}
    for name in ("wrist", "elbow", "shoulder"):
        a, b = left[name], right[name]
        if a is None or b is None:
            if name == "shoulder" and not cfg.require_shoulder:
                points[name] = None
                continue
            raise PoseRejected(name, "keypoint missing")
        try:
            points[name] = reproject(rig, a, disparity(a.x, b.x))
        except InvalidDisparity as e:
            if name == "shoulder" and not cfg.require_shoulder:
                points[name] = None
                continue
            raise PoseRejected(name, str(e)) from e

    wrist, elbow, shoulder = points["wrist"], points["elbow"], points["shoulder"]
    assert wrist is not None and elbow is not None
    gap_we = abs(wrist.z - elbow.z)
    if gap_we > cfg.z_gap_max:
        raise InfeasiblePose(f"wrist-elbow z gap {gap_we:.3f} m exceeds {cfg.z_gap_max} m")
    if cfg.require_shoulder and shoulder is not None:
        gap_es = abs(elbow.z - shoulder.z)
        if gap_es > cfg.z_gap_max:
            raise InfeasiblePose(f"elbow-shoulder z gap {gap_es:.3f} m exceeds {cfg.z_gap_max} m")
    return Pose3D(wrist=wrist, elbow=elbow, shoulder=shoulder)


def triangulate_candidates(
    matches: list[MatchedCandidate], rig: CalibratedStereoRig
) -> tuple[list[Object3D], list[str]]:
    """Back-project matched candidates; invalid ones are dropped, not fatal.

    Computed in bulk but element for element identical to
    :func:`stereopoint.camera.reproject`. Returns the surviving objects
    (each keeping its source match, whose ``index`` maps back to the
    match list) plus one warning per drop.
    """
    if not matches:
        return [], []
    left_x = np.array([m.left.x for m in matches])
    left_y = np.array([m.left.y for m in matches])
    right_x = np.array([m.right.x for m in matches])
    d_eff = (left_x - right_x) - rig.disparity_offset_px
    valid = np.isfinite(d_eff) & (d_eff > 0)
    fb = rig.focal_length_px * rig.baseline_m
    with np.errstate(divide="ignore", invalid="ignore"):
        z = fb / d_eff
        x = (left_x - rig.principal_x_px) * z / rig.focal_length_px
        y = (left_y - rig.principal_y_px) * z / rig.focal_length_px
    objects = []
    warnings = []
    for i, match in enumerate(matches):
        if not valid[i]:
            warnings.append(
                f"candidate {match.index} dropped: disparity {float(d_eff[i])} px yields no valid depth"
            )
            continue
        objects.append(
            Object3D(point=CameraPoint3D(float(x[i]), float(y[i]), float(z[i])), source=match)
        )
    return objects, warnings


def extend_pointing(w: CameraPoint3D, e: CameraPoint3D, s_f: float) -> CameraPoint3D:
    """Extension point ``w + s_f * (w - e)`` of the elbow-to-wrist ray.

    Raises:
        DegeneratePointing: When wrist and elbow are closer than one
            micrometer and the ray direction is undefined.
    """
    dx, dy, dz = w.x - e.x, w.y - e.y, w.z - e.z
    if math.sqrt(dx * dx + dy * dy + dz * dz) < MIN_FOREARM_M:
        raise DegeneratePointing(f"wrist and elbow coincide within {MIN_FOREARM_M} m")
    return CameraPoint3D(w.x + s_f * dx, w.y + s_f * dy, w.z + s_f * dz)


def perpendicular_distance(o: CameraPoint3D, w: CameraPoint3D, ext: CameraPoint3D) -> float:
    """Distance from ``o`` to the infinite line through ``w`` and ``ext``:
    ``|(o - ext) x (w - ext)| / |w - ext|``.

    Raises:
        DegeneratePointing: When ``w`` and ``ext`` coincide.
    """
    bx, by, bz = w.x - ext.x, w.y - ext.y, w.z - ext.z
    norm_b = math.sqrt(bx * bx + by * by + bz * bz)
    if norm_b < MIN_RAY_M:
        raise DegeneratePointing(f"wrist and extension point coincide within {MIN_RAY_M} m")
    ax, ay, az = o.x - ext.x, o.y - ext.y, o.z - ext.z
    cx = ay * bz - az * by
    cy = az * bx - ax * bz
    cz = ax * by - ay * bx
    return math.sqrt(cx * cx + cy * cy + cz * cz) / norm_b


def _line_distances(objects: list[Object3D], w: CameraPoint3D, ext: CameraPoint3D) -> list[float]:
    """Perpendicular distances for all candidates at once; same operation
    sequence as :func:`perpendicular_distance`, so results are bitwise
    identical to the scalar path regardless of candidate count."""
    bx, by, bz = w.x - ext.x, w.y - ext.y, w.z - ext.z
    norm_b = math.sqrt(bx * bx + by * by + bz * bz)
    if norm_b < MIN_RAY_M:
        raise DegeneratePointing(f"wrist and extension point coincide within {MIN_RAY_M} m")
    ax = np.array([o.point.x for o in objects]) - ext.x
    ay = np.array([o.point.y for o in objects]) - ext.y
    az = np.array([o.point.z for o in objects]) - ext.z
    cx = ay * bz - az * by
    cy = az * bx - ax * bz
    cz = ax * by - ay * bx
    return [float(v) for v in np.sqrt(cx * cx + cy * cy + cz * cz) / norm_b]


def select_object(
    objects: list[Object3D],
    w: CameraPoint3D,
    ext: CameraPoint3D,
    cfg: PointingConfig,
    *,
    frame_id: str = "",
    warnings: tuple[str, ...] = (),
) -> SelectionResult:
    """Pick the candidate nearest the pointing line.

    Distances within ``1e-9`` m of the minimum count as tied; ties fall
    to the candidate closest in depth (``closest_z``, the default) or to
    the lowest index, then to the lowest index in either case.

    Raises:
        NoCandidates: When ``objects`` is empty.
    """
    if not objects:
        raise NoCandidates("no candidate objects to select from")
    distances = _line_distances(objects, w, ext)
    best = min(distances)
    tied = [i for i, d in enumerate(distances) if d <= best + DISTANCE_TIE_M]
    if cfg.tie_break == "closest_z":
        chosen = min(tied, key=lambda i: (objects[i].point.z, i))
    else:
        chosen = tied[0]
    return SelectionResult(
        frame_id=frame_id,
        selected_index=chosen,
        object_3d=objects[chosen].point,
        object_2d_left=objects[chosen].source.left,
        distances=tuple(distances),
        extension_point=ext,
        warnings=warnings,
    )


@contextmanager
def _stage(name: str):
    try:
        yield
    except StereopointError as e:
        if e.stage is None:
            e.stage = name
        raise


def resolve(
    frame: Frame,
    rig: CalibratedStereoRig,
    mask_cfg: MaskConfig,
    match_cfg: MatchConfig,
    pointing_cfg: PointingConfig,
) -> SelectionResult:
    """Run the full pipeline on one frame.

    Stages, in order: mask both images around their own wrist, filter
    candidates, match left to right, triangulate the pose, triangulate
    the candidates, extend the pointing ray, select. Errors carry the
    stage name that raised them. Deterministic for fixed inputs and
    configuration.
    """
    warnings = validate_frame(frame, rig, epipolar_tolerance_px=match_cfg.epipolar_tolerance_px)

    with _stage("mask"):
        keep_left = compute_mask(frame.pose_left, frame.meta, mask_cfg)
        keep_right = compute_mask(frame.pose_right, frame.meta, mask_cfg)
    left = filter_candidates(frame.features_left, keep_left)
    right = filter_candidates(frame.features_right, keep_right)

    with _stage("match"):
        matches = match_stereo(left, right, match_cfg)

    with _stage("pose"):
        pose = triangulate_pose(frame, rig, pointing_cfg)

    with _stage("candidates"):
        objects, drop_warnings = triangulate_candidates(matches, rig)
    warnings.extend(drop_warnings)

    with _stage("extend"):
        ext = extend_pointing(pose.wrist, pose.elbow, pointing_cfg.scale_factor)

    with _stage("select"):
        return select_object(
            objects, pose.wrist, ext, pointing_cfg, frame_id=frame.frame_id, warnings=tuple(warnings)
        )


def serialize_result(result: SelectionResult | Rejection) -> str:
    """Render a resolution outcome (success or rejection) as a document."""
    if isinstance(result, SelectionResult):
        return docio.dumps(
            {
                "schema_version": docio.SCHEMA_VERSION,
                "frame_id": result.frame_id,
                "status": "resolved",
                "selected_index": result.selected_index,
                "object_2d_left": [float(result.object_2d_left.x), float(result.object_2d_left.y)],
                "object_3d": [
                    float(result.object_3d.x),
                    float(result.object_3d.y),
                    float(result.object_3d.z),
                ],
                "distances": [float(d) for d in result.distances],
                "extension_point": [
                    float(result.extension_point.x),
                    float(result.extension_point.y),
                    float(result.extension_point.z),
                ],
                "warnings": list(result.warnings),
            }
        )
    return docio.dumps(
        {
            "schema_version": docio.SCHEMA_VERSION,
            "frame_id": result.frame_id,
            "status": "rejected",
            "stage": result.stage,
            "reason": result.reason,
            "detail": result.detail,
            "warnings": list(result.warnings),
        }
    )


def parse_result(document: str) -> SelectionResult | Rejection:
    """Parse a result document back into its in-memory form."""
    obj = docio.parse_object(document)
    docio.check_schema_version(obj)
    frame_id = docio.as_str(docio.require(obj, "frame_id"), "frame_id")
    status = docio.as_str(docio.require(obj, "status"), "status")
    warnings = tuple(
        docio.as_str(w, "warnings") for w in docio.as_list(obj.get("warnings", []), "warnings")
    )
    if status == "rejected":
        return Rejection(
            frame_id=frame_id,
            stage=docio.as_str(docio.require(obj, "stage"), "stage"),
            reason=docio.as_str(docio.require(obj, "reason"), "reason"),
            detail=docio.as_str(obj.get("detail", ""), "detail"),
            warnings=warnings,
        )
    if status != "resolved":
        raise ValidationError("status", f"expected 'resolved' or 'rejected', got {status!r}")
    ox, oy = docio.as_xy(docio.require(obj, "object_2d_left"), "object_2d_left")
    o3 = docio.as_xyz(docio.require(obj, "object_3d"), "object_3d")
    ext = docio.as_xyz(docio.require(obj, "extension_point"), "extension_point")
    distances = tuple(
        docio.as_finite(d, "distances") for d in docio.as_list(docio.require(obj, "distances"), "distances")
    )
    selected = docio.as_int(docio.require(obj, "selected_index"), "selected_index")
    if not (0 <= selected < len(distances)):
        raise ValidationError("selected_index", f"{selected} outside distances list of {len(distances)}")
    return SelectionResult(
        frame_id=frame_id,
        selected_index=selected,
        object_3d=CameraPoint3D(*o3),
        object_2d_left=PixelPoint(ox, oy),
        distances=distances,
        extension_point=CameraPoint3D(*ext),
        warnings=warnings,
    )
