"""Synthetic stereo scenes with exact ground truth.

Builds a 3D pointing arm, target objects, and background distractors,
projects everything through a calibrated rig into a frame document, and
records ground truth computed directly on the 3D layout. The ground
truth deliberately avoids the pipeline's own geometry routines: target
distances use a foot-of-perpendicular formula rather than the resolver's
cross-product form, so the two act as independent cross-checks.

Descriptor model: every feature gets a 32-dimensional unit vector. True
stereo correspondences share one vector (plus optional per-image noise),
distractors draw independent vectors per image, which makes the ratio
test behave like it does on real descriptors without shipping a
detector. Features are emitted objects-first, in object order, followed
by distractors; left and right lists are aligned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import docio
from .camera import CalibratedStereoRig, CameraPoint3D, PixelPoint, project_stereo
from .errors import InfeasibleGeometry, OutOfFrustum, ValidationError
from .frames import FeatureCandidate, Frame, FrameMeta, Pose2D, rig_from_json, rig_to_json
from .resolver import DEFAULT_Z_GAP_MAX_M

DESCRIPTOR_DIM = 32

# Batch jitter scales, meters.
OBJECT_JITTER_M = 0.05
WRIST_JITTER_M = 0.02

_MAX_SCENE_ATTEMPTS = 32
_MAX_DISTRACTOR_TRIES = 1000


@dataclass(frozen=True)
class ArmSpec:
    """Ground-truth arm keypoints in the camera frame."""

    shoulder: CameraPoint3D
    elbow: CameraPoint3D
    wrist: CameraPoint3D


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement noise: Gaussian pixel noise applied independently per
    coordinate per image, and Gaussian descriptor noise per image."""

    pixel_sigma: float = 0.0
    descriptor_sigma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.pixel_sigma) and self.pixel_sigma >= 0):
            raise ValidationError("pixel_sigma", f"must be >= 0, got {self.pixel_sigma}")
        if not (math.isfinite(self.descriptor_sigma) and self.descriptor_sigma >= 0):
            raise ValidationError("descriptor_sigma", f"must be >= 0, got {self.descriptor_sigma}")


@dataclass(frozen=True)
class SceneSpec:
    """Complete recipe for one synthetic scene."""

    rig: CalibratedStereoRig
    arm: ArmSpec
    objects: tuple[CameraPoint3D, ...]
    intended_target: int
    distractors: int = 10
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    frame_id: str | None = None

    def resolved_frame_id(self) -> str:
        return self.frame_id if self.frame_id is not None else f"scene-{self.seed}"


@dataclass(frozen=True)
class GroundTruth:
    """What actually happened in a scene: the object the arm points at
    (argmin of the true line distances), plus every object's exact
    left-image projection and line distance."""

    frame_id: str
    true_selection: int
    true_left_pixels: tuple[PixelPoint, ...]
    true_distances: tuple[float, ...]


def _independent_left_pixel(rig: CalibratedStereoRig, p: CameraPoint3D) -> PixelPoint:
    # Plain pinhole projection, written out here so ground truth does not
    # share code with the pipeline's forward model.
    return PixelPoint(
        rig.focal_length_px * p.x / p.z + rig.principal_x_px,
        rig.focal_length_px * p.y / p.z + rig.principal_y_px,
    )


def _independent_line_distance(point: CameraPoint3D, wrist: CameraPoint3D, elbow: CameraPoint3D) -> float:
    # Foot-of-perpendicular route: project (point - wrist) onto the
    # forearm direction and measure the residual.
    ux, uy, uz = wrist.x - elbow.x, wrist.y - elbow.y, wrist.z - elbow.z
    uu = ux * ux + uy * uy + uz * uz
    px, py, pz = point.x - wrist.x, point.y - wrist.y, point.z - wrist.z
    t = (px * ux + py * uy + pz * uz) / uu
    rx, ry, rz = px - t * ux, py - t * uy, pz - t * uz
    return math.sqrt(rx * rx + ry * ry + rz * rz)


def _in_frame(rig: CalibratedStereoRig, pixel: PixelPoint) -> bool:
    return 0 <= pixel.x <= rig.image_width_px and 0 <= pixel.y <= rig.image_height_px


def _project_required(rig: CalibratedStereoRig, point: CameraPoint3D, name: str) -> tuple[PixelPoint, PixelPoint]:
    if point.z <= 0:
        raise OutOfFrustum(f"{name}: z={point.z} m is behind the camera")
    left, right = project_stereo(rig, point)
    if not _in_frame(rig, left) or not _in_frame(rig, right):
        raise OutOfFrustum(
            f"{name}: projects to left ({left.x:.1f}, {left.y:.1f}) / "
            f"right ({right.x:.1f}, {right.y:.1f}) outside "
            f"{rig.image_width_px}x{rig.image_height_px}"
        )
    return left, right


def validate_scene_spec(spec: SceneSpec) -> None:
    """Check the spec invariants: target index in range, arm depth gaps
    feasible, every required point inside both frusta."""
    if not spec.objects:
        raise ValidationError("objects", "at least one object is required")
    if not (0 <= spec.intended_target < len(spec.objects)):
        raise ValidationError(
            "intended_target", f"{spec.intended_target} outside objects list of {len(spec.objects)}"
        )
    if spec.distractors < 0:
        raise ValidationError("distractors", f"must be >= 0, got {spec.distractors}")
    gap_we = abs(spec.arm.wrist.z - spec.arm.elbow.z)
    if gap_we > DEFAULT_Z_GAP_MAX_M:
        raise ValidationError("arm", f"wrist-elbow z gap {gap_we:.3f} m exceeds {DEFAULT_Z_GAP_MAX_M} m")
    gap_es = abs(spec.arm.elbow.z - spec.arm.shoulder.z)
    if gap_es > DEFAULT_Z_GAP_MAX_M:
        raise ValidationError("arm", f"elbow-shoulder z gap {gap_es:.3f} m exceeds {DEFAULT_Z_GAP_MAX_M} m")
    for name, point in (("shoulder", spec.arm.shoulder), ("elbow", spec.arm.elbow), ("wrist", spec.arm.wrist)):
        _project_required(spec.rig, point, f"arm.{name}")
    for i, obj in enumerate(spec.objects):
        _project_required(spec.rig, obj, f"objects[{i}]")


def _aim_arm(
    wrist: CameraPoint3D,
    target: CameraPoint3D,
    forearm_m: float,
    upper_arm_m: float,
    z_gap_max: float = DEFAULT_Z_GAP_MAX_M,
) -> ArmSpec:
    """Arm with the given wrist whose elbow-to-wrist ray passes exactly
    through ``target``; elbow and shoulder sit behind the wrist on the
    wrist-to-target line."""
    if forearm_m <= 0 or upper_arm_m <= 0:
        raise InfeasibleGeometry(f"arm segment lengths must be positive, got {forearm_m}, {upper_arm_m}")
    dx, dy, dz = target.x - wrist.x, target.y - wrist.y, target.z - wrist.z
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if norm < 1e-9:
        raise InfeasibleGeometry("target coincides with the wrist")
    ux, uy, uz = dx / norm, dy / norm, dz / norm
    if forearm_m * abs(uz) > z_gap_max or upper_arm_m * abs(uz) > z_gap_max:
        raise InfeasibleGeometry(
            f"aimed arm would exceed the {z_gap_max} m depth-gap limit (|dz/segment|={abs(uz):.3f})"
        )
    elbow = CameraPoint3D(wrist.x - forearm_m * ux, wrist.y - forearm_m * uy, wrist.z - forearm_m * uz)
    shoulder = CameraPoint3D(
        elbow.x - upper_arm_m * ux, elbow.y - upper_arm_m * uy, elbow.z - upper_arm_m * uz
    )
    return ArmSpec(shoulder=shoulder, elbow=elbow, wrist=wrist)


def aim_arm_at(
    target: CameraPoint3D,
    wrist_depth: float,
    arm_length: float,
    upper_arm_length: float | None = None,
) -> ArmSpec:
    """Canonical pointing arm for a target: the wrist sits on the
    camera-origin-to-target line at ``wrist_depth``, with elbow and
    shoulder behind it so the forearm ray passes exactly through the
    target.

    Raises:
        InfeasibleGeometry: Non-positive segment length, target at or
            behind the wrist depth, or depth gaps beyond the limit.
    """
    if arm_length <= 0:
        raise InfeasibleGeometry(f"arm_length must be positive, got {arm_length}")
    if wrist_depth <= 0:
        raise InfeasibleGeometry(f"wrist_depth must be positive, got {wrist_depth}")
    if target.z <= wrist_depth:
        raise InfeasibleGeometry(
            f"target depth {target.z} m is at or behind the wrist depth {wrist_depth} m"
        )
    scale = wrist_depth / target.z
    wrist = CameraPoint3D(target.x * scale, target.y * scale, wrist_depth)
    return _aim_arm(wrist, target, arm_length, upper_arm_length if upper_arm_length is not None else arm_length)


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return rows / norms


def _sample_distractors(
    rig: CalibratedStereoRig, rng: np.random.Generator, count: int, z_low: float, z_high: float
) -> list[CameraPoint3D]:
    """Background 3D points that project inside both images: sample a
    left pixel and a depth, back-project, keep if the right projection
    also lands in frame."""
    margin = 5.0
    points = []
    tries = 0
    while len(points) < count:
        tries += 1
        if tries > _MAX_DISTRACTOR_TRIES:
            raise OutOfFrustum(f"could not place {count} distractors inside both frusta")
        px = rng.uniform(margin, rig.image_width_px - margin)
        py = rng.uniform(margin, rig.image_height_px - margin)
        z = rng.uniform(z_low, z_high)
        point = CameraPoint3D(
            (px - rig.principal_x_px) * z / rig.focal_length_px,
            (py - rig.principal_y_px) * z / rig.focal_length_px,
            z,
        )
        _, right = project_stereo(rig, point)
        if _in_frame(rig, right):
            points.append(point)
    return points


def _clamp(value: float, low: float, high: float) -> float:
    return min(max(value, low), high)


def _noisy_pixel(
    pixel: PixelPoint, rig: CalibratedStereoRig, rng: np.random.Generator, sigma: float
) -> PixelPoint:
    if sigma == 0.0:
        return pixel
    return PixelPoint(
        _clamp(pixel.x + sigma * rng.standard_normal(), 0.0, float(rig.image_width_px)),
        _clamp(pixel.y + sigma * rng.standard_normal(), 0.0, float(rig.image_height_px)),
    )


def generate_scene(spec: SceneSpec) -> tuple[Frame, GroundTruth]:
    """Render one scene to a frame plus its ground truth.

    Deterministic: the same spec (including seed) yields byte-identical
    serialized output. Ground truth is computed on the original 3D
    values before any noise is applied.

    Raises:
        OutOfFrustum: A required point does not project inside both images.
        ValidationError: The spec violates its invariants.
    """
    validate_scene_spec(spec)
    rig = spec.rig
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    sigma = spec.noise.pixel_sigma

    arm_pixels = {
        name: _project_required(rig, point, f"arm.{name}")
        for name, point in (("wrist", spec.arm.wrist), ("elbow", spec.arm.elbow), ("shoulder", spec.arm.shoulder))
    }
    object_pixels = [_project_required(rig, obj, f"objects[{i}]") for i, obj in enumerate(spec.objects)]

    n_obj = len(spec.objects)
    object_desc = _unit_rows(rng.standard_normal((n_obj, DESCRIPTOR_DIM)))

    z_values = [o.z for o in spec.objects]
    distractor_points = _sample_distractors(
        rig, rng, spec.distractors, z_low=max(0.8, 0.5 * min(z_values)), z_high=1.3 * max(z_values)
    )
    distractor_pixels = [project_stereo(rig, p) for p in distractor_points]
    distractor_desc_left = _unit_rows(rng.standard_normal((spec.distractors, DESCRIPTOR_DIM)))
    distractor_desc_right = _unit_rows(rng.standard_normal((spec.distractors, DESCRIPTOR_DIM)))

    def noisy(pixel: PixelPoint) -> PixelPoint:
        return _noisy_pixel(pixel, rig, rng, sigma)

    pose_left = Pose2D(
        wrist=noisy(arm_pixels["wrist"][0]),
        elbow=noisy(arm_pixels["elbow"][0]),
        shoulder=noisy(arm_pixels["shoulder"][0]),
    )
    pose_right = Pose2D(
        wrist=noisy(arm_pixels["wrist"][1]),
        elbow=noisy(arm_pixels["elbow"][1]),
        shoulder=noisy(arm_pixels["shoulder"][1]),
    )

    left_pixels = [noisy(px[0]) for px in object_pixels] + [noisy(px[0]) for px in distractor_pixels]
    right_pixels = [noisy(px[1]) for px in object_pixels] + [noisy(px[1]) for px in distractor_pixels]

    desc_left = np.concatenate([object_desc, distractor_desc_left]) if spec.distractors else object_desc
    desc_right = np.concatenate([object_desc, distractor_desc_right]) if spec.distractors else object_desc
    if spec.noise.descriptor_sigma > 0:
        desc_left = desc_left + spec.noise.descriptor_sigma * rng.standard_normal(desc_left.shape)
        desc_right = desc_right + spec.noise.descriptor_sigma * rng.standard_normal(desc_right.shape)

    features_left = tuple(
        FeatureCandidate(point=p, descriptor=desc_left[i]) for i, p in enumerate(left_pixels)
    )
    features_right = tuple(
        FeatureCandidate(point=p, descriptor=desc_right[i]) for i, p in enumerate(right_pixels)
    )

    frame = Frame(
        frame_id=spec.resolved_frame_id(),
        meta=FrameMeta.from_rig(rig),
        pose_left=pose_left,
        pose_right=pose_right,
        features_left=features_left,
        features_right=features_right,
        descriptor_dim=DESCRIPTOR_DIM,
        arm="right",
    )

    true_distances = tuple(
        _independent_line_distance(obj, spec.arm.wrist, spec.arm.elbow) for obj in spec.objects
    )
    true_selection = min(range(n_obj), key=lambda i: (true_distances[i], i))
    truth = GroundTruth(
        frame_id=frame.frame_id,
        true_selection=true_selection,
        true_left_pixels=tuple(_independent_left_pixel(rig, obj) for obj in spec.objects),
        true_distances=true_distances,
    )
    return frame, truth


def _arm_segment_lengths(arm: ArmSpec) -> tuple[float, float]:
    def dist(a: CameraPoint3D, b: CameraPoint3D) -> float:
        return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)

    return dist(arm.wrist, arm.elbow), dist(arm.elbow, arm.shoulder)


def _seed_from(sequence: np.random.SeedSequence) -> int:
    return int(sequence.generate_state(1, np.uint64)[0])


def generate_batch(
    base: SceneSpec, count: int, seed: int
) -> list[tuple[Frame, GroundTruth]]:
    """Generate ``count`` independently perturbed variants of ``base``.

    Each scene jitters the object positions and the wrist, cycles the
    intended target across the object list, and re-aims the arm (keeping
    the base segment lengths) so the forearm ray passes through the
    scene's target. Per-scene randomness derives from ``(seed, index)``,
    so the batch is reproducible and order-independent. Jitter draws
    that push required geometry out of the frusta are redrawn a bounded
    number of times before the per-scene error escapes with its index.
    """
    if count <= 0:
        raise ValueError(f"count must be positive, got {count}")
    validate_scene_spec(base)
    forearm, upper_arm = _arm_segment_lengths(base.arm)
    n_obj = len(base.objects)
    scenes = []
    for i in range(count):
        last_error: Exception | None = None
        for attempt in range(_MAX_SCENE_ATTEMPTS):
            jitter_rng = np.random.default_rng(np.random.SeedSequence([seed, i, attempt]))
            objects = tuple(
                CameraPoint3D(
                    o.x + OBJECT_JITTER_M * jitter_rng.standard_normal(),
                    o.y + OBJECT_JITTER_M * jitter_rng.standard_normal(),
                    o.z + OBJECT_JITTER_M * jitter_rng.standard_normal(),
                )
                for o in base.objects
            )
            target_index = (base.intended_target + i) % n_obj
            wrist = CameraPoint3D(
                base.arm.wrist.x + WRIST_JITTER_M * jitter_rng.standard_normal(),
                base.arm.wrist.y + WRIST_JITTER_M * jitter_rng.standard_normal(),
                base.arm.wrist.z + WRIST_JITTER_M * jitter_rng.standard_normal(),
            )
            try:
                arm = _aim_arm(wrist, objects[target_index], forearm, upper_arm)
                spec = replace(
                    base,
                    arm=arm,
                    objects=objects,
                    intended_target=target_index,
                    seed=_seed_from(np.random.SeedSequence([seed, i, attempt, 1])),
                    frame_id=f"scene-{i:05d}",
                )
                scenes.append(generate_scene(spec))
                break
            except (OutOfFrustum, InfeasibleGeometry, ValidationError) as e:
                last_error = e
        else:
            raise OutOfFrustum(f"scene {i}: no feasible jitter in {_MAX_SCENE_ATTEMPTS} attempts ({last_error})")
    return scenes


def default_rig() -> CalibratedStereoRig:
    return CalibratedStereoRig(
        focal_length_px=1000.0,
        principal_x_px=800.0,
        principal_y_px=600.0,
        principal_x_right_px=800.0,
        baseline_m=0.1,
        image_width_px=1600,
        image_height_px=1200,
    )


def default_scene_spec(
    seed: int = 7,
    *,
    distractors: int = 10,
    pixel_sigma: float = 0.0,
    descriptor_sigma: float = 0.0,
    intended_target: int = 0,
) -> SceneSpec:
    """Pool-style layout: three objects strung along the optical axis at
    2, 3, and 4 m, the pointer offset laterally with the wrist at 1.5 m."""
    objects = (
        CameraPoint3D(0.0, 0.25, 2.0),
        CameraPoint3D(0.0, 0.25, 3.0),
        CameraPoint3D(0.0, 0.25, 4.0),
    )
    wrist = CameraPoint3D(0.45, 0.1, 1.5)
    arm = _aim_arm(wrist, objects[intended_target], forearm_m=0.25, upper_arm_m=0.30)
    return SceneSpec(
        rig=default_rig(),
        arm=arm,
        objects=objects,
        intended_target=intended_target,
        distractors=distractors,
        noise=NoiseSpec(pixel_sigma=pixel_sigma, descriptor_sigma=descriptor_sigma),
        seed=seed,
    )


def scene_at_depth(base: SceneSpec, depth: float) -> SceneSpec:
    """Variant of ``base`` translated in depth so its nearest object sits
    at ``depth``; the wrist depth scales proportionally and the arm is
    re-aimed at the intended target."""
    if depth <= 0:
        raise ValueError(f"depth must be positive, got {depth}")
    min_z = min(o.z for o in base.objects)
    dz = depth - min_z
    objects = tuple(CameraPoint3D(o.x, o.y, o.z + dz) for o in base.objects)
    scale = depth / min_z
    wrist = CameraPoint3D(base.arm.wrist.x, base.arm.wrist.y, base.arm.wrist.z * scale)
    forearm, upper_arm = _arm_segment_lengths(base.arm)
    arm = _aim_arm(wrist, objects[base.intended_target], forearm, upper_arm)
    return replace(base, objects=objects, arm=arm)


def _point_to_json(p: CameraPoint3D) -> list[float]:
    return [float(p.x), float(p.y), float(p.z)]


def serialize_scene_spec(spec: SceneSpec) -> str:
    doc = {
        "schema_version": docio.SCHEMA_VERSION,
        "rig": rig_to_json(spec.rig),
        "arm": {
            "shoulder": _point_to_json(spec.arm.shoulder),
            "elbow": _point_to_json(spec.arm.elbow),
            "wrist": _point_to_json(spec.arm.wrist),
        },
        "objects": [_point_to_json(o) for o in spec.objects],
        "intended_target": spec.intended_target,
        "distractors": spec.distractors,
        "noise": {
            "pixel_sigma": float(spec.noise.pixel_sigma),
            "descriptor_sigma": float(spec.noise.descriptor_sigma),
        },
        "seed": spec.seed,
    }
    if spec.frame_id is not None:
        doc["frame_id"] = spec.frame_id
    return docio.dumps(doc)


def parse_scene_spec(document: str) -> SceneSpec:
    """Parse a scene-spec document; validates all invariants."""
    obj = docio.parse_object(document)
    docio.check_schema_version(obj)
    rig = rig_from_json(docio.as_object(docio.require(obj, "rig"), "rig"), "rig")
    arm_obj = docio.as_object(docio.require(obj, "arm"), "arm")
    arm = ArmSpec(
        shoulder=CameraPoint3D(*docio.as_xyz(docio.require(arm_obj, "shoulder", "arm"), "arm.shoulder")),
        elbow=CameraPoint3D(*docio.as_xyz(docio.require(arm_obj, "elbow", "arm"), "arm.elbow")),
        wrist=CameraPoint3D(*docio.as_xyz(docio.require(arm_obj, "wrist", "arm"), "arm.wrist")),
    )
    objects = tuple(
        CameraPoint3D(*docio.as_xyz(raw, f"objects[{i}]"))
        for i, raw in enumerate(docio.as_list(docio.require(obj, "objects"), "objects"))
    )
    noise_obj = docio.as_object(obj.get("noise", {}), "noise")
    noise = NoiseSpec(
        pixel_sigma=docio.as_number(noise_obj.get("pixel_sigma", 0.0), "noise.pixel_sigma"),
        descriptor_sigma=docio.as_number(noise_obj.get("descriptor_sigma", 0.0), "noise.descriptor_sigma"),
    )
    frame_id = obj.get("frame_id")
    if frame_id is not None:
        frame_id = docio.as_str(frame_id, "frame_id")
    spec = SceneSpec(
        rig=rig,
        arm=arm,
        objects=objects,
        intended_target=docio.as_int(docio.require(obj, "intended_target"), "intended_target"),
        distractors=docio.as_int(obj.get("distractors", 10), "distractors"),
        noise=noise,
        seed=docio.as_int(docio.require(obj, "seed"), "seed"),
        frame_id=frame_id,
    )
    validate_scene_spec(spec)
    return spec


def serialize_truth(truth: GroundTruth) -> str:
    return docio.dumps(
        {
            "schema_version": docio.SCHEMA_VERSION,
            "frame_id": truth.frame_id,
            "true_selection": truth.true_selection,
            "true_left_pixels": [[float(p.x), float(p.y)] for p in truth.true_left_pixels],
            "true_distances": [float(d) for d in truth.true_distances],
        }
    )


def parse_truth(document: str) -> GroundTruth:
    obj = docio.parse_object(document)
    docio.check_schema_version(obj)
    pixels = tuple(
        PixelPoint(*docio.as_xy(raw, f"true_left_pixels[{i}]"))
        for i, raw in enumerate(docio.as_list(docio.require(obj, "true_left_pixels"), "true_left_pixels"))
    )
    distances = tuple(
        docio.as_finite(raw, f"true_distances[{i}]")
        for i, raw in enumerate(docio.as_list(docio.require(obj, "true_distances"), "true_distances"))
    )
    if len(pixels) != len(distances):
        raise ValidationError(
            "true_distances", f"{len(distances)} distances for {len(pixels)} pixels"
        )
    selection = docio.as_int(docio.require(obj, "true_selection"), "true_selection")
    if not (0 <= selection < len(pixels)):
        raise ValidationError("true_selection", f"{selection} outside object list of {len(pixels)}")
    return GroundTruth(
        frame_id=docio.as_str(docio.require(obj, "frame_id"), "frame_id"),
        true_selection=selection,
        true_left_pixels=pixels,
        true_distances=distances,
    )
