"""Stereo pointing-target resolution.

Given rectified stereo images of a person pointing, with 2D arm
keypoints and candidate object features already detected, this package
triangulates the arm and the candidates, extends the forearm ray into
the scene, and selects the candidate object nearest that ray, reporting
both its 3D position and its left-image pixel. A seeded scene simulator
and an evaluation harness provide exact ground truth for testing.
"""

from .camera import (
    CalibratedStereoRig,
    CameraPoint3D,
    PixelPoint,
    depth_from_disparity,
    disparity,
    project_stereo,
    reproject,
)
from .config import PipelineConfig, apply_overrides, default_config, parse_config, serialize_config
from .detection import (
    KeepInterval,
    MaskConfig,
    MatchConfig,
    MatchedCandidate,
    compute_mask,
    filter_candidates,
    match_stereo,
)
from .errors import (
    BehindCamera,
    DegeneratePointing,
    DimensionMismatch,
    EmptyInput,
    EmptyMask,
    IdMismatch,
    InfeasibleGeometry,
    InfeasiblePose,
    InvalidDisparity,
    NoCandidates,
    OutOfFrustum,
    ParseError,
    PoseRejected,
    StereopointError,
    ValidationError,
)
from .evaluation import (
    EvalRecord,
    EvalSummary,
    SweepCell,
    SweepResult,
    depth_sweep,
    resolve_frame,
    score_frame,
    summarize,
)
from .frames import (
    FeatureCandidate,
    Frame,
    FrameMeta,
    Pose2D,
    parse_calibration,
    parse_frame,
    serialize_calibration,
    serialize_frame,
    validate_frame,
)
from .resolver import (
    Object3D,
    PointingConfig,
    Pose3D,
    Rejection,
    SelectionResult,
    extend_pointing,
    parse_result,
    perpendicular_distance,
    resolve,
    select_object,
    serialize_result,
    triangulate_candidates,
    triangulate_pose,
)
from .simulator import (
    ArmSpec,
    GroundTruth,
    NoiseSpec,
    SceneSpec,
    aim_arm_at,
    default_rig,
    default_scene_spec,
    generate_batch,
    generate_scene,
    parse_scene_spec,
    parse_truth,
    scene_at_depth,
    serialize_scene_spec,
    serialize_truth,
)

__version__ = "0.1.0"
