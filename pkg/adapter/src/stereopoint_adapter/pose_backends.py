"""Pose-landmark backends.

A backend maps an image to wrist/elbow/shoulder pixel positions with a
confidence each. Two are provided:

``marker``
    Detects solid-color circular markers (red wrist, green elbow, blue
    shoulder by default). Deterministic and dependency-free, intended
    for instrumented recordings and for the synthetic contract tests.

``mediapipe``
    Wraps the MediaPipe Pose landmark model when the optional
    ``mediapipe`` package is installed; landmark visibility doubles as
    confidence. The landmark index mapping used for each arm is exposed
    so batch manifests can record it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from .errors import AdapterError

KEYPOINTS = ("wrist", "elbow", "shoulder")

# MediaPipe Pose landmark indices per arm.
MEDIAPIPE_LANDMARKS = {
    "right": {"wrist": 16, "elbow": 14, "shoulder": 12},
    "left": {"wrist": 15, "elbow": 13, "shoulder": 11},
}

DEFAULT_MARKER_COLORS_BGR = {
    "wrist": (0, 0, 255),
    "elbow": (0, 255, 0),
    "shoulder": (255, 0, 0),
}


@dataclass(frozen=True)
class Detection:
    x: float
    y: float
    confidence: float


@dataclass(frozen=True)
class MarkerPoseBackend:
    """Centroid detection of solid-color markers.

    A keypoint is reported when at least ``min_area_px`` pixels fall
    within ``color_tolerance`` of its marker color; confidence saturates
    at ``full_confidence_area_px`` pixels.
    """

    colors_bgr: dict[str, tuple[int, int, int]] = field(
        default_factory=lambda: dict(DEFAULT_MARKER_COLORS_BGR)
    )
    color_tolerance: float = 60.0
    min_area_px: int = 12
    full_confidence_area_px: int = 60

    name: str = "marker"

    @property
    def version(self) -> str:
        return "1"

    def landmark_mapping(self, arm: str) -> dict[str, str]:
        return {k: f"{arm}-arm marker color BGR{self.colors_bgr[k]}" for k in KEYPOINTS}

    def detect(self, image_bgr: np.ndarray, arm: str) -> dict[str, Detection]:
        found: dict[str, Detection] = {}
        pixels = image_bgr.astype(np.float64)
        for name in KEYPOINTS:
            color = np.array(self.colors_bgr[name], dtype=np.float64)
            mask = np.linalg.norm(pixels - color, axis=2) <= self.color_tolerance
            count = int(mask.sum())
            if count < self.min_area_px:
                continue
            ys, xs = np.nonzero(mask)
            found[name] = Detection(
                x=float(xs.mean()),
                y=float(ys.mean()),
                confidence=min(1.0, count / self.full_confidence_area_px),
            )
        return found


class MediapipePoseBackend:
    """MediaPipe Pose wrapper; requires the optional mediapipe package."""

    name = "mediapipe-pose"

    def __init__(self, model_complexity: int = 1):
        try:
            import mediapipe as mp
        except ImportError as e:
            raise AdapterError(
                "the mediapipe package is not installed; "
                "install the adapter's 'pose' extra or use the marker backend"
            ) from e
        self._mp = mp
        self._pose = mp.solutions.pose.Pose(
            static_image_mode=True, model_complexity=model_complexity
        )

    @property
    def version(self) -> str:
        return getattr(self._mp, "__version__", "unknown")

    def landmark_mapping(self, arm: str) -> dict[str, str]:
        return {k: f"pose landmark {v}" for k, v in MEDIAPIPE_LANDMARKS[arm].items()}

    def detect(self, image_bgr: np.ndarray, arm: str) -> dict[str, Detection]:
        result = self._pose.process(cv2.cvtColor(image_bgr, cv2.COLOR_BGR2RGB))
        if result.pose_landmarks is None:
            return {}
        height, width = image_bgr.shape[:2]
        found: dict[str, Detection] = {}
        for name, index in MEDIAPIPE_LANDMARKS[arm].items():
            landmark = result.pose_landmarks.landmark[index]
            x, y = landmark.x * width, landmark.y * height
            if not (0 <= x <= width and 0 <= y <= height):
                continue
            found[name] = Detection(x=float(x), y=float(y), confidence=float(landmark.visibility))
        return found


def get_backend(name: str, **kwargs):
    if name == "marker":
        return MarkerPoseBackend(**kwargs)
    if name == "mediapipe":
        return MediapipePoseBackend(**kwargs)
    raise AdapterError(f"unknown pose backend {name!r} (expected 'marker' or 'mediapipe')")
