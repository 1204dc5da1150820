"""Synthetic stereo sample set.

Renders ten rectified stereo pairs of a marker-instrumented pointing
arm plus textured object placards, with pinhole projection written out
locally so the adapter stays independent of the geometry core. Seven
pairs are complete; one lacks all markers in the right image, one lacks
the left wrist marker, and one has mismatched image sizes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import cv2
import numpy as np
import pytest

WIDTH, HEIGHT = 800, 600
FOCAL, CX, CY, CXR, BASELINE = 700.0, 400.0, 300.0, 400.0, 0.1

CALIBRATION = {
    "schema_version": 1,
    "focal_length_px": FOCAL,
    "principal_x_px": CX,
    "principal_y_px": CY,
    "principal_x_right_px": CXR,
    "baseline_m": BASELINE,
    "image_width_px": WIDTH,
    "image_height_px": HEIGHT,
}

MARKER_COLORS = {"wrist": (0, 0, 255), "elbow": (0, 255, 0), "shoulder": (255, 0, 0)}

OBJECTS = [(0.0, 0.15, 1.8), (0.0, 0.15, 2.4), (0.0, 0.15, 3.0)]
WRIST = (0.28, 0.05, 1.25)
FOREARM, UPPER_ARM = 0.2, 0.22


def project(point, right: bool):
    x, y, z = point
    offset = BASELINE if right else 0.0
    cx = CXR if right else CX
    return FOCAL * (x - offset) / z + cx, FOCAL * y / z + CY


def aimed_arm(target):
    dx, dy, dz = (t - w for t, w in zip(target, WRIST))
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    u = (dx / norm, dy / norm, dz / norm)
    elbow = tuple(w - FOREARM * c for w, c in zip(WRIST, u))
    shoulder = tuple(e - UPPER_ARM * c for e, c in zip(elbow, u))
    return {"wrist": WRIST, "elbow": elbow, "shoulder": shoulder}


def draw_marker(image, pixel, color):
    shift = 4
    center = (round(pixel[0] * (1 << shift)), round(pixel[1] * (1 << shift)))
    cv2.circle(image, center, 6 << shift, color, thickness=-1, lineType=cv2.LINE_8, shift=shift)


def blank_image():
    # Mild gradient background so the scene is not pathologically flat.
    gradient = np.linspace(90, 110, WIDTH, dtype=np.uint8)
    return np.repeat(np.tile(gradient, (HEIGHT, 1))[:, :, None], 3, axis=2).copy()


def render_pair(pair_index: int, target_index: int, rng: np.random.Generator):
    left, right = blank_image(), blank_image()
    for obj_index, obj in enumerate(OBJECTS):
        texture = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        for image, is_right in ((left, False), (right, True)):
            px, py = project(obj, is_right)
            r0, c0 = round(py) - 20, round(px) - 20
            image[r0 : r0 + 40, c0 : c0 + 40] = texture
    arm = aimed_arm(OBJECTS[target_index])
    for image, is_right in ((left, False), (right, True)):
        for name, point in arm.items():
            draw_marker(image, project(point, is_right), MARKER_COLORS[name])
    return left, right


@pytest.fixture(scope="session")
def sample_set(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("sample")
    images = root / "images"
    images.mkdir()
    rng = np.random.default_rng(1234)

    for pair_index in range(8):
        left, right = render_pair(pair_index, pair_index % len(OBJECTS), rng)
        if pair_index == 7:
            # Marker-free right image: pose undetectable on that side.
            right = blank_image()
        cv2.imwrite(str(images / f"pair{pair_index:02d}_left.png"), left)
        cv2.imwrite(str(images / f"pair{pair_index:02d}_right.png"), right)

    # Left image missing its wrist marker.
    left, right = render_pair(8, 2, rng)
    arm = aimed_arm(OBJECTS[2])
    left = blank_image()
    for obj_index, obj in enumerate(OBJECTS):
        texture = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        px, py = project(obj, False)
        left[round(py) - 20 : round(py) + 20, round(px) - 20 : round(px) + 20] = texture
    for name in ("elbow", "shoulder"):
        draw_marker(left, project(arm[name], False), MARKER_COLORS[name])
    cv2.imwrite(str(images / "pair08_left.png"), left)
    cv2.imwrite(str(images / "pair08_right.png"), right)

    # Mismatched sizes.
    left, right = render_pair(9, 0, rng)
    cv2.imwrite(str(images / "pair09_left.png"), left)
    cv2.imwrite(str(images / "pair09_right.png"), right[:400, :500])

    calib = root / "calib.json"
    calib.write_text(json.dumps(CALIBRATION, indent=2) + "\n")
    return {"root": root, "images": images, "calib": calib}
