"""SIFT feature detection for candidate objects."""

from __future__ import annotations

import cv2
import numpy as np

DESCRIPTOR_DIM = 128


def detect_features(image_bgr: np.ndarray, cap: int) -> list[tuple[float, float, list[float]]]:
    """Up to ``cap`` SIFT keypoints with their 128-dim descriptors.

    Runs on the full image; discarding the pointer's region is the
    core's job, not the adapter's. Keypoints landing marginally outside
    the frame (SIFT interpolates sub-pixel positions) are clamped onto
    its closed bounds so the document always validates.
    """
    gray = cv2.cvtColor(image_bgr, cv2.COLOR_BGR2GRAY)
    sift = cv2.SIFT_create(nfeatures=cap)
    keypoints, descriptors = sift.detectAndCompute(gray, None)
    if descriptors is None:
        return []
    height, width = gray.shape
    out = []
    for kp, desc in zip(keypoints[:cap], descriptors[:cap]):
        x = min(max(float(kp.pt[0]), 0.0), float(width))
        y = min(max(float(kp.pt[1]), 0.0), float(height))
        out.append((x, y, [float(v) for v in desc]))
    return out
