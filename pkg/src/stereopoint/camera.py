"""Rectified pinhole stereo model.

Geometry conventions: the left camera is the origin of the camera frame,
x points right, y points down, z points forward along the optical axis.
Images are assumed to be rectified, so corresponding points share a row
and the correspondence problem is purely horizontal.

For a point at depth ``z`` the ideal disparity is ``f * B / z``. The
measured pixel disparity additionally contains the constant offset
``c_x - c_x_right`` whenever the two principal points differ, and
:func:`reproject` removes that offset before converting to depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BehindCamera, InvalidDisparity, ValidationError


@dataclass(frozen=True)
class PixelPoint:
    """Sub-pixel image position, x in [0, W] and y in [0, H] when bound
    to an image; finiteness is the only constraint enforced here."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError("pixel", f"non-finite coordinates ({self.x}, {self.y})")


@dataclass(frozen=True)
class CameraPoint3D:
    """Point in the left-camera frame, meters. z > 0 means in front of
    the camera; validity filtering happens downstream, not here."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValidationError("point", f"non-finite coordinates ({self.x}, {self.y}, {self.z})")


@dataclass(frozen=True)
class CalibratedStereoRig:
    """Parameters of a calibrated, rectified stereo pair.

    Attributes:
        focal_length_px: Shared focal length in pixels (left camera
            dominates after rectification).
        principal_x_px: Left principal point column, pixels.
        principal_y_px: Shared principal point row, pixels.
        principal_x_right_px: Right principal point column, pixels.
        baseline_m: Distance between the optical centers, meters.
        image_width_px: Image width, pixels.
        image_height_px: Image height, pixels.
    """

    focal_length_px: float
    principal_x_px: float
    principal_y_px: float
    principal_x_right_px: float
    baseline_m: float
    image_width_px: int
    image_height_px: int

    def __post_init__(self):
        if not (math.isfinite(self.focal_length_px) and self.focal_length_px > 0):
            raise ValidationError("focal_length_px", f"must be positive, got {self.focal_length_px}")
        if not (math.isfinite(self.baseline_m) and self.baseline_m > 0):
            raise ValidationError("baseline_m", f"must be positive, got {self.baseline_m}")
        if self.image_width_px <= 0:
            raise ValidationError("image_width_px", f"must be positive, got {self.image_width_px}")
        if self.image_height_px <= 0:
            raise ValidationError("image_height_px", f"must be positive, got {self.image_height_px}")
        if not (0 <= self.principal_x_px < self.image_width_px):
            raise ValidationError("principal_x_px", f"{self.principal_x_px} outside [0, {self.image_width_px})")
        if not (0 <= self.principal_x_right_px < self.image_width_px):
            raise ValidationError(
                "principal_x_right_px", f"{self.principal_x_right_px} outside [0, {self.image_width_px})"
            )
        if not (0 <= self.principal_y_px < self.image_height_px):
            raise ValidationError("principal_y_px", f"{self.principal_y_px} outside [0, {self.image_height_px})")

    @property
    def disparity_offset_px(self) -> float:
        """Constant added to the ideal disparity by unequal principal points."""
        return self.principal_x_px - self.principal_x_right_px


def disparity(x_left: float, x_right: float) -> float:
    """Horizontal offset of corresponding columns, ``x_left - x_right``.

    May be zero or negative; validity is judged where depth is computed.
    """
    return x_left - x_right


def depth_from_disparity(rig: CalibratedStereoRig, d: float) -> float:
    """Depth ``f * B / d`` for an ideal (offset-free) disparity ``d``.

    Raises:
        InvalidDisparity: If ``d`` is non-positive or non-finite, which
            would put the point behind the camera or at infinity.
    """
    if not math.isfinite(d) or d <= 0:
        raise InvalidDisparity(f"disparity {d} px yields no valid depth")
    return rig.focal_length_px * rig.baseline_m / d


def reproject(rig: CalibratedStereoRig, p_left: PixelPoint, d: float) -> CameraPoint3D:
    """Back-project a left-image pixel with measured disparity to 3D.

    The measured disparity is first corrected for the principal-point
    offset between the two images, then depth follows from the ideal
    disparity relation and x, y from the left pinhole rays:

        z = f * B / (d - (c_x - c_x_right))
        x = (p.x - c_x) * z / f
        y = (p.y - c_y) * z / f

    Raises:
        InvalidDisparity: If the corrected disparity is non-positive or
            non-finite.
    """
    z = depth_from_disparity(rig, d - rig.disparity_offset_px)
    x = (p_left.x - rig.principal_x_px) * z / rig.focal_length_px
    y = (p_left.y - rig.principal_y_px) * z / rig.focal_length_px
    return CameraPoint3D(x, y, z)


def project_stereo(rig: CalibratedStereoRig, p: CameraPoint3D) -> tuple[PixelPoint, PixelPoint]:
    """Project a camera-frame point into the left and right images.

    Returns:
        ``(left, right)`` pixel positions. The y coordinates are computed
        identically for both images, so rectified rows match exactly.

    Raises:
        BehindCamera: If ``p.z <= 0``.
    """
    if p.z <= 0:
        raise BehindCamera(f"z={p.z} m is not in front of the camera")
    f = rig.focal_length_px
    y = f * p.y / p.z + rig.principal_y_px
    left = PixelPoint(f * p.x / p.z + rig.principal_x_px, y)
    right = PixelPoint(f * (p.x - rig.baseline_m) / p.z + rig.principal_x_right_px, y)
    return left, right
