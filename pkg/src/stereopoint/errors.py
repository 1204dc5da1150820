"""Exception types shared across the pipeline.

Every error raised by this package derives from :class:`StereopointError`.
The end-to-end resolver tags errors with the pipeline stage that raised
them (``mask``, ``match``, ``pose``, ``candidates``, ``extend``,
``select``) so batch tooling can report *where* a frame was rejected.
"""

from __future__ import annotations


class StereopointError(Exception):
    """Base class for all pipeline errors."""

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.stage: str | None = None


class ParseError(StereopointError):
    """A document is malformed: bad syntax, missing field, or wrong type."""

    def __init__(self, field: str, detail: str = ""):
        super().__init__(f"{field}: {detail}" if detail else field)
        self.field = field


class ValidationError(StereopointError):
    """A document or value parsed but violates an invariant."""

    def __init__(self, field: str, detail: str = ""):
        super().__init__(f"{field}: {detail}" if detail else field)
        self.field = field


class InvalidDisparity(StereopointError):
    """Disparity is non-positive or non-finite, depth is undefined."""


class BehindCamera(StereopointError):
    """A 3D point with z <= 0 cannot be projected."""


class EmptyMask(StereopointError):
    """The retained column interval is empty, no candidates can survive."""


class DimensionMismatch(StereopointError):
    """Descriptor vectors disagree in length."""


class PoseRejected(StereopointError):
    """A pose keypoint could not be triangulated, the frame is unusable."""

    def __init__(self, keypoint: str, detail: str = ""):
        super().__init__(f"{keypoint}: {detail}" if detail else keypoint)
        self.keypoint = keypoint


class InfeasiblePose(StereopointError):
    """Triangulated arm keypoints violate the depth-gap feasibility limit."""


class DegeneratePointing(StereopointError):
    """Wrist and elbow (or wrist and extension point) coincide."""


class NoCandidates(StereopointError):
    """No candidate objects are available for selection."""


class OutOfFrustum(StereopointError):
    """A simulated point does not project inside both image frames."""


class InfeasibleGeometry(StereopointError):
    """Requested synthetic arm geometry cannot be constructed."""


class IdMismatch(StereopointError):
    """A result and a ground-truth record refer to different frames."""


class EmptyInput(StereopointError):
    """An aggregate operation received no records."""
