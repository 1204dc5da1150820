"""Adapter exception types."""

from __future__ import annotations


class AdapterError(Exception):
    """Base class for extraction errors."""


class ImageMismatch(AdapterError):
    """Stereo images disagree in size, or disagree with the calibration."""


class NoPoseDetected(AdapterError):
    """No usable arm pose in one of the images."""

    def __init__(self, side: str, detail: str = ""):
        super().__init__(f"{side}: {detail}" if detail else side)
        self.side = side
