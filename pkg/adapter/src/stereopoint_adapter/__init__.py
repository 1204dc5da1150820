"""Offline extraction of stereopoint frame documents from real imagery.

Runs a pose-landmark backend (wrist/elbow/shoulder) and a SIFT feature
detector on both images of a rectified stereo pair and serializes the
results in the frame document format the stereopoint core consumes. The
adapter never matches, masks, or triangulates; the geometry all lives on
the other side of the document boundary.
"""

from .errors import AdapterError, ImageMismatch, NoPoseDetected
from .extract import ExtractionJob, extract_batch, extract_frame
from .features import detect_features
from .pose_backends import MarkerPoseBackend, MediapipePoseBackend, get_backend

__version__ = "0.1.0"
