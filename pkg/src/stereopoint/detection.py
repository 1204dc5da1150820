"""Diver-region masking and stereo descriptor matching.

The mask removes the image region containing the pointing person, so
that only scene features in front of the forearm survive as object
candidates. Surviving candidates are then matched between the images by
brute-force nearest-neighbor search in descriptor space with a ratio
test, plus the epipolar and minimum-disparity constraints a rectified
pair must satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .camera import PixelPoint
from .errors import DimensionMismatch, EmptyMask, ValidationError
from .frames import FeatureCandidate, FrameMeta, Pose2D

SIDE_RULES = ("auto_from_arm", "keep_left_of_wrist", "keep_right_of_wrist")


@dataclass(frozen=True)
class MaskConfig:
    """Masking parameters: margin from the wrist, and which side of the
    image to keep. ``auto_from_arm`` keeps the side the 2D forearm
    points toward."""

    offset_px: float = 20.0
    side_rule: str = "auto_from_arm"

    def __post_init__(self):
        if not (math.isfinite(self.offset_px) and self.offset_px >= 0):
            raise ValidationError("offset_px", f"must be >= 0, got {self.offset_px}")
        if self.side_rule not in SIDE_RULES:
            raise ValidationError("side_rule", f"expected one of {SIDE_RULES}, got {self.side_rule!r}")


@dataclass(frozen=True)
class MatchConfig:
    """Stereo matching thresholds.

    ratio_threshold is the nearest/second-nearest descriptor distance
    ratio below which a match is trusted. epipolar_tolerance_px bounds
    the row difference of a rectified correspondence and
    min_disparity_px rejects correspondences at or beyond the depth the
    rig can resolve.
    """

    ratio_threshold: float = 0.3
    epipolar_tolerance_px: float = 2.0
    min_disparity_px: float = 1.0

    def __post_init__(self):
        if not (0 < self.ratio_threshold <= 1):
            raise ValidationError("ratio_threshold", f"must be in (0, 1], got {self.ratio_threshold}")
        if not (math.isfinite(self.epipolar_tolerance_px) and self.epipolar_tolerance_px >= 0):
            raise ValidationError(
                "epipolar_tolerance_px", f"must be >= 0, got {self.epipolar_tolerance_px}"
            )
        if not (math.isfinite(self.min_disparity_px) and self.min_disparity_px > 0):
            raise ValidationError("min_disparity_px", f"must be > 0, got {self.min_disparity_px}")


class KeepInterval(NamedTuple):
    """Closed column interval [x_min, x_max] retained after masking,
    spanning the full image height."""

    x_min: float
    x_max: float

    def contains(self, x: float) -> bool:
        return self.x_min <= x <= self.x_max


@dataclass(frozen=True)
class MatchedCandidate:
    """An accepted stereo correspondence.

    index is the candidate's position in the accepted output (ascending
    nearest-neighbor distance), match_distance its descriptor distance.
    """

    left: PixelPoint
    right: PixelPoint
    match_distance: float
    index: int


def compute_mask(pose: Pose2D, meta: FrameMeta, cfg: MaskConfig) -> KeepInterval:
    """Column interval to keep, fenced off ``cfg.offset_px`` from the wrist.

    Under ``auto_from_arm`` the kept side is the one the forearm points
    toward in the image: wrist left of elbow keeps the left portion,
    otherwise the right portion.

    Raises:
        EmptyMask: When the kept interval contains no columns, meaning
            no candidate can be detected in this frame.
    """
    rule = cfg.side_rule
    if rule == "auto_from_arm":
        rule = "keep_left_of_wrist" if pose.wrist.x < pose.elbow.x else "keep_right_of_wrist"
    if rule == "keep_left_of_wrist":
        interval = KeepInterval(0.0, pose.wrist.x - cfg.offset_px)
    else:
        interval = KeepInterval(pose.wrist.x + cfg.offset_px, float(meta.image_width_px))
    if interval.x_min > interval.x_max:
        raise EmptyMask(f"kept interval [{interval.x_min}, {interval.x_max}] is empty")
    return interval


def filter_candidates(
    features: Sequence[FeatureCandidate], keep: KeepInterval
) -> list[FeatureCandidate]:
    """Candidates whose column lies inside ``keep``, order preserved."""
    return [f for f in features if keep.contains(f.point.x)]


def _descriptor_matrix(features: Sequence[FeatureCandidate]) -> np.ndarray:
    try:
        return np.stack([f.descriptor for f in features])
    except ValueError as e:
        raise DimensionMismatch(f"ragged descriptor lengths: {e}") from e


def match_stereo(
    left: Sequence[FeatureCandidate],
    right: Sequence[FeatureCandidate],
    cfg: MatchConfig,
) -> list[MatchedCandidate]:
    """Brute-force stereo matching with a ratio test.

    For every left candidate the two nearest right candidates by
    Euclidean descriptor distance are found. The nearest is accepted iff
    d1/d2 <= ratio_threshold, the pair's disparity is at least
    min_disparity_px, and its row difference is within
    epipolar_tolerance_px. Right candidates are used at most once,
    resolved greedily in ascending d1 order. With fewer than two right
    candidates the ratio test is undefined and nothing matches.

    Deterministic and independent of input order: exact distance ties
    fall to the candidate with the smaller (x, y, ordinal).

    Raises:
        DimensionMismatch: When descriptor lengths differ between or
            within the two lists.
    """
    if not left or len(right) < 2:
        return []
    dl = _descriptor_matrix(left)
    dr = _descriptor_matrix(right)
    if dl.shape[1] != dr.shape[1]:
        raise DimensionMismatch(f"descriptor dims differ: {dl.shape[1]} vs {dr.shape[1]}")

    # Squared distances via the expansion |a-b|^2 = |a|^2 + |b|^2 - 2ab,
    # clipped at zero against cancellation.
    sq = -2.0 * (dl @ dr.T)
    sq += (dl * dl).sum(axis=1)[:, None]
    sq += (dr * dr).sum(axis=1)[None, :]
    np.maximum(sq, 0.0, out=sq)

    # Two smallest per row without sorting the whole matrix: mask the
    # minimum out, take the minimum again.
    rows = np.arange(len(left))
    j_best = np.argmin(sq, axis=1)
    sq1 = sq[rows, j_best].copy()
    sq[rows, j_best] = np.inf
    sq2 = sq.min(axis=1)
    sq[rows, j_best] = sq1
    d1 = np.sqrt(sq1)
    d2 = np.sqrt(sq2)

    # argmin takes the first occurrence; re-break exact ties (sq1 == sq2)
    # by the right candidate's (x, y, ordinal) so permuting the input
    # cannot matter.
    for i in np.flatnonzero(sq1 == sq2):
        tied = np.flatnonzero(sq[i] == sq1[i])
        j_best[i] = min(tied, key=lambda k: (right[k].point.x, right[k].point.y, k))

    left_x = np.array([f.point.x for f in left])
    left_y = np.array([f.point.y for f in left])
    right_x = np.array([f.point.x for f in right])
    right_y = np.array([f.point.y for f in right])

    # d2 == 0 means duplicate perfect matches: ambiguous, rejected.
    ok = (d2 > 0.0) & (d1 / np.where(d2 > 0.0, d2, 1.0) <= cfg.ratio_threshold)
    ok &= left_x - right_x[j_best] >= cfg.min_disparity_px
    ok &= np.abs(left_y - right_y[j_best]) <= cfg.epipolar_tolerance_px

    candidates = np.flatnonzero(ok)
    # Greedy order: ascending d1, ties by left (x, y, ordinal).
    order = candidates[
        np.lexsort((candidates, left_y[candidates], left_x[candidates], d1[candidates]))
    ]

    used_right: set[int] = set()
    matches = []
    for i in order:
        j = int(j_best[i])
        if j in used_right:
            continue
        used_right.add(j)
        diff = dl[i] - dr[j]
        matches.append(
            MatchedCandidate(
                left=left[i].point,
                right=right[j].point,
                match_distance=float(math.sqrt(float(np.dot(diff, diff)))),
                index=len(matches),
            )
        )
    return matches
