"""Shared fixtures: the reference rig and default configurations."""

from __future__ import annotations

import pytest

from stereopoint import (
    CalibratedStereoRig,
    MaskConfig,
    MatchConfig,
    PointingConfig,
)


@pytest.fixture
def rig() -> CalibratedStereoRig:
    """f=1000 px, principal point (800, 600) in both images, 10 cm
    baseline, 1600x1200 frames."""
    return CalibratedStereoRig(
        focal_length_px=1000.0,
        principal_x_px=800.0,
        principal_y_px=600.0,
        principal_x_right_px=800.0,
        baseline_m=0.1,
        image_width_px=1600,
        image_height_px=1200,
    )


@pytest.fixture
def mask_cfg() -> MaskConfig:
    return MaskConfig()


@pytest.fixture
def match_cfg() -> MatchConfig:
    return MatchConfig()


@pytest.fixture
def pointing_cfg() -> PointingConfig:
    return PointingConfig()
