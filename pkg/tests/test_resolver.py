"""Triangulation, ray extension, selection, and the composed pipeline."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stereopoint import (
    CameraPoint3D,
    DegeneratePointing,
    FeatureCandidate,
    Frame,
    FrameMeta,
    InfeasiblePose,
    MatchedCandidate,
    NoCandidates,
    Object3D,
    PixelPoint,
    PointingConfig,
    Pose2D,
    PoseRejected,
    Rejection,
    SelectionResult,
    default_scene_spec,
    extend_pointing,
    generate_scene,
    parse_result,
    perpendicular_distance,
    project_stereo,
    resolve,
    select_object,
    serialize_result,
    triangulate_candidates,
    triangulate_pose,
)
from stereopoint.simulator import _aim_arm


def synthetic_frame(rig, wrist, elbow, shoulder, objects=(), frame_id="syn") -> Frame:
    """Project a 3D arm and 3D objects exactly into a frame; each object
    pair shares a distinct one-hot descriptor."""
    dim = max(8, len(objects))
    wl, wr = project_stereo(rig, wrist)
    el, er = project_stereo(rig, elbow)
    sl, sr = project_stereo(rig, shoulder)
    features_left, features_right = [], []
    for k, obj in enumerate(objects):
        ol, og = project_stereo(rig, obj)
        desc = np.zeros(dim)
        desc[k] = 1.0
        features_left.append(FeatureCandidate(point=ol, descriptor=desc))
        features_right.append(FeatureCandidate(point=og, descriptor=desc.copy()))
    return Frame(
        frame_id=frame_id,
        meta=FrameMeta.from_rig(rig),
        pose_left=Pose2D(wrist=wl, elbow=el, shoulder=sl),
        pose_right=Pose2D(wrist=wr, elbow=er, shoulder=sr),
        features_left=tuple(features_left),
        features_right=tuple(features_right),
        descriptor_dim=dim,
    )


class TestTriangulatePose:
    def test_recovers_projected_arm(self, rig, pointing_cfg):
        w, e, s = CameraPoint3D(0.0, 0.0, 2.0), CameraPoint3D(0.2, 0.1, 2.3), CameraPoint3D(0.4, 0.15, 2.45)
        frame = synthetic_frame(rig, w, e, s)
        pose = triangulate_pose(frame, rig, pointing_cfg)
        for got, want in ((pose.wrist, w), (pose.elbow, e), (pose.shoulder, s)):
            assert math.dist((got.x, got.y, got.z), (want.x, want.y, want.z)) < 1e-9

    def test_zero_disparity_rejects_frame(self, rig, pointing_cfg):
        frame = synthetic_frame(
            rig, CameraPoint3D(0.0, 0.0, 2.0), CameraPoint3D(0.2, 0.1, 2.3), CameraPoint3D(0.4, 0.15, 2.45)
        )
        pose_right = Pose2D(
            wrist=frame.pose_left.wrist,  # same column as the left wrist
            elbow=frame.pose_right.elbow,
            shoulder=frame.pose_right.shoulder,
        )
        broken = Frame(
            frame_id=frame.frame_id,
            meta=frame.meta,
            pose_left=frame.pose_left,
            pose_right=pose_right,
            features_left=frame.features_left,
            features_right=frame.features_right,
            descriptor_dim=frame.descriptor_dim,
        )
        with pytest.raises(PoseRejected) as exc:
            triangulate_pose(broken, rig, pointing_cfg)
        assert exc.value.keypoint == "wrist"

    def test_wrist_elbow_gap_above_limit(self, rig, pointing_cfg):
        frame = synthetic_frame(
            rig, CameraPoint3D(0.0, 0.0, 2.0), CameraPoint3D(0.1, 0.05, 2.6), CameraPoint3D(0.2, 0.1, 2.5)
        )
        with pytest.raises(InfeasiblePose):
            triangulate_pose(frame, rig, pointing_cfg)

    def test_elbow_shoulder_gap_above_limit(self, rig, pointing_cfg):
        frame = synthetic_frame(
            rig, CameraPoint3D(0.0, 0.0, 2.0), CameraPoint3D(0.1, 0.05, 2.3), CameraPoint3D(0.2, 0.1, 2.9)
        )
        with pytest.raises(InfeasiblePose):
            triangulate_pose(frame, rig, pointing_cfg)

    def test_gap_at_limit_passes(self, rig, pointing_cfg):
        frame = synthetic_frame(
            rig, CameraPoint3D(0.0, 0.0, 2.0), CameraPoint3D(0.1, 0.05, 2.5), CameraPoint3D(0.2, 0.1, 2.4)
        )
        pose = triangulate_pose(frame, rig, pointing_cfg)
        assert abs(pose.wrist.z - pose.elbow.z) == pytest.approx(0.5, abs=1e-9)

    def test_disabled_shoulder_filter_skips_gap_check(self, rig):
        cfg = PointingConfig(require_shoulder=False)
        frame = synthetic_frame(
            rig, CameraPoint3D(0.0, 0.0, 2.0), CameraPoint3D(0.1, 0.05, 2.3), CameraPoint3D(0.2, 0.1, 2.9)
        )
        pose = triangulate_pose(frame, rig, cfg)
        assert pose.shoulder is not None  # triangulated, just not filtered


class TestTriangulateCandidates:
    def test_mirrors_reprojection(self, rig):
        match = MatchedCandidate(
            left=PixelPoint(850.0, 600.0), right=PixelPoint(800.0, 600.0), match_distance=0.0, index=0
        )
        objects, warnings = triangulate_candidates([match], rig)
        assert warnings == []
        assert (objects[0].point.x, objects[0].point.y, objects[0].point.z) == pytest.approx(
            (0.1, 0.0, 2.0), abs=1e-12
        )
        assert objects[0].source is match

    def test_invalid_disparity_dropped_with_warning(self, rig):
        bad = MatchedCandidate(
            left=PixelPoint(800.0, 600.0), right=PixelPoint(800.0, 600.0), match_distance=0.0, index=0
        )
        good = MatchedCandidate(
            left=PixelPoint(850.0, 600.0), right=PixelPoint(800.0, 600.0), match_distance=0.0, index=1
        )
        objects, warnings = triangulate_candidates([bad, good], rig)
        assert len(objects) == 1
        assert objects[0].source.index == 1
        assert len(warnings) == 1 and "candidate 0" in warnings[0]

    def test_empty(self, rig):
        assert triangulate_candidates([], rig) == ([], [])

    def test_bulk_path_bitwise_matches_scalar_reproject(self, rig):
        from stereopoint import disparity, reproject

        rng = np.random.default_rng(3)
        matches = [
            MatchedCandidate(
                left=PixelPoint(float(rng.uniform(300, 1500)), float(rng.uniform(100, 1100))),
                right=PixelPoint(float(rng.uniform(200, 1400)), float(rng.uniform(100, 1100))),
                match_distance=0.0,
                index=k,
            )
            for k in range(64)
        ]
        objects, _ = triangulate_candidates(matches, rig)
        for obj in objects:
            m = obj.source
            p = reproject(rig, m.left, disparity(m.left.x, m.right.x))
            assert (obj.point.x, obj.point.y, obj.point.z) == (p.x, p.y, p.z)


class TestExtendPointing:
    def test_scaled_extension(self):
        ext = extend_pointing(CameraPoint3D(0.0, 0.0, 2.0), CameraPoint3D(0.2, 0.1, 2.3), 3.0)
        assert (ext.x, ext.y, ext.z) == pytest.approx((-0.6, -0.3, 1.1), abs=1e-12)

    def test_zero_scale_is_wrist(self):
        w = CameraPoint3D(0.1, 0.2, 1.5)
        ext = extend_pointing(w, CameraPoint3D(0.3, 0.25, 1.7), 0.0)
        assert (ext.x, ext.y, ext.z) == (w.x, w.y, w.z)

    def test_degenerate(self):
        w = CameraPoint3D(0.1, 0.2, 1.5)
        with pytest.raises(DegeneratePointing):
            extend_pointing(w, w, 3.0)


class TestPerpendicularDistance:
    def test_three_four_five(self):
        d = perpendicular_distance(
            CameraPoint3D(1.0, 3.0, 4.0), CameraPoint3D(0.0, 0.0, 0.0), CameraPoint3D(2.0, 0.0, 0.0)
        )
        assert d == pytest.approx(5.0, abs=1e-12)

    def test_point_on_line(self):
        d = perpendicular_distance(
            CameraPoint3D(1.5, 0.0, 0.0), CameraPoint3D(0.0, 0.0, 0.0), CameraPoint3D(2.0, 0.0, 0.0)
        )
        assert d == 0.0

    def test_point_at_extension(self):
        ext = CameraPoint3D(-0.6, -0.3, 1.1)
        assert perpendicular_distance(ext, CameraPoint3D(0.0, 0.0, 2.0), ext) == 0.0

    def test_degenerate_ray(self):
        w = CameraPoint3D(0.0, 0.0, 2.0)
        with pytest.raises(DegeneratePointing):
            perpendicular_distance(CameraPoint3D(1.0, 1.0, 1.0), w, w)


def _object(x, y, z, index=0) -> Object3D:
    return Object3D(
        point=CameraPoint3D(x, y, z),
        source=MatchedCandidate(
            left=PixelPoint(800.0 + 10 * index, 600.0),
            right=PixelPoint(750.0 + 10 * index, 600.0),
            match_distance=0.0,
            index=index,
        ),
    )


class TestSelectObject:
    W = CameraPoint3D(0.0, 0.0, 0.0)
    EXT = CameraPoint3D(0.0, 0.0, 5.0)

    def test_argmin(self, pointing_cfg):
        objects = [_object(0.4, 0.0, 2.0, 0), _object(0.1, 0.0, 2.0, 1), _object(0.7, 0.0, 2.0, 2)]
        result = select_object(objects, self.W, self.EXT, pointing_cfg)
        assert result.selected_index == 1
        assert result.distances == pytest.approx((0.4, 0.1, 0.7))
        assert result.object_2d_left == objects[1].source.left

    def test_tie_breaks_to_closest_z(self, pointing_cfg):
        objects = [_object(0.2, 0.0, 3.0, 0), _object(0.2, 0.0, 2.0, 1)]
        assert select_object(objects, self.W, self.EXT, pointing_cfg).selected_index == 1

    def test_tie_breaks_to_lowest_index_when_configured(self):
        cfg = PointingConfig(tie_break="lowest_index")
        objects = [_object(0.2, 0.0, 3.0, 0), _object(0.2, 0.0, 2.0, 1)]
        assert select_object(objects, self.W, self.EXT, cfg).selected_index == 0

    def test_empty_raises(self, pointing_cfg):
        with pytest.raises(NoCandidates):
            select_object([], self.W, self.EXT, pointing_cfg)

    def test_distances_bitwise_match_scalar_formula(self, pointing_cfg):
        rng = np.random.default_rng(8)
        objects = [
            _object(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1.0, 6.0), i)
            for i in range(40)
        ]
        result = select_object(objects, self.W, self.EXT, pointing_cfg)
        scalar = tuple(perpendicular_distance(o.point, self.W, self.EXT) for o in objects)
        assert result.distances == scalar

    @given(scale=st.floats(1e-3, 1e3), seed=st.integers(0, 2**16))
    @settings(max_examples=100)
    def test_argmin_invariant_under_distance_scaling(self, scale, seed):
        pointing_cfg = PointingConfig()
        rng = np.random.default_rng(seed)
        objects = [
            _object(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1.0, 5.0), i) for i in range(5)
        ]
        base = select_object(objects, self.W, self.EXT, pointing_cfg)
        scaled = [
            Object3D(
                point=CameraPoint3D(o.point.x * scale, o.point.y * scale, o.point.z * scale),
                source=o.source,
            )
            for o in objects
        ]
        w = CameraPoint3D(0.0, 0.0, 0.0)
        ext = CameraPoint3D(0.0, 0.0, 5.0 * scale)
        again = select_object(scaled, w, ext, pointing_cfg)
        assert again.selected_index == base.selected_index


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    k = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


class TestSelectionInvariances:
    @given(seed=st.integers(0, 2**16), angle=st.floats(-3.0, 3.0))
    @settings(max_examples=100)
    def test_rigid_motion_invariance(self, seed, angle):
        pointing_cfg = PointingConfig()
        rng = np.random.default_rng(seed)
        w = np.array([0.4, 0.1, 1.5])
        e = w + np.array([0.15, -0.05, -0.18])
        objs = [np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(2.0, 6.0)]) for _ in range(4)]
        rot = _rotation(rng.standard_normal(3) + 1e-3, angle)
        shift = rng.uniform(-2, 2, 3)

        def run(wv, ev, ovs):
            wp = CameraPoint3D(*wv)
            ep = CameraPoint3D(*ev)
            ext = extend_pointing(wp, ep, pointing_cfg.scale_factor)
            objects = [_object(*ov, index=i) for i, ov in enumerate(ovs)]
            return select_object(objects, wp, ext, pointing_cfg)

        base = run(w, e, objs)
        moved = run(rot @ w + shift, rot @ e + shift, [rot @ o + shift for o in objs])
        assert moved.selected_index == base.selected_index
        assert moved.distances == pytest.approx(base.distances, rel=1e-7, abs=1e-9)

    @given(seed=st.integers(0, 2**16))
    @settings(max_examples=100)
    def test_extension_scale_never_changes_distances(self, seed):
        rng = np.random.default_rng(seed)
        w = CameraPoint3D(0.4, 0.1, 1.5)
        e = CameraPoint3D(0.55, 0.05, 1.32)
        o = CameraPoint3D(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(2.0, 6.0))
        reference = perpendicular_distance(o, w, extend_pointing(w, e, 3.0))
        for s_f in (0.5, 1.0, 10.0, 250.0):
            d = perpendicular_distance(o, w, extend_pointing(w, e, s_f))
            assert abs(d - reference) < 1e-9


class TestResolve:
    def test_selects_object_on_ray(self, rig, mask_cfg, match_cfg, pointing_cfg):
        # Aim the arm exactly at the third object; ground truth by construction.
        objects = (
            CameraPoint3D(-0.2, 0.3, 2.5),
            CameraPoint3D(0.1, 0.2, 3.0),
            CameraPoint3D(0.0, 0.25, 4.0),
        )
        arm = _aim_arm(CameraPoint3D(0.45, 0.1, 1.5), objects[2], 0.25, 0.30)
        frame = synthetic_frame(rig, arm.wrist, arm.elbow, arm.shoulder, objects)
        result = resolve(frame, rig, mask_cfg, match_cfg, pointing_cfg)
        expected_left, _ = project_stereo(rig, objects[2])
        assert result.object_2d_left.x == pytest.approx(expected_left.x, abs=1e-6)
        assert result.object_2d_left.y == pytest.approx(expected_left.y, abs=1e-6)
        assert min(result.distances) == result.distances[result.selected_index]
        assert result.distances[result.selected_index] < 1e-9

    def test_no_candidates_after_mask(self, rig, mask_cfg, match_cfg, pointing_cfg):
        # All "objects" sit on the diver's side of the wrist fence.
        arm = _aim_arm(CameraPoint3D(0.45, 0.1, 1.5), CameraPoint3D(0.0, 0.25, 3.0), 0.25, 0.30)
        objects = (CameraPoint3D(1.0, 0.3, 1.8), CameraPoint3D(1.1, 0.35, 1.9))
        frame = synthetic_frame(rig, arm.wrist, arm.elbow, arm.shoulder, objects)
        with pytest.raises(NoCandidates) as exc:
            resolve(frame, rig, mask_cfg, match_cfg, pointing_cfg)
        assert exc.value.stage == "select"

    def test_infeasible_pose_stage_tagged(self, rig, mask_cfg, match_cfg, pointing_cfg):
        frame = synthetic_frame(
            rig,
            CameraPoint3D(0.45, 0.1, 1.5),
            CameraPoint3D(0.6, 0.05, 2.1),  # 0.6 m wrist-elbow depth gap
            CameraPoint3D(0.7, 0.0, 2.0),
            (CameraPoint3D(0.0, 0.25, 3.0), CameraPoint3D(0.1, 0.2, 3.5)),
        )
        with pytest.raises(InfeasiblePose) as exc:
            resolve(frame, rig, mask_cfg, match_cfg, pointing_cfg)
        assert exc.value.stage == "pose"

    def test_deterministic(self, rig, mask_cfg, match_cfg, pointing_cfg):
        frame, _ = generate_scene(default_scene_spec(seed=5))
        a = resolve(frame, rig, mask_cfg, match_cfg, pointing_cfg)
        b = resolve(frame, rig, mask_cfg, match_cfg, pointing_cfg)
        assert a == b


class TestResultSerialization:
    def test_selection_round_trip(self, rig, mask_cfg, match_cfg, pointing_cfg):
        frame, _ = generate_scene(default_scene_spec(seed=11))
        result = resolve(frame, rig, mask_cfg, match_cfg, pointing_cfg)
        again = parse_result(serialize_result(result))
        assert isinstance(again, SelectionResult)
        assert again == result

    def test_rejection_round_trip(self):
        rejection = Rejection(
            frame_id="f-1", stage="pose", reason="InfeasiblePose", detail="gap 0.6 m"
        )
        again = parse_result(serialize_result(rejection))
        assert again == rejection

    def test_document_shape(self, rig, mask_cfg, match_cfg, pointing_cfg):
        frame, _ = generate_scene(default_scene_spec(seed=11))
        result = resolve(frame, rig, mask_cfg, match_cfg, pointing_cfg)
        doc = json.loads(serialize_result(result))
        assert set(doc) == {
            "schema_version",
            "frame_id",
            "status",
            "selected_index",
            "object_2d_left",
            "object_3d",
            "distances",
            "extension_point",
            "warnings",
        }
        assert doc["status"] == "resolved"
        assert doc["frame_id"] == frame.frame_id
