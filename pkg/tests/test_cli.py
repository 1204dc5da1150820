"""Command-line workflows on temporary directories."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from stereopoint import (
    CameraPoint3D,
    default_scene_spec,
    serialize_calibration,
    serialize_frame,
    serialize_scene_spec,
)
from stereopoint.cli import main


@pytest.fixture
def workspace(tmp_path: Path) -> dict[str, Path]:
    spec = default_scene_spec(seed=23)
    calib = tmp_path / "calib.json"
    calib.write_text(serialize_calibration(spec.rig))
    spec_path = tmp_path / "scene.json"
    spec_path.write_text(serialize_scene_spec(spec))
    return {"root": tmp_path, "calib": calib, "spec": spec_path}


def run(*argv: str) -> int:
    return main(list(argv))


def simulate(ws, out="frames", count=4, seed=5) -> Path:
    out_dir = ws["root"] / out
    code = run(
        "simulate", "--spec", str(ws["spec"]), "--count", str(count), "--seed", str(seed),
        "--out", str(out_dir),
    )
    assert code == 0
    return out_dir


class TestSimulate:
    def test_writes_frame_and_truth_files(self, workspace):
        out_dir = simulate(workspace, count=3)
        assert len(list(out_dir.glob("*.frame"))) == 3
        assert len(list(out_dir.glob("*.truth"))) == 3

    def test_rerun_identical(self, workspace):
        a = simulate(workspace, out="a")
        b = simulate(workspace, out="b")
        for pa in sorted(a.iterdir()):
            assert pa.read_bytes() == (b / pa.name).read_bytes()

    def test_refuses_non_empty_dir(self, workspace):
        out_dir = simulate(workspace, out="frames")
        code = run(
            "simulate", "--spec", str(workspace["spec"]), "--count", "2", "--out", str(out_dir)
        )
        assert code == 1

    def test_force_overwrites(self, workspace):
        out_dir = simulate(workspace, out="frames")
        code = run(
            "simulate", "--spec", str(workspace["spec"]), "--count", "2", "--seed", "5",
            "--out", str(out_dir), "--force",
        )
        assert code == 0

    def test_bad_spec_exits_fatal(self, workspace, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert run("simulate", "--spec", str(bad), "--count", "2", "--out", str(tmp_path / "o")) == 1


class TestResolve:
    def test_resolves_all_frames(self, workspace, capsys):
        frames_dir = simulate(workspace)
        results_dir = workspace["root"] / "results"
        frames = sorted(str(p) for p in frames_dir.glob("*.frame"))
        code = run("resolve", "--calib", str(workspace["calib"]), "--out", str(results_dir), *frames)
        assert code == 0
        results = sorted(results_dir.glob("*.result"))
        assert len(results) == 4
        doc = json.loads(results[0].read_text())
        assert doc["status"] == "resolved"

    def test_missing_calibration_fatal(self, workspace):
        frames_dir = simulate(workspace)
        frames = sorted(str(p) for p in frames_dir.glob("*.frame"))
        code = run("resolve", "--calib", str(workspace["root"] / "nope.json"),
                   "--out", str(workspace["root"] / "r"), *frames)
        assert code == 1

    def test_rejected_frame_exits_two(self, workspace, tmp_path):
        # A frame whose triangulated wrist-elbow depth gap is 0.6 m must
        # produce a rejection record, not a result.
        from test_resolver import synthetic_frame

        spec = default_scene_spec(seed=29)
        frame = synthetic_frame(
            spec.rig,
            CameraPoint3D(0.45, 0.1, 1.5),
            CameraPoint3D(0.6, 0.05, 2.1),
            CameraPoint3D(0.7, 0.0, 2.0),
            (CameraPoint3D(0.0, 0.25, 3.0), CameraPoint3D(0.1, 0.2, 3.5)),
            frame_id="infeasible",
        )
        frame_path = tmp_path / "infeasible.frame"
        frame_path.write_text(serialize_frame(frame))
        results_dir = tmp_path / "results"
        code = run(
            "resolve", "--calib", str(workspace["calib"]), "--out", str(results_dir), str(frame_path)
        )
        assert code == 2
        doc = json.loads((results_dir / "infeasible.result").read_text())
        assert doc["status"] == "rejected"
        assert doc["stage"] == "pose"
        assert doc["reason"] == "InfeasiblePose"

    def test_jobs_flag_gives_identical_results(self, workspace):
        frames_dir = simulate(workspace, count=6)
        frames = sorted(str(p) for p in frames_dir.glob("*.frame"))
        serial = workspace["root"] / "serial"
        parallel = workspace["root"] / "parallel"
        assert run("resolve", "--calib", str(workspace["calib"]), "--out", str(serial), *frames) == 0
        assert run(
            "resolve", "--calib", str(workspace["calib"]), "--out", str(parallel), "--jobs", "4", *frames
        ) == 0
        for pa in sorted(serial.iterdir()):
            assert pa.read_bytes() == (parallel / pa.name).read_bytes()

    def test_flag_overrides_config_file(self, workspace, tmp_path):
        frames_dir = simulate(workspace, count=1)
        frames = sorted(str(p) for p in frames_dir.glob("*.frame"))
        config = tmp_path / "cfg.json"
        config.write_text('{"match": {"ratio_threshold": 0.9}}')
        out = tmp_path / "r"
        # A ratio threshold this tight rejects even perfect matches is not
        # possible (ratio 0), so instead squeeze min disparity to reject all.
        code = run(
            "resolve", "--calib", str(workspace["calib"]), "--config", str(config),
            "--min-disparity", "500", "--out", str(out), *frames,
        )
        assert code == 2  # every candidate filtered, frame rejected


class TestEvaluate:
    def test_full_workflow(self, workspace):
        frames_dir = simulate(workspace, count=5)
        results_dir = workspace["root"] / "results"
        frames = sorted(str(p) for p in frames_dir.glob("*.frame"))
        assert run("resolve", "--calib", str(workspace["calib"]), "--out", str(results_dir), *frames) == 0
        report_dir = workspace["root"] / "report"
        code = run(
            "evaluate", "--results", str(results_dir), "--truth", str(frames_dir),
            "--out", str(report_dir),
        )
        assert code == 0
        assert (report_dir / "report.json").exists()
        assert (report_dir / "records.csv").exists()
        assert (report_dir / "table.txt").exists()
        assert (report_dir / "histogram.svg").exists()
        report = json.loads((report_dir / "report.json").read_text())
        assert report["summary"]["accuracy"] == 1.0
        assert report["summary"]["count"] == 5

    def test_empty_dirs_fatal(self, workspace, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert run("evaluate", "--results", str(empty), "--truth", str(empty),
                   "--out", str(tmp_path / "r")) == 1

    def test_mismatched_ids_fatal(self, workspace, capsys):
        frames_dir = simulate(workspace, count=3)
        results_dir = workspace["root"] / "results"
        frames = sorted(str(p) for p in frames_dir.glob("*.frame"))
        assert run("resolve", "--calib", str(workspace["calib"]), "--out", str(results_dir), *frames) == 0
        extra = frames_dir / "scene-00099.truth"
        extra.write_text((frames_dir / "scene-00000.truth").read_text())
        code = run(
            "evaluate", "--results", str(results_dir), "--truth", str(frames_dir),
            "--out", str(workspace["root"] / "rep"),
        )
        assert code == 1
        assert "scene-00099" in capsys.readouterr().err

    def test_no_plots_flag(self, workspace):
        frames_dir = simulate(workspace, count=2)
        results_dir = workspace["root"] / "results"
        frames = sorted(str(p) for p in frames_dir.glob("*.frame"))
        run("resolve", "--calib", str(workspace["calib"]), "--out", str(results_dir), *frames)
        report_dir = workspace["root"] / "report"
        assert run(
            "evaluate", "--results", str(results_dir), "--truth", str(frames_dir),
            "--out", str(report_dir), "--no-plots",
        ) == 0
        assert not (report_dir / "histogram.svg").exists()


class TestSweep:
    def test_writes_grid_outputs(self, workspace):
        out = workspace["root"] / "sweep"
        code = run(
            "sweep", "--spec", str(workspace["spec"]), "--depths", "2,3", "--sigmas", "0,1",
            "--n", "4", "--out", str(out),
        )
        assert code == 0
        assert (out / "sweep.json").exists()
        assert (out / "table.txt").exists()
        assert (out / "records.csv").exists()
        assert (out / "accuracy_vs_depth.svg").exists()
        assert len(list(out.glob("histogram_*.svg"))) == 4
        grid = json.loads((out / "sweep.json").read_text())
        assert [c["depth"] for c in grid["cells"]] == [2.0, 2.0, 3.0, 3.0]

    def test_rerun_identical_bytes(self, workspace):
        out_a = workspace["root"] / "sweep_a"
        out_b = workspace["root"] / "sweep_b"
        for out in (out_a, out_b):
            assert run(
                "sweep", "--spec", str(workspace["spec"]), "--depths", "2", "--sigmas", "1",
                "--n", "5", "--seed", "3", "--out", str(out),
            ) == 0
        for pa in sorted(out_a.iterdir()):
            assert pa.read_bytes() == (out_b / pa.name).read_bytes()
