"""Batch evaluation: per-frame scoring and aggregate statistics.

A predicted 2D location is credited to whichever ground-truth object it
lands nearest in the left image, mirroring how annotated trials are
counted: the prediction is correct when that nearest object is the
intended target. Pixel error is always measured against the intended
target's true projection.

Accuracy counts rejected frames in its denominator; pixel-error
statistics skip them. Standard deviations use the sample (n-1)
convention, with a single observation reported as 0 and flagged.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from .camera import CalibratedStereoRig
from .config import PipelineConfig, default_config
from .errors import EmptyInput, IdMismatch, StereopointError
from .frames import Frame
from .resolver import Rejection, SelectionResult, resolve
from .simulator import GroundTruth, NoiseSpec, SceneSpec, generate_batch, scene_at_depth

OUTCOMES = ("correct", "wrong", "rejected")


@dataclass(frozen=True)
class EvalRecord:
    """Judgment of one frame against its ground truth."""

    frame_id: str
    predicted_index: int | None
    true_index: int
    pixel_error: float | None
    outcome: str
    reason: str | None = None


@dataclass(frozen=True)
class EvalSummary:
    """Aggregate over one batch of records.

    pixel_error_mean/std cover correct and wrong frames; the
    ``_correct`` variants cover only frames where the predicted object
    matched the target, the convention used when quoting error against
    annotated images. histogram maps each true index to the frequency of
    every predicted index (string keys, plus "rejected").
    """

    accuracy: float
    pixel_error_mean: float | None
    pixel_error_std: float | None
    count: int
    histogram: dict[str, dict[str, int]] = field(default_factory=dict)
    correct_count: int = 0
    wrong_count: int = 0
    rejected_count: int = 0
    pixel_error_mean_correct: float | None = None
    pixel_error_std_correct: float | None = None
    std_degenerate: bool = False


def resolve_frame(frame: Frame, rig: CalibratedStereoRig, config: PipelineConfig) -> SelectionResult | Rejection:
    """Run the pipeline, converting pipeline errors into a Rejection."""
    try:
        return resolve(frame, rig, config.mask, config.match, config.pointing)
    except StereopointError as e:
        return Rejection.from_error(frame.frame_id, e)


def score_frame(result: SelectionResult | Rejection, truth: GroundTruth) -> EvalRecord:
    """Score one resolution outcome against ground truth.

    Raises:
        IdMismatch: When result and truth carry different frame ids.
    """
    if result.frame_id != truth.frame_id:
        raise IdMismatch(f"result {result.frame_id!r} vs truth {truth.frame_id!r}")
    if isinstance(result, Rejection):
        return EvalRecord(
            frame_id=truth.frame_id,
            predicted_index=None,
            true_index=truth.true_selection,
            pixel_error=None,
            outcome="rejected",
            reason=result.reason,
        )
    predicted = result.object_2d_left
    nearest = min(
        range(len(truth.true_left_pixels)),
        key=lambda i: (
            (predicted.x - truth.true_left_pixels[i].x) ** 2
            + (predicted.y - truth.true_left_pixels[i].y) ** 2,
            i,
        ),
    )
    target = truth.true_left_pixels[truth.true_selection]
    error = math.hypot(predicted.x - target.x, predicted.y - target.y)
    return EvalRecord(
        frame_id=truth.frame_id,
        predicted_index=nearest,
        true_index=truth.true_selection,
        pixel_error=error,
        outcome="correct" if nearest == truth.true_selection else "wrong",
    )


def _error_stats(errors: list[float]) -> tuple[float | None, float | None, bool]:
    if not errors:
        return None, None, False
    mean = statistics.fmean(errors)
    if len(errors) == 1:
        return mean, 0.0, True
    return mean, statistics.stdev(errors), False


def _histogram(records: list[EvalRecord]) -> dict[str, dict[str, int]]:
    table: dict[int, dict[str, int]] = {}
    for record in records:
        inner = table.setdefault(record.true_index, {})
        key = "rejected" if record.predicted_index is None else str(record.predicted_index)
        inner[key] = inner.get(key, 0) + 1
    out: dict[str, dict[str, int]] = {}
    for true_index in sorted(table):
        inner = table[true_index]
        ordered: dict[str, int] = {}
        for key in sorted((k for k in inner if k != "rejected"), key=int):
            ordered[key] = inner[key]
        if "rejected" in inner:
            ordered["rejected"] = inner["rejected"]
        out[str(true_index)] = ordered
    return out


def summarize(records: list[EvalRecord]) -> EvalSummary:
    """Aggregate a batch of records; permutation-invariant.

    Raises:
        EmptyInput: When ``records`` is empty.
    """
    if not records:
        raise EmptyInput("no records to summarize")
    by_outcome = {outcome: [r for r in records if r.outcome == outcome] for outcome in OUTCOMES}
    # Sorting the values fixes the reduction order, so aggregation is
    # bitwise permutation-invariant.
    errors = sorted(
        r.pixel_error for r in by_outcome["correct"] + by_outcome["wrong"] if r.pixel_error is not None
    )
    errors_correct = sorted(
        r.pixel_error for r in by_outcome["correct"] if r.pixel_error is not None
    )
    mean_all, std_all, degenerate_all = _error_stats(errors)
    mean_correct, std_correct, degenerate_correct = _error_stats(errors_correct)
    return EvalSummary(
        accuracy=len(by_outcome["correct"]) / len(records),
        pixel_error_mean=mean_all,
        pixel_error_std=std_all,
        count=len(records),
        histogram=_histogram(records),
        correct_count=len(by_outcome["correct"]),
        wrong_count=len(by_outcome["wrong"]),
        rejected_count=len(by_outcome["rejected"]),
        pixel_error_mean_correct=mean_correct,
        pixel_error_std_correct=std_correct,
        std_degenerate=degenerate_all or degenerate_correct,
    )


@dataclass(frozen=True)
class SweepCell:
    depth: float
    pixel_sigma: float
    summary: EvalSummary
    records: tuple[EvalRecord, ...]


@dataclass(frozen=True)
class SweepResult:
    depths: tuple[float, ...]
    pixel_sigmas: tuple[float, ...]
    n_per_cell: int
    seed: int
    cells: tuple[SweepCell, ...]

    def cell(self, depth: float, pixel_sigma: float) -> SweepCell:
        for cell in self.cells:
            if cell.depth == depth and cell.pixel_sigma == pixel_sigma:
                return cell
        raise KeyError((depth, pixel_sigma))


def depth_sweep(
    base: SceneSpec,
    depths: list[float],
    noise_sigmas: list[float],
    n_per_cell: int,
    config: PipelineConfig | None = None,
) -> SweepResult:
    """Accuracy grid over scene depth and pixel-noise level.

    For every (depth, sigma) cell the base scene is shifted so its
    nearest object sits at that depth, ``n_per_cell`` jittered scenes
    are generated with that noise level, and each is resolved and
    scored. Cell seeds derive from ``(base.seed, depth index, sigma
    index)``, so the grid is reproducible.
    """
    if n_per_cell < 1:
        raise ValueError(f"n_per_cell must be >= 1, got {n_per_cell}")
    if not depths or not noise_sigmas:
        raise ValueError("depths and noise_sigmas must be non-empty")
    cfg = config if config is not None else default_config()
    cells = []
    for di, depth in enumerate(depths):
        for si, sigma in enumerate(noise_sigmas):
            spec = scene_at_depth(base, depth)
            spec = replace(spec, noise=NoiseSpec(pixel_sigma=sigma, descriptor_sigma=base.noise.descriptor_sigma))
            cell_seed = int(np.random.SeedSequence([base.seed, di, si]).generate_state(1, np.uint64)[0])
            records = []
            for frame, truth in generate_batch(spec, n_per_cell, cell_seed):
                records.append(score_frame(resolve_frame(frame, spec.rig, cfg), truth))
            cells.append(
                SweepCell(depth=depth, pixel_sigma=sigma, summary=summarize(records), records=tuple(records))
            )
    return SweepResult(
        depths=tuple(depths),
        pixel_sigmas=tuple(noise_sigmas),
        n_per_cell=n_per_cell,
        seed=base.seed,
        cells=tuple(cells),
    )
