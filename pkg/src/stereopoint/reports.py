"""Report emission: JSON summaries, delimited records, text tables, and
vector-graphics histogram figures.

All outputs are deterministic: JSON uses the canonical document form,
CSV uses full-precision float reprs, and SVG figures are written with a
fixed hash salt and no embedded date, so identical evaluations produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import statistics
from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import docio
from .errors import ParseError
from .evaluation import EvalRecord, EvalSummary, SweepResult

matplotlib.rcParams["svg.hashsalt"] = "stereopoint"

_TRUE_COLOR = "#7b3294"  # target object's bar
_OTHER_COLOR = "#e8c547"  # every other outcome

RECORD_FIELDS = ("frame_id", "true_index", "predicted_index", "outcome", "reason", "pixel_error")


def _opt(value: float | None) -> float | None:
    return None if value is None else float(value)


def summary_to_json(summary: EvalSummary) -> dict:
    return {
        "accuracy": float(summary.accuracy),
        "pixel_error_mean": _opt(summary.pixel_error_mean),
        "pixel_error_std": _opt(summary.pixel_error_std),
        "count": summary.count,
        "histogram": summary.histogram,
        "correct_count": summary.correct_count,
        "wrong_count": summary.wrong_count,
        "rejected_count": summary.rejected_count,
        "pixel_error_mean_correct": _opt(summary.pixel_error_mean_correct),
        "pixel_error_std_correct": _opt(summary.pixel_error_std_correct),
        "std_degenerate": summary.std_degenerate,
    }


def summary_from_json(obj: dict, path: str = "summary") -> EvalSummary:
    def opt_number(name: str) -> float | None:
        value = docio.require(obj, name, path)
        return None if value is None else docio.as_number(value, f"{path}.{name}")

    histogram_raw = docio.as_object(docio.require(obj, "histogram", path), f"{path}.histogram")
    histogram = {
        str(true): {str(k): docio.as_int(v, f"{path}.histogram.{true}.{k}") for k, v in inner.items()}
        for true, inner in histogram_raw.items()
    }
    return EvalSummary(
        accuracy=docio.as_number(docio.require(obj, "accuracy", path), f"{path}.accuracy"),
        pixel_error_mean=opt_number("pixel_error_mean"),
        pixel_error_std=opt_number("pixel_error_std"),
        count=docio.as_int(docio.require(obj, "count", path), f"{path}.count"),
        histogram=histogram,
        correct_count=docio.as_int(docio.require(obj, "correct_count", path), f"{path}.correct_count"),
        wrong_count=docio.as_int(docio.require(obj, "wrong_count", path), f"{path}.wrong_count"),
        rejected_count=docio.as_int(docio.require(obj, "rejected_count", path), f"{path}.rejected_count"),
        pixel_error_mean_correct=opt_number("pixel_error_mean_correct"),
        pixel_error_std_correct=opt_number("pixel_error_std_correct"),
        std_degenerate=bool(docio.require(obj, "std_degenerate", path)),
    )


def serialize_report(summary: EvalSummary) -> str:
    return docio.dumps({"schema_version": docio.SCHEMA_VERSION, "summary": summary_to_json(summary)})


def parse_report(document: str) -> EvalSummary:
    """Inverse of :func:`serialize_report`; values round-trip exactly."""
    obj = docio.parse_object(document)
    docio.check_schema_version(obj)
    return summary_from_json(docio.as_object(docio.require(obj, "summary"), "summary"))


def serialize_sweep_report(sweep: SweepResult) -> str:
    return docio.dumps(
        {
            "schema_version": docio.SCHEMA_VERSION,
            "depths": [float(d) for d in sweep.depths],
            "pixel_sigmas": [float(s) for s in sweep.pixel_sigmas],
            "n_per_cell": sweep.n_per_cell,
            "seed": sweep.seed,
            "cells": [
                {
                    "depth": float(cell.depth),
                    "pixel_sigma": float(cell.pixel_sigma),
                    "summary": summary_to_json(cell.summary),
                }
                for cell in sweep.cells
            ],
        }
    )


def parse_sweep_report(document: str) -> list[tuple[float, float, EvalSummary]]:
    """Cells of an emitted sweep report as (depth, sigma, summary)."""
    obj = docio.parse_object(document)
    docio.check_schema_version(obj)
    cells = []
    for i, raw in enumerate(docio.as_list(docio.require(obj, "cells"), "cells")):
        cell = docio.as_object(raw, f"cells[{i}]")
        cells.append(
            (
                docio.as_number(docio.require(cell, "depth", f"cells[{i}]"), f"cells[{i}].depth"),
                docio.as_number(
                    docio.require(cell, "pixel_sigma", f"cells[{i}]"), f"cells[{i}].pixel_sigma"
                ),
                summary_from_json(
                    docio.as_object(docio.require(cell, "summary", f"cells[{i}]"), f"cells[{i}].summary"),
                    f"cells[{i}].summary",
                ),
            )
        )
    return cells


def records_csv(records: Iterable[EvalRecord], extra: dict[str, float] | None = None) -> str:
    """Delimited per-frame records; ``extra`` adds constant lead columns
    (for sweep cells: depth and noise level)."""
    out = io.StringIO()
    extra = extra or {}
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([*extra.keys(), *RECORD_FIELDS])
    lead = [repr(float(v)) for v in extra.values()]
    for r in records:
        writer.writerow(
            lead
            + [
                r.frame_id,
                r.true_index,
                "" if r.predicted_index is None else r.predicted_index,
                r.outcome,
                r.reason or "",
                "" if r.pixel_error is None else repr(float(r.pixel_error)),
            ]
        )
    return out.getvalue()


def _mean_std_count(errors: list[float]) -> str:
    if not errors:
        return "-"
    mean = statistics.fmean(errors)
    std = statistics.stdev(errors) if len(errors) > 1 else 0.0
    return f"{mean:.2f}±{std:.2f} ({len(errors)})"


def format_error_table(records: list[EvalRecord], title: str = "") -> str:
    """Text table of per-target pixel error, mean+-std (count) over the
    frames whose prediction matched that target, plus a total row."""
    lines = []
    if title:
        lines.append(title)
    header = f"{'target':>8}  {'correct':>8}  {'total':>6}  {'accuracy':>8}  error px, correct only"
    lines.append(header)
    lines.append("-" * len(header))
    all_correct_errors: list[float] = []
    for true_index in sorted({r.true_index for r in records}):
        group = [r for r in records if r.true_index == true_index]
        correct = [r for r in group if r.outcome == "correct"]
        errors = sorted(r.pixel_error for r in correct if r.pixel_error is not None)
        all_correct_errors.extend(errors)
        lines.append(
            f"{true_index:>8}  {len(correct):>8}  {len(group):>6}  "
            f"{len(correct) / len(group):>8.3f}  {_mean_std_count(errors)}"
        )
    total_correct = sum(1 for r in records if r.outcome == "correct")
    lines.append(
        f"{'total':>8}  {total_correct:>8}  {len(records):>6}  "
        f"{total_correct / len(records):>8.3f}  {_mean_std_count(sorted(all_correct_errors))}"
    )
    return "\n".join(lines) + "\n"


def format_sweep_table(sweep: SweepResult) -> str:
    header = (
        f"{'depth m':>8}  {'sigma px':>8}  {'accuracy':>8}  {'correct':>8}  "
        f"{'wrong':>6}  {'rejected':>8}  error px, correct only"
    )
    lines = [header, "-" * len(header)]
    for cell in sweep.cells:
        s = cell.summary
        if s.pixel_error_mean_correct is None:
            err = "-"
        else:
            err = f"{s.pixel_error_mean_correct:.2f}±{s.pixel_error_std_correct:.2f} ({s.correct_count})"
        lines.append(
            f"{cell.depth:>8.2f}  {cell.pixel_sigma:>8.2f}  {s.accuracy:>8.3f}  "
            f"{s.correct_count:>8}  {s.wrong_count:>6}  {s.rejected_count:>8}  {err}"
        )
    return "\n".join(lines) + "\n"


def _save_figure(fig, path: Path) -> None:
    # Date must be suppressed for byte-identical reruns.
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_selection_histogram(summary: EvalSummary, path: str | Path, title: str = "") -> Path:
    """One panel per true target showing the relative frequency of each
    predicted outcome; the target's own bar is highlighted."""
    path = Path(path)
    trues = sorted(summary.histogram, key=int)
    if not trues:
        trues = ["0"]
    fig, axes = plt.subplots(1, len(trues), figsize=(3.2 * len(trues), 3.0), squeeze=False)
    for ax, true_key in zip(axes[0], trues):
        inner = summary.histogram.get(true_key, {})
        labels = list(inner.keys())
        total = sum(inner.values()) or 1
        values = [inner[k] / total for k in labels]
        colors = [_TRUE_COLOR if k == true_key else _OTHER_COLOR for k in labels]
        ax.bar(range(len(labels)), values, color=colors)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels)
        ax.set_ylim(0.0, 1.0)
        ax.set_xlabel("predicted")
        ax.set_title(f"target {true_key}")
    axes[0][0].set_ylabel("relative frequency")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save_figure(fig, path)
    return path


def plot_accuracy_vs_depth(sweep: SweepResult, path: str | Path) -> Path:
    """Accuracy against scene depth, one line per noise level."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    for sigma in sweep.pixel_sigmas:
        accuracies = [sweep.cell(depth, sigma).summary.accuracy for depth in sweep.depths]
        ax.plot(sweep.depths, accuracies, marker="o", label=f"sigma = {sigma:g} px")
    ax.set_xlabel("nearest object depth, m")
    ax.set_ylabel("selection accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    _save_figure(fig, path)
    return path


def parse_records_csv(text: str) -> list[EvalRecord]:
    """Read back a records CSV (ignoring any lead columns)."""
    reader = csv.DictReader(io.StringIO(text))
    records = []
    for row in reader:
        try:
            records.append(
                EvalRecord(
                    frame_id=row["frame_id"],
                    true_index=int(row["true_index"]),
                    predicted_index=int(row["predicted_index"]) if row["predicted_index"] else None,
                    pixel_error=float(row["pixel_error"]) if row["pixel_error"] else None,
                    outcome=row["outcome"],
                    reason=row["reason"] or None,
                )
            )
        except (KeyError, ValueError) as e:
            raise ParseError("records", f"bad row {row!r}: {e}") from e
    return records
