"""Alarm-reduction comparisons between baseline and adapted runs."""

from __future__ import annotations

import csv
import io
from typing import Mapping

from .adaptor import Mode, RunReport
from .errors import ComparabilityError, UndefinedMetricError


def alarm_reduction(n_b: int, n_a: int) -> float:
    """Percentage of baseline alarms removed by an adapted mode; negative if it got worse."""
    if n_b < 1:
        raise UndefinedMetricError("alarm reduction is undefined for a baseline with no alarms")
    return (n_b - n_a) / n_b * 100.0


def mode_improvement(n_n: int, n_p: int) -> float:
    """Percentage fewer alarms in persistent mode than in non-persistent mode."""
    if n_n < 1:
        raise UndefinedMetricError("mode improvement is undefined when non-persistent mode raised no alarms")
    return (n_n - n_p) / n_n * 100.0


def improvement_from_reductions(r_n: float, r_p: float) -> float:
    """Mode improvement recovered from the two baseline reductions alone."""
    if r_n >= 100.0:
        raise UndefinedMetricError("non-persistent mode removed every alarm")
    return (r_p - r_n) / (100.0 - r_n) * 100.0


def summarize(runs: Mapping[str, RunReport]) -> dict:
    """Experiment summary over labelled runs that replayed the same stream.

    Reductions are reported for every adapted run when a baseline run is
    present, and the persistent-vs-non-persistent improvement when both are.
    """
    if not runs:
        raise ComparabilityError("no runs to summarize")
    hashes = {r.stream_hash for r in runs.values()}
    if len(hashes) != 1:
        raise ComparabilityError(f"runs replayed different streams: {sorted(hashes)}")
    thresholds = {r.detector.threshold for r in runs.values()}
    if len(thresholds) != 1:
        raise ComparabilityError("runs used different detector thresholds")

    by_mode = {r.config.mode: (label, r) for label, r in runs.items()}
    summary = {
        "stream_hash": hashes.pop(),
        "threshold": thresholds.pop(),
        "runs": {
            label: {
                "mode": r.config.mode.label,
                "total_batches": r.total_batches,
                "alarms": r.alarms,
                "alarm_timeline": r.alarm_timeline(),
            }
            for label, r in runs.items()
        },
        "alarm_reduction": {},
        "mode_improvement": None,
    }
    if Mode.BASELINE in by_mode:
        n_b = by_mode[Mode.BASELINE][1].alarms
        for mode in (Mode.NON_PERSISTENT, Mode.PERSISTENT):
            if mode in by_mode:
                label, r = by_mode[mode]
                summary["alarm_reduction"][label] = {
                    "n_b": n_b, "n_a": r.alarms,
                    "percent": alarm_reduction(n_b, r.alarms) if n_b else None,
                }
    if Mode.NON_PERSISTENT in by_mode and Mode.PERSISTENT in by_mode:
        n_n = by_mode[Mode.NON_PERSISTENT][1].alarms
        n_p = by_mode[Mode.PERSISTENT][1].alarms
        summary["mode_improvement"] = {
            "n_n": n_n, "n_p": n_p, "percent": mode_improvement(n_n, n_p) if n_n else None,
        }
    return summary


def timeline_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("batch_index", "alarm"))
    for e, a in zip(report.events, report.alarm_timeline()):
        w.writerow((e.batch_index, a))
    return buf.getvalue()
