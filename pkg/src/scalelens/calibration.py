"""Expected calibration error and confidence diagnostics.

Bins are equal-width over [0, 1], left-open/right-closed, with the lowest bin
additionally closed at 0 so that confidence 0.0 lands in bin 1 and confidence
1.0 in the top bin. ECE is the bin-count-weighted mean absolute gap between
per-bin accuracy and per-bin mean confidence. The global confidence/accuracy
gap is reported alongside ECE: a model can score a low ECE merely because its
global mean confidence happens to match its overall accuracy, which is a
weaker property than per-bin reliability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import DatasetManifest, RunRecord

DEFAULT_BINS = 15
BIN_RULE = "left-open right-closed, lowest bin closed at 0"


@dataclass(frozen=True)
class BinStat:
    lo: float
    hi: float
    count: int
    mean_confidence: float | None
    accuracy: float | None


@dataclass(frozen=True)
class CalibrationSummary:
    config_id: str
    ece: float
    n_bins: int
    bin_stats: tuple[BinStat, ...]
    mean_conf_correct: float | None
    mean_conf_incorrect: float | None
    global_conf: float
    global_acc: float
    global_gap: float


def _bin_index(confidences: np.ndarray, n_bins: int) -> np.ndarray:
    # bin b (0-based) covers (b/n, (b+1)/n]; ceil maps the open-closed rule
    idx = np.ceil(confidences * n_bins).astype(np.int64) - 1
    return np.clip(idx, 0, n_bins - 1)


def ece(
    record: RunRecord,
    manifest: DatasetManifest,
    n_bins: int = DEFAULT_BINS,
) -> CalibrationSummary:
    """Expected calibration error with equal-width confidence bins."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    record.validate_against(manifest)
    conf = record.confidences
    correct = (record.pred_labels == manifest.true_labels).astype(np.float64)
    n = manifest.n_test

    idx = _bin_index(conf, n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    conf_sums = np.bincount(idx, weights=conf, minlength=n_bins)
    acc_sums = np.bincount(idx, weights=correct, minlength=n_bins)

    stats = []
    total = 0.0
    for b in range(n_bins):
        lo, hi = b / n_bins, (b + 1) / n_bins
        c = int(counts[b])
        if c == 0:
            stats.append(BinStat(lo=lo, hi=hi, count=0,
                                 mean_confidence=None, accuracy=None))
            continue
        mean_conf = conf_sums[b] / c
        acc = acc_sums[b] / c
        total += (c / n) * abs(acc - mean_conf)
        stats.append(BinStat(lo=lo, hi=hi, count=c,
                             mean_confidence=float(mean_conf), accuracy=float(acc)))

    global_conf = float(conf.mean())
    global_acc = float(correct.mean())
    cc, ci = confidence_split(record, manifest)
    return CalibrationSummary(
        config_id=record.config_id,
        ece=float(total),
        n_bins=n_bins,
        bin_stats=tuple(stats),
        mean_conf_correct=cc,
        mean_conf_incorrect=ci,
        global_conf=global_conf,
        global_acc=global_acc,
        global_gap=abs(global_conf - global_acc),
    )


def confidence_split(
    record: RunRecord,
    manifest: DatasetManifest,
) -> tuple[float | None, float | None]:
    """Mean confidence over correct and over incorrect predictions.

    A side with no samples is reported as None.
    """
    record.validate_against(manifest)
    correct = record.pred_labels == manifest.true_labels
    on_correct = record.confidences[correct]
    on_incorrect = record.confidences[~correct]
    return (
        float(on_correct.mean()) if on_correct.size else None,
        float(on_incorrect.mean()) if on_incorrect.size else None,
    )
