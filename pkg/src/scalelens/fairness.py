"""Per-class inequality analysis: Gini coefficient, binomial null, bottom-k.

The Gini coefficient is computed in its mean-absolute-difference form,
G = sum_ij |x_i - x_j| / (2 n^2 mean(x)), equivalent to the Lorenz-curve
definition for discrete data. The binomial null gives the inequality expected
from finite-sample variance alone when every class shares one true accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .records import PerClassAccuracy

DEFAULT_KS = (5, 10, 20)
DEFAULT_NULL_TRIALS = 10_000

Ranking = Literal["per_seed", "pooled"]


@dataclass(frozen=True)
class FairnessSummary:
    config_id: str
    gini_mean: float
    gini_std: float | None
    per_seed_ginis: tuple[float, ...]
    null_gini: float | None
    null_gini_std: float | None
    bottom_k: dict[int, float]
    top_k: dict[int, float]


def gini(values: Sequence[float]) -> float:
    """Gini coefficient of nonnegative values; 0 means perfectly uniform."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("gini of an empty sequence is undefined")
    if (x < 0).any():
        raise ValueError("gini requires nonnegative values")
    total = float(x.sum())
    if total == 0.0:
        raise ValueError("gini undefined for all-zero values")
    # sorted form of the pairwise mean-absolute-difference definition;
    # clamp the tiny negative rounding residue of uniform inputs
    xs = np.sort(x)
    n = x.size
    ranks = np.arange(1, n + 1, dtype=np.float64)
    return max(float(((2.0 * ranks - n - 1.0) @ xs) / (n * total)), 0.0)


def binomial_null_gini(
    p: float,
    n_classes: int,
    n_per_class: int,
    n_trials: int = DEFAULT_NULL_TRIALS,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo expectation of the Gini under a shared-accuracy null.

    Each trial draws ``n_classes`` independent Binomial(n_per_class, p)
    accuracy estimates and computes their Gini; returns (mean, std) over
    trials. Trials where every class draws zero correct (possible only for
    extreme p) are skipped since their Gini is undefined.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if n_classes <= 0 or n_per_class <= 0:
        raise ValueError("n_classes and n_per_class must be positive")
    if n_trials < 1000:
        raise ValueError(f"n_trials must be >= 1000, got {n_trials}")
    rng = np.random.default_rng(seed)
    counts = rng.binomial(n_per_class, p, size=(n_trials, n_classes))
    accs = counts / n_per_class
    sums = accs.sum(axis=1)
    keep = sums > 0.0
    accs = accs[keep]
    n = n_classes
    ranks = 2.0 * np.arange(1, n + 1, dtype=np.float64) - n - 1.0
    ginis = np.maximum(np.sort(accs, axis=1) @ ranks / (n * accs.sum(axis=1)), 0.0)
    return float(ginis.mean()), float(ginis.std(ddof=1))


def bottom_top_k(pca: PerClassAccuracy, k: int) -> tuple[float, float]:
    """Mean accuracy of the k hardest and k easiest classes.

    Classes are sorted by accuracy ascending, ties broken by class index
    ascending, so the selection is deterministic.
    """
    n = pca.n_classes
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    order = np.argsort(pca.values, kind="stable")
    ordered = pca.values[order]
    return float(ordered[:k].mean()), float(ordered[-k:].mean())


def fairness_summary(
    per_seed_pcas: Sequence[PerClassAccuracy],
    config_id: str,
    ks: Sequence[int] = DEFAULT_KS,
    null_trials: int = DEFAULT_NULL_TRIALS,
    null_seed: int = 0,
    ranking: Ranking = "per_seed",
) -> FairnessSummary:
    """Aggregate per-class inequality metrics for one configuration.

    ``ranking`` controls how the hardest classes are chosen: ``per_seed``
    ranks classes within each seed's own accuracy vector before averaging the
    bottom-k/top-k means across seeds; ``pooled`` ranks once on the seed-mean
    accuracy vector and evaluates every seed on that fixed class set.

    The binomial null is evaluated at the configuration's overall accuracy;
    it requires equal class support and is reported as None otherwise.
    """
    if not per_seed_pcas:
        raise ValueError("need at least one per-class accuracy vector")
    n_classes = per_seed_pcas[0].n_classes
    if any(p.n_classes != n_classes for p in per_seed_pcas):
        raise ValueError("per-seed vectors disagree on class count")
    ks = [k for k in ks if 1 <= k <= n_classes]

    per_seed_ginis = tuple(gini(p.values) for p in per_seed_pcas)
    gini_mean = float(np.mean(per_seed_ginis))
    gini_std = (float(np.std(per_seed_ginis, ddof=1))
                if len(per_seed_ginis) >= 2 else None)

    bottom: dict[int, float] = {}
    top: dict[int, float] = {}
    if ranking == "per_seed":
        for k in ks:
            pairs = [bottom_top_k(p, k) for p in per_seed_pcas]
            bottom[k] = float(np.mean([b for b, _ in pairs]))
            top[k] = float(np.mean([t for _, t in pairs]))
    elif ranking == "pooled":
        mean_values = np.mean([p.values for p in per_seed_pcas], axis=0)
        order = np.argsort(mean_values, kind="stable")
        for k in ks:
            hard, easy = order[:k], order[-k:]
            bottom[k] = float(np.mean([p.values[hard].mean() for p in per_seed_pcas]))
            top[k] = float(np.mean([p.values[easy].mean() for p in per_seed_pcas]))
    else:
        raise ValueError(f"unknown ranking {ranking!r}")

    null_mean = null_std = None
    supports = per_seed_pcas[0].support
    if supports.min() == supports.max():
        p_overall = float(np.mean([p.overall_accuracy for p in per_seed_pcas]))
        if 0.0 < p_overall < 1.0:
            null_mean, null_std = binomial_null_gini(
                p_overall, n_classes, int(supports[0]),
                n_trials=null_trials, seed=null_seed)

    return FairnessSummary(
        config_id=config_id,
        gini_mean=gini_mean,
        gini_std=gini_std,
        per_seed_ginis=per_seed_ginis,
        null_gini=null_mean,
        null_gini_std=null_std,
        bottom_k=bottom,
        top_k=top,
    )


def gini_difference_ci(
    ginis_a: Sequence[float],
    ginis_b: Sequence[float],
    n_resamples: int = 10_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap 95% CI for mean(ginis_a) - mean(ginis_b).

    Each side is resampled with replacement independently of the other.
    """
    a = np.sort(np.asarray(ginis_a, dtype=np.float64))
    b = np.sort(np.asarray(ginis_b, dtype=np.float64))
    if a.size < 2 or b.size < 2:
        raise ValueError("each side needs at least 2 per-seed values")
    if n_resamples < 1000:
        raise ValueError(f"n_resamples must be >= 1000, got {n_resamples}")
    rng = np.random.default_rng(seed)
    idx_a = rng.integers(0, a.size, size=(n_resamples, a.size))
    idx_b = rng.integers(0, b.size, size=(n_resamples, b.size))
    diffs = a[idx_a].mean(axis=1) - b[idx_b].mean(axis=1)
    lo, hi = np.percentile(diffs, [2.5, 97.5])
    return float(lo), float(hi)
