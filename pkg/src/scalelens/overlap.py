"""Jaccard overlap between error sets, analytic null models, and bootstrap CIs.

Cross-configuration overlap enumerates the full Cartesian product of seed
pairs (two runs with the same seed index are still distinct trained models);
the within-configuration stability baseline enumerates unordered distinct
seed pairs only. Both null models are evaluated at the seed-mean error rates
of the two configurations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .records import ErrorMask

BOOTSTRAP_METHOD = "percentile"
BOOTSTRAP_PRNG = "numpy-pcg64"


@dataclass(frozen=True)
class OverlapSummary:
    config_a: str
    config_b: str
    pair_values: tuple[float, ...]
    mean: float
    std: float | None
    n_pairs: int
    indep_null: float | None
    containment_null: float | None
    bootstrap_ci95: tuple[float, float] | None = None


def jaccard(mask_a: ErrorMask, mask_b: ErrorMask) -> float:
    """|A intersect B| / |A union B|; 1.0 when both error sets are empty."""
    if mask_a.n_test != mask_b.n_test:
        raise ValueError(
            f"mask lengths differ: {mask_a.n_test} vs {mask_b.n_test}")
    union = int(np.count_nonzero(mask_a.bits | mask_b.bits))
    if union == 0:
        return 1.0
    inter = int(np.count_nonzero(mask_a.bits & mask_b.bits))
    return inter / union


def independence_null(e_a: float, e_b: float) -> float:
    """Expected Jaccard if the two error sets were statistically independent."""
    if not (0.0 <= e_a <= 1.0 and 0.0 <= e_b <= 1.0):
        raise ValueError(f"error rates must lie in [0, 1], got {e_a}, {e_b}")
    if e_a == 0.0 and e_b == 0.0:
        raise ValueError("independence null undefined when both error rates are 0")
    return (e_a * e_b) / (e_a + e_b - e_a * e_b)


def containment_null(e_a: float, e_b: float) -> float:
    """Maximal Jaccard at the given error rates: smaller set nested in larger."""
    if not (0.0 < e_a <= 1.0 and 0.0 < e_b <= 1.0):
        raise ValueError(f"error rates must lie in (0, 1], got {e_a}, {e_b}")
    return min(e_a, e_b) / max(e_a, e_b)


def _summary_stats(values: list[float]) -> tuple[float, float | None]:
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) >= 2 else None
    return mean, std


def _null_rates(masks: Sequence[ErrorMask]) -> float:
    return float(np.mean([m.error_rate for m in masks]))


def cross_config_overlap(
    runs_a: Mapping[int, ErrorMask],
    runs_b: Mapping[int, ErrorMask],
    config_a: str = "a",
    config_b: str = "b",
) -> OverlapSummary:
    """Overlap between two configurations across all seed pairs.

    ``runs_a`` and ``runs_b`` map seed to error mask. Pair values are ordered
    by (seed_a, seed_b); the null models use each side's seed-mean error rate.
    """
    if not runs_a or not runs_b:
        raise ValueError("both sides need at least one run")
    values = [
        jaccard(runs_a[sa], runs_b[sb])
        for sa in sorted(runs_a)
        for sb in sorted(runs_b)
    ]
    mean, std = _summary_stats(values)
    e_a = _null_rates([runs_a[s] for s in sorted(runs_a)])
    e_b = _null_rates([runs_b[s] for s in sorted(runs_b)])
    indep = independence_null(e_a, e_b) if (e_a, e_b) != (0.0, 0.0) else None
    contain = containment_null(e_a, e_b) if e_a > 0.0 and e_b > 0.0 else None
    return OverlapSummary(
        config_a=config_a, config_b=config_b,
        pair_values=tuple(values), mean=mean, std=std, n_pairs=len(values),
        indep_null=indep, containment_null=contain,
    )


def cross_seed_baseline(
    runs: Mapping[int, ErrorMask],
    config: str = "a",
) -> OverlapSummary:
    """Within-configuration stability: unordered distinct seed pairs only."""
    if len(runs) < 2:
        raise ValueError("cross-seed baseline needs at least 2 seeds")
    seeds = sorted(runs)
    values = [
        jaccard(runs[sa], runs[sb])
        for i, sa in enumerate(seeds)
        for sb in seeds[i + 1:]
    ]
    mean, std = _summary_stats(values)
    e = _null_rates([runs[s] for s in seeds])
    indep = independence_null(e, e) if e > 0.0 else None
    contain = containment_null(e, e) if e > 0.0 else None
    return OverlapSummary(
        config_a=config, config_b=config,
        pair_values=tuple(values), mean=mean, std=std, n_pairs=len(values),
        indep_null=indep, containment_null=contain,
    )


def bootstrap_ci(
    pair_values: Sequence[float],
    n_resamples: int = 10_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap 95% CI of the mean of ``pair_values``.

    Values are resampled i.i.d. with replacement; the interval is the 2.5th
    and 97.5th percentile of resampled means. Sorting the input first makes
    the result independent of the order the pairs were enumerated in.
    """
    values = np.sort(np.asarray(pair_values, dtype=np.float64))
    if values.size < 2:
        raise ValueError("bootstrap needs at least 2 values")
    if n_resamples < 1000:
        raise ValueError(f"n_resamples must be >= 1000, got {n_resamples}")
    if values[0] == values[-1]:
        # every resample mean equals the common value exactly
        return float(values[0]), float(values[0])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_resamples, values.size))
    means = values[idx].mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(lo), float(hi)
