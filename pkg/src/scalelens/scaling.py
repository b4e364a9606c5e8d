"""Power-law scaling fits of a metric against parameter count.

All fits are ordinary least squares in natural-log space. The reported
exponent is the negated slope, so a metric that decreases with size yields a
positive exponent. The pooled fit uses one seed-mean point per configuration;
per-seed fits supply the cross-seed uncertainty (mean, sample std, t-based
95% CI).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import stats

Metric = Literal["error_rate", "train_loss"]

SATURATED_THRESHOLD = 0.01
DIMINISHING_THRESHOLD = 0.05


@dataclass(frozen=True)
class ScalingPoint:
    """One (model size, metric) observation from a single trained run."""

    n_params: int
    metric_value: float
    seed: int
    config_id: str

    def __post_init__(self) -> None:
        if self.n_params <= 0:
            raise ValueError(f"n_params must be positive, got {self.n_params}")
        if not self.metric_value > 0:
            raise ValueError(
                f"metric_value must be positive (log is taken), got "
                f"{self.metric_value} for config {self.config_id!r}")


@dataclass(frozen=True)
class ScalingFit:
    alpha: float
    intercept: float
    r_squared: float
    n_points: int
    metric: Metric
    per_seed_alphas: tuple[float, ...] | None = None
    alpha_mean: float | None = None
    alpha_std: float | None = None
    alpha_ci95: tuple[float, float] | None = None
    warning: str | None = None


@dataclass(frozen=True)
class LocalExponent:
    """Finite-difference log-log slope between two adjacent model sizes."""

    config_lo: str
    config_hi: str
    n_lo: int
    n_hi: int
    alpha_local: float
    per_seed_values: tuple[float, ...] | None = None


def _ols_loglog(n_params: np.ndarray, metric: np.ndarray) -> tuple[float, float, float]:
    """Fit ln(metric) = intercept - alpha * ln(n); return (alpha, intercept, R^2)."""
    x = np.log(n_params)
    y = np.log(metric)
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate fit: all points share one parameter count")
    xm = x - x.mean()
    slope = float(xm @ (y - y.mean()) / (xm @ xm))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return -slope, intercept, r_squared


def fit_power_law(points: Iterable[ScalingPoint], metric: Metric = "error_rate") -> ScalingFit:
    """Fit metric ~ n_params^-alpha.

    The pooled exponent and R^2 come from an OLS over seed-mean points (the
    arithmetic mean of the metric per configuration). When every seed covers
    every configuration, a separate OLS per seed yields the per-seed exponent
    vector, its mean and sample std, and a t-interval
    mean +/- t_{0.975, n_seeds-1} * std / sqrt(n_seeds); otherwise the
    per-seed fields are absent and a warning says why.
    """
    points = list(points)
    if metric not in ("error_rate", "train_loss"):
        raise ValueError(f"unknown metric {metric!r}")
    configs: dict[str, dict[int, float]] = {}
    sizes: dict[str, int] = {}
    for p in points:
        if p.config_id in sizes and sizes[p.config_id] != p.n_params:
            raise ValueError(
                f"config {p.config_id!r} appears with two parameter counts "
                f"({sizes[p.config_id]} and {p.n_params})")
        sizes[p.config_id] = p.n_params
        by_seed = configs.setdefault(p.config_id, {})
        if p.seed in by_seed:
            raise ValueError(
                f"duplicate point for config {p.config_id!r} seed {p.seed}")
        by_seed[p.seed] = p.metric_value
    if len({n for n in sizes.values()}) < 3:
        raise ValueError(
            f"need at least 3 distinct parameter counts, got {len(set(sizes.values()))}")

    order = sorted(sizes, key=lambda c: sizes[c])
    n = np.array([sizes[c] for c in order], dtype=np.float64)
    seed_means = np.array(
        [float(np.mean(list(configs[c].values()))) for c in order])
    alpha, intercept, r_squared = _ols_loglog(n, seed_means)

    seed_sets = [set(configs[c]) for c in order]
    common = set.intersection(*seed_sets)
    all_seeds = set.union(*seed_sets)
    per_seed_alphas = None
    alpha_mean = alpha_std = None
    ci = None
    warning = None
    if common == all_seeds and len(common) >= 1:
        per_seed = []
        for seed in sorted(common):
            y = np.array([configs[c][seed] for c in order])
            a, _, _ = _ols_loglog(n, y)
            per_seed.append(a)
        per_seed_alphas = tuple(per_seed)
        alpha_mean = float(np.mean(per_seed))
        if len(per_seed) >= 2:
            alpha_std = float(np.std(per_seed, ddof=1))
            half = float(stats.t.ppf(0.975, len(per_seed) - 1)
                         * alpha_std / math.sqrt(len(per_seed)))
            ci = (alpha_mean - half, alpha_mean + half)
    else:
        warning = ("per-seed exponents omitted: seeds do not cover every "
                   "configuration")

    return ScalingFit(
        alpha=alpha,
        intercept=intercept,
        r_squared=r_squared,
        n_points=len(order),
        metric=metric,
        per_seed_alphas=per_seed_alphas,
        alpha_mean=alpha_mean,
        alpha_std=alpha_std,
        alpha_ci95=ci,
        warning=warning,
    )


def compare_exponents(fit_a: ScalingFit, fit_b: ScalingFit) -> tuple[float, float, int]:
    """Pooled-variance two-sample t-test on the per-seed exponent vectors.

    Returns (t statistic, two-sided p-value, degrees of freedom).
    """
    for fit, name in ((fit_a, "fit_a"), (fit_b, "fit_b")):
        if fit.per_seed_alphas is None or len(fit.per_seed_alphas) < 2:
            raise ValueError(f"{name} lacks per-seed exponents (need >= 2 seeds)")
    a = np.asarray(fit_a.per_seed_alphas)
    b = np.asarray(fit_b.per_seed_alphas)
    dof = len(a) + len(b) - 2
    if np.ptp(a) == 0.0 and np.ptp(b) == 0.0:
        # zero pooled variance: degenerate, decide by the means alone
        if a.mean() == b.mean():
            return 0.0, 1.0, dof
        return math.copysign(math.inf, a.mean() - b.mean()), 0.0, dof
    t_stat, p_value = stats.ttest_ind(a, b, equal_var=True)
    return float(t_stat), float(p_value), dof


def local_exponents(points: Iterable[ScalingPoint]) -> list[LocalExponent]:
    """Finite-difference exponent between each adjacent pair of sizes.

    Uses the seed-mean metric of each configuration. When both configurations
    were run with the same set of seeds (at least two), a per-seed slope
    vector is attached as well.
    """
    configs: dict[str, dict[int, float]] = {}
    sizes: dict[str, int] = {}
    for p in points:
        if p.config_id in sizes and sizes[p.config_id] != p.n_params:
            raise ValueError(
                f"config {p.config_id!r} appears with two parameter counts")
        sizes[p.config_id] = p.n_params
        configs.setdefault(p.config_id, {})[p.seed] = p.metric_value
    if len(sizes) < 2:
        raise ValueError("need at least 2 configurations")
    counts = sorted(sizes.values())
    if len(set(counts)) != len(counts):
        raise ValueError("configurations tie in n_params; ordering is ambiguous")

    order = sorted(sizes, key=lambda c: sizes[c])
    out = []
    for lo, hi in zip(order, order[1:]):
        n_lo, n_hi = sizes[lo], sizes[hi]
        m_lo = float(np.mean(list(configs[lo].values())))
        m_hi = float(np.mean(list(configs[hi].values())))
        dlog_n = math.log(n_hi) - math.log(n_lo)
        alpha_local = -(math.log(m_hi) - math.log(m_lo)) / dlog_n
        per_seed = None
        shared = sorted(set(configs[lo]) & set(configs[hi]))
        if shared == sorted(set(configs[lo]) | set(configs[hi])):
            per_seed = tuple(
                -(math.log(configs[hi][s]) - math.log(configs[lo][s])) / dlog_n
                for s in shared)
        out.append(LocalExponent(
            config_lo=lo, config_hi=hi, n_lo=n_lo, n_hi=n_hi,
            alpha_local=alpha_local, per_seed_values=per_seed))
    return out


def classify_saturation(
    locals_: Sequence[LocalExponent],
    saturated_threshold: float = SATURATED_THRESHOLD,
    diminishing_threshold: float = DIMINISHING_THRESHOLD,
) -> list[str]:
    """Label each size transition as scaling, diminishing, or saturated.

    A value exactly at a threshold takes the lower (more pessimistic) label.
    """
    if not locals_:
        raise ValueError("no local exponents to classify")
    if not saturated_threshold < diminishing_threshold:
        raise ValueError("saturated threshold must be below diminishing threshold")
    labels = []
    for le in locals_:
        if le.alpha_local <= saturated_threshold:
            labels.append("saturated")
        elif le.alpha_local <= diminishing_threshold:
            labels.append("diminishing")
        else:
            labels.append("scaling")
    return labels


def scaling_points_from_runs(records, manifest, metric: Metric = "error_rate") -> list[ScalingPoint]:
    """Build fit inputs from validated run records.

    ``error_rate`` uses the derived error mask; ``train_loss`` uses the
    record's final training loss and skips records that lack one.
    """
    from .records import error_mask

    points = []
    for record in records:
        if metric == "error_rate":
            value = error_mask(record, manifest).error_rate
        elif metric == "train_loss":
            if record.final_train_loss is None:
                continue
            value = record.final_train_loss
        else:
            raise ValueError(f"unknown metric {metric!r}")
        points.append(ScalingPoint(
            n_params=record.n_params,
            metric_value=value,
            seed=record.seed,
            config_id=record.config_id,
        ))
    return points
