"""Deterministic synthetic-data generators with known ground truth.

Each generator plants a parameter (scaling exponent, pairwise overlap,
calibration profile, spectral decay) that the corresponding analysis must
recover, which makes them independent oracles for the analysis code. The
corpus-level generators emit ordinary manifests and run records so tests can
exercise the full ingestion path rather than internal shortcuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .records import DatasetManifest, ErrorMask, RunRecord
from .scaling import ScalingPoint

SYNTH_KINDS = ("power_law_curve", "overlap_masks", "calibration_profile",
               "planted_spectrum", "binomial_classes")


@dataclass(frozen=True)
class SynthSpec:
    """A generator invocation: kind, kind-specific parameters, mandatory seed."""

    kind: str
    params: Mapping
    seed: int

    def __post_init__(self) -> None:
        if self.kind not in SYNTH_KINDS:
            raise ValueError(
                f"unknown synth kind {self.kind!r}; expected one of {SYNTH_KINDS}")


def gen_power_law_runs(
    alpha: float,
    intercept: float,
    noise_sigma: float,
    sizes: Sequence[int],
    n_seeds: int,
    seed: int = 0,
) -> list[ScalingPoint]:
    """Scaling points following metric = exp(intercept) * N^-alpha * exp(eps).

    eps is i.i.d. Normal(0, noise_sigma^2) per point, so with noise_sigma = 0
    the points lie exactly on the generating power law.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if len(set(sizes)) != len(sizes):
        raise ValueError("sizes must be distinct")
    if any(s <= 0 for s in sizes):
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    points = []
    for size in sizes:
        for s in range(n_seeds):
            eps = rng.normal(0.0, noise_sigma) if noise_sigma > 0 else 0.0
            value = float(np.exp(intercept - alpha * np.log(size) + eps))
            points.append(ScalingPoint(
                n_params=int(size), metric_value=value, seed=s,
                config_id=f"n{size}"))
    return points


def gen_overlap_masks(
    n_test: int,
    e_a: float,
    e_b: float,
    target_jaccard: float,
    seed: int = 0,
) -> tuple[ErrorMask, ErrorMask]:
    """Two error masks whose Jaccard matches the target within set rounding.

    Set sizes are the nearest integers to e*n (Python banker's rounding); the
    intersection size is the nearest integer to J*(|A|+|B|)/(1+J), which
    inverts J = I/(|A|+|B|-I). Membership is a seeded random permutation.
    """
    if n_test <= 0:
        raise ValueError("n_test must be positive")
    if not (0.0 <= e_a <= 1.0 and 0.0 <= e_b <= 1.0):
        raise ValueError("error rates must lie in [0, 1]")
    if not 0.0 <= target_jaccard <= 1.0:
        raise ValueError("target Jaccard must lie in [0, 1]")
    a = round(e_a * n_test)
    b = round(e_b * n_test)
    inter = round(target_jaccard * (a + b) / (1.0 + target_jaccard))
    if inter > min(a, b) or a + b - inter > n_test:
        raise ValueError(
            f"target Jaccard {target_jaccard} infeasible for |A|={a}, |B|={b}, "
            f"n={n_test}")
    rng = np.random.default_rng(seed)
    indices = rng.permutation(n_test)
    bits_a = np.zeros(n_test, dtype=bool)
    bits_b = np.zeros(n_test, dtype=bool)
    bits_a[indices[:a]] = True
    bits_b[indices[:inter]] = True
    bits_b[indices[a:a + b - inter]] = True
    return ErrorMask(bits=bits_a), ErrorMask(bits=bits_b)


def gen_calibration_profile(
    n_test: int,
    bin_accuracies: Sequence[float],
    bin_confidences: Sequence[float],
    bin_weights: Sequence[float],
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Confidences and correctness flags realizing a planted reliability profile.

    Sample counts per profile bin are allocated proportionally to the weights
    (largest-remainder rounding), each sample takes its bin's confidence
    verbatim, and correctness is Bernoulli(bin accuracy). The expected
    calibration error of the output is sum_b w_b |acc_b - conf_b|.

    Returns (confidences, correct) arrays of length ``n_test``.
    """
    accs = np.asarray(bin_accuracies, dtype=np.float64)
    confs = np.asarray(bin_confidences, dtype=np.float64)
    weights = np.asarray(bin_weights, dtype=np.float64)
    if not (accs.shape == confs.shape == weights.shape) or accs.ndim != 1:
        raise ValueError("profile sequences must be 1-d with equal length")
    if ((accs < 0) | (accs > 1)).any() or ((confs < 0) | (confs > 1)).any():
        raise ValueError("accuracies and confidences must lie in [0, 1]")
    if (weights < 0).any() or not np.isclose(weights.sum(), 1.0, atol=1e-9):
        raise ValueError("weights must be nonnegative and sum to 1")

    exact = weights * n_test
    counts = np.floor(exact).astype(int)
    remainder = n_test - counts.sum()
    if remainder:
        order = np.argsort(exact - np.floor(exact))[::-1]
        counts[order[:remainder]] += 1

    rng = np.random.default_rng(seed)
    confidences = np.empty(n_test, dtype=np.float64)
    correct = np.empty(n_test, dtype=bool)
    pos = 0
    for acc, conf, count in zip(accs, confs, counts):
        confidences[pos:pos + count] = conf
        correct[pos:pos + count] = rng.random(count) < acc
        pos += count
    perm = rng.permutation(n_test)
    return confidences[perm], correct[perm]


def gen_planted_spectrum(
    beta: float,
    n_features: int,
    n_samples: int,
    seed: int = 0,
) -> np.ndarray:
    """Gaussian data whose covariance eigenvalues are k^-beta, k = 1..n_features."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    rng = np.random.default_rng(seed)
    scales = np.arange(1, n_features + 1, dtype=np.float64) ** (-beta / 2.0)
    return rng.standard_normal((n_samples, n_features)) * scales


# --------------------------------------------------------------------------
# Corpus-level generators: wrap planted data in full manifest/record form.
# --------------------------------------------------------------------------

def make_balanced_manifest(
    n_test: int,
    n_classes: int,
    dataset_id: str = "synth",
    seed: int = 0,
) -> DatasetManifest:
    """A manifest with equal class support in seeded shuffled order."""
    if n_test % n_classes != 0:
        raise ValueError(
            f"n_test = {n_test} must be a multiple of n_classes = {n_classes}")
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_test // n_classes)
    rng = np.random.default_rng(seed)
    rng.shuffle(labels)
    return DatasetManifest(
        dataset_id=dataset_id, n_test=n_test, n_classes=n_classes,
        true_labels=labels)


def record_from_mask(
    bits: np.ndarray,
    manifest: DatasetManifest,
    arch: str,
    config_id: str,
    width_param: float,
    n_params: int,
    seed: int,
    rng: np.random.Generator,
    confidences: np.ndarray | None = None,
    final_train_loss: float | None = None,
) -> RunRecord:
    """A record whose error mask equals ``bits``.

    Wrong predictions get a seeded random incorrect label. When no explicit
    confidences are supplied, correct predictions draw from U(0.55, 0.95) and
    incorrect ones from U(0.15, 0.55), a crude but valid confidence profile.
    """
    bits = np.asarray(bits, dtype=bool)
    preds = manifest.true_labels.copy()
    wrong = np.flatnonzero(bits)
    offsets = rng.integers(1, manifest.n_classes, size=wrong.size)
    preds[wrong] = (preds[wrong] + offsets) % manifest.n_classes
    if confidences is None:
        confidences = np.where(
            bits,
            rng.uniform(0.15, 0.55, size=manifest.n_test),
            rng.uniform(0.55, 0.95, size=manifest.n_test))
    return RunRecord(
        dataset_id=manifest.dataset_id, arch=arch, config_id=config_id,
        width_param=width_param, n_params=n_params, seed=seed,
        pred_labels=preds, confidences=confidences,
        final_train_loss=final_train_loss,
    )


def gen_scaling_corpus(
    alpha: float,
    intercept: float,
    noise_sigma: float,
    sizes: Sequence[int],
    n_seeds: int,
    seed: int = 0,
    n_test: int = 10_000,
    n_classes: int = 100,
    arch: str = "synth",
    with_train_loss: bool = True,
) -> tuple[DatasetManifest, list[RunRecord]]:
    """A full corpus whose error rates follow a planted power law in size.

    Each run's realized error rate is the planted rate quantized to a whole
    number of errors out of ``n_test``; training losses, when emitted, follow
    the same law scaled by a fixed factor so loss fits see the same exponent.
    """
    manifest = make_balanced_manifest(n_test, n_classes, seed=seed)
    points = gen_power_law_runs(alpha, intercept, noise_sigma, sizes, n_seeds,
                                seed=seed + 1)
    rng = np.random.default_rng(seed + 2)
    records = []
    for point in points:
        rate = point.metric_value
        if not 0.0 < rate < 1.0:
            raise ValueError(
                f"planted error rate {rate} outside (0, 1); adjust intercept")
        n_errors = max(1, round(rate * n_test))
        bits = np.zeros(n_test, dtype=bool)
        bits[rng.choice(n_test, size=n_errors, replace=False)] = True
        records.append(record_from_mask(
            bits, manifest, arch=arch, config_id=point.config_id,
            width_param=float(np.sqrt(point.n_params)), n_params=point.n_params,
            seed=point.seed, rng=rng,
            final_train_loss=0.5 * rate if with_train_loss else None))
    return manifest, records


def expected_shared_core_jaccard(n: int, size_a: int, size_b: int, core: int) -> float:
    """Expected pairwise Jaccard of the shared-core mask construction."""
    inter = core + (size_a - core) * (size_b - core) / (n - core)
    return inter / (size_a + size_b - inter)


def _solve_core_size(n: int, size_a: int, size_b: int, target: float) -> int:
    """Core size whose expected cross-pair Jaccard hits the target."""
    lo_j = expected_shared_core_jaccard(n, size_a, size_b, 0)
    hi_j = expected_shared_core_jaccard(n, size_a, size_b, min(size_a, size_b))
    if not lo_j <= target <= hi_j:
        raise ValueError(
            f"target Jaccard {target} outside achievable range "
            f"[{lo_j:.4f}, {hi_j:.4f}] for these error rates")
    f = lambda h: expected_shared_core_jaccard(n, size_a, size_b, h) - target
    return round(brentq(f, 0, min(size_a, size_b)))


def gen_overlap_corpus(
    e_a: float,
    e_b: float,
    target_jaccard: float,
    n_seeds: int = 5,
    seed: int = 0,
    n_test: int = 10_000,
    n_classes: int = 100,
) -> tuple[DatasetManifest, list[RunRecord]]:
    """Two configurations whose cross-configuration Jaccard is planted.

    Every run's error set is a fixed shared core plus run-specific random
    extras, so the expected Jaccard between any run of config "small" and any
    run of config "large" equals the target (to the construction's sampling
    noise). The core size is solved from the expectation
    I = h + (|A|-h)(|B|-h)/(n-h), J = I/(|A|+|B|-I).
    """
    size_a = round(e_a * n_test)
    size_b = round(e_b * n_test)
    if min(size_a, size_b) <= 0:
        raise ValueError("both error rates must produce nonempty error sets")
    core = _solve_core_size(n_test, size_a, size_b, target_jaccard)

    manifest = make_balanced_manifest(n_test, n_classes, seed=seed)
    rng = np.random.default_rng(seed + 1)
    core_idx = rng.choice(n_test, size=core, replace=False)
    non_core = np.setdiff1d(np.arange(n_test), core_idx, assume_unique=False)

    records = []
    for config_id, size, n_params in (("small", size_a, 25_000),
                                      ("large", size_b, 5_000_000)):
        for s in range(n_seeds):
            bits = np.zeros(n_test, dtype=bool)
            bits[core_idx] = True
            extras = rng.choice(non_core, size=size - core, replace=False)
            bits[extras] = True
            records.append(record_from_mask(
                bits, manifest, arch="synth", config_id=config_id,
                width_param=1.0, n_params=n_params, seed=s, rng=rng))
    return manifest, records


def gen_calibration_corpus(
    bin_accuracies: Sequence[float],
    bin_confidences: Sequence[float],
    bin_weights: Sequence[float],
    seed: int = 0,
    n_test: int = 10_000,
    n_classes: int = 100,
    config_id: str = "cal",
) -> tuple[DatasetManifest, list[RunRecord]]:
    """A one-run corpus realizing a planted reliability profile."""
    manifest = make_balanced_manifest(n_test, n_classes, seed=seed)
    confidences, correct = gen_calibration_profile(
        n_test, bin_accuracies, bin_confidences, bin_weights, seed=seed + 1)
    rng = np.random.default_rng(seed + 2)
    record = record_from_mask(
        ~correct, manifest, arch="synth", config_id=config_id,
        width_param=1.0, n_params=1_000_000, seed=0, rng=rng,
        confidences=confidences)
    return manifest, [record]


def gen_binomial_class_corpus(
    p: float,
    n_classes: int = 100,
    n_per_class: int = 100,
    seed: int = 0,
    config_id: str = "binom",
) -> tuple[DatasetManifest, list[RunRecord]]:
    """A one-run corpus whose per-class accuracies are Binomial(n_per_class, p)/n."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    n_test = n_classes * n_per_class
    manifest = make_balanced_manifest(n_test, n_classes, seed=seed)
    rng = np.random.default_rng(seed + 1)
    hits = rng.binomial(n_per_class, p, size=n_classes)
    bits = np.zeros(n_test, dtype=bool)
    for cls in range(n_classes):
        members = np.flatnonzero(manifest.true_labels == cls)
        wrong = rng.choice(members, size=n_per_class - hits[cls], replace=False)
        bits[wrong] = True
    record = record_from_mask(
        bits, manifest, arch="synth", config_id=config_id, width_param=1.0,
        n_params=1_000_000, seed=0, rng=rng)
    return manifest, [record]
