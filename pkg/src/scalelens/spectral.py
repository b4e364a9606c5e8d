"""Spectral capacity pipeline: data eigenspectrum, decay exponent, and the
mapping between spectral decay, rank efficiency, and the scaling exponent.

The chain: eigenvalues of the data covariance decay as lambda_k ~ k^-beta; a
model whose effective representational rank grows as K(N) ~ N^gamma keeps the
top K eigenmodes, leaving a residual tail loss ~ K^(1-beta)/(beta-1); together
these give error ~ N^-alpha with alpha = gamma * (beta - 1). Each step is
exposed separately so beta can be measured, alpha predicted, and gamma
recovered from a measured alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_FIT_RANGE = (10, 500)
DIRECT_EIGH_MAX_FEATURES = 4096

# Width-counting estimate of the rank efficiency exponent for plain conv
# nets: parameters grow ~ width^2 while representable rank grows ~ width,
# so K ~ N^0.5. Measured values from real architectures come in lower.
NAIVE_WIDTH_COUNTING_GAMMA = 0.5

NEGATIVE_EIGENVALUE_TOL = 1e-10


@dataclass(frozen=True)
class EigenSpectrum:
    """Sample-covariance eigenvalues in descending order."""

    eigenvalues: np.ndarray
    n_samples: int
    n_features: int
    centering: bool = True

    def __post_init__(self) -> None:
        vals = np.asarray(self.eigenvalues, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("eigenvalues must be a 1-d sequence")
        if vals.size and (np.diff(vals) > 0).any():
            raise ValueError("eigenvalues must be in descending order")
        if vals.size:
            floor = -NEGATIVE_EIGENVALUE_TOL * max(float(vals.max()), 0.0)
            if (vals < floor).any():
                raise ValueError("eigenvalues contain significantly negative values")
            vals = np.maximum(vals, 0.0)
        vals.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)

    def __len__(self) -> int:
        return int(self.eigenvalues.size)


@dataclass(frozen=True)
class SpectralFit:
    """Log-log fit of eigenvalue decay over an index window."""

    beta: float
    beta_std: float
    r_squared: float
    k_min: int
    k_max: int
    n_points: int


@dataclass(frozen=True)
class CapacityModel:
    """Rank efficiency exponent, optionally with the width-counting inputs."""

    gamma: float
    depth: int | None = None
    resolution: int | None = None
    width_param: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")


def covariance_spectrum(
    data_matrix: np.ndarray,
    direct_max_features: int = DIRECT_EIGH_MAX_FEATURES,
) -> EigenSpectrum:
    """Eigenvalues of the sample covariance of rows of ``data_matrix``.

    Columns are mean-centered and the covariance uses the n_samples - 1
    divisor. Narrow matrices go through a symmetric eigendecomposition of the
    feature-space covariance; wider ones through singular values of the
    centered matrix (sigma^2 / (n - 1)), which avoids forming a huge
    covariance. Tiny negative eigenvalues from finite precision are clamped
    to zero.
    """
    x = np.asarray(data_matrix, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"data matrix must be 2-d, got shape {x.shape}")
    n_samples, n_features = x.shape
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    if not np.isfinite(x).all():
        raise ValueError("data matrix contains non-finite entries")

    centered = x - x.mean(axis=0)
    if n_features <= direct_max_features:
        cov = (centered.T @ centered) / (n_samples - 1)
        vals = np.linalg.eigvalsh(cov)[::-1]
    else:
        sv = np.linalg.svd(centered, compute_uv=False)
        vals = (sv ** 2) / (n_samples - 1)
    vals = vals[: min(n_samples, n_features)]
    return EigenSpectrum(
        eigenvalues=np.sort(vals)[::-1],
        n_samples=n_samples,
        n_features=n_features,
        centering=True,
    )


def fit_spectral_decay(
    spectrum: EigenSpectrum,
    k_min: int = DEFAULT_FIT_RANGE[0],
    k_max: int = DEFAULT_FIT_RANGE[1],
) -> SpectralFit:
    """OLS of ln(lambda_k) on ln(k) for k in [k_min, k_max] (1-based, inclusive).

    Returns the negated slope as the decay exponent, its OLS standard error,
    and the R^2 of the regression.
    """
    if k_min < 1 or k_max <= k_min:
        raise ValueError(f"need 1 <= k_min < k_max, got [{k_min}, {k_max}]")
    if k_max > len(spectrum):
        raise ValueError(
            f"k_max = {k_max} exceeds spectrum length {len(spectrum)}")
    n_points = k_max - k_min + 1
    if n_points < 3:
        raise ValueError("fit range must contain at least 3 eigenvalues")
    lam = spectrum.eigenvalues[k_min - 1: k_max]
    if (lam <= 0.0).any():
        raise ValueError(
            f"zero eigenvalue inside fit range [{k_min}, {k_max}]")
    x = np.log(np.arange(k_min, k_max + 1, dtype=np.float64))
    y = np.log(lam)
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean()) / sxx)
    intercept = y.mean() - slope * x.mean()
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    std_err = np.sqrt(ss_res / (n_points - 2) / sxx) if n_points > 2 else 0.0
    return SpectralFit(
        beta=-slope,
        beta_std=float(std_err),
        r_squared=r_squared,
        k_min=k_min,
        k_max=k_max,
        n_points=n_points,
    )


def predict_alpha(beta: float, gamma: float) -> float:
    """Scaling exponent implied by spectral decay beta and rank efficiency gamma."""
    if beta <= 1.0:
        raise ValueError(
            f"beta must exceed 1 (the residual tail sum diverges otherwise), "
            f"got {beta}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return gamma * (beta - 1.0)


def implied_gamma(alpha_measured: float, beta: float) -> float:
    """Rank efficiency required for a measured scaling exponent at given beta."""
    if beta <= 1.0:
        raise ValueError(f"beta must exceed 1, got {beta}")
    if alpha_measured <= 0.0:
        raise ValueError(f"measured alpha must be positive, got {alpha_measured}")
    return alpha_measured / (beta - 1.0)


@dataclass(frozen=True)
class ResidualLoss:
    """Tail loss beyond a capacity cutoff, labeled by how it was evaluated."""

    value: float
    form: str  # "analytic" or "empirical"
    capacity_k: float


def residual_loss(
    spectrum_or_beta: EigenSpectrum | float,
    capacity_k: float,
) -> ResidualLoss:
    """Loss contributed by eigenmodes beyond rank ``capacity_k``.

    Given a decay exponent, uses the closed form K^(1-beta)/(beta-1) (the
    integral approximation of the tail sum). Given an actual spectrum, sums
    the eigenvalues with index k > K.
    """
    if capacity_k < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity_k}")
    if isinstance(spectrum_or_beta, EigenSpectrum):
        spectrum = spectrum_or_beta
        k = int(capacity_k)
        if k > len(spectrum):
            raise ValueError(
                f"capacity {k} exceeds spectrum length {len(spectrum)}")
        value = float(spectrum.eigenvalues[k:].sum())
        return ResidualLoss(value=value, form="empirical", capacity_k=capacity_k)
    beta = float(spectrum_or_beta)
    if beta <= 1.0:
        raise ValueError(
            f"beta must exceed 1 for a convergent tail, got {beta}")
    value = capacity_k ** (1.0 - beta) / (beta - 1.0)
    return ResidualLoss(value=value, form="analytic", capacity_k=capacity_k)
