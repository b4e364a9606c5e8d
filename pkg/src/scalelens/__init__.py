"""Analysis toolkit for per-run model evaluation records.

Covers power-law scaling fits with per-seed uncertainty, local exponents and
saturation labels, error-set Jaccard overlap with analytic null models and
bootstrap CIs, per-class fairness metrics with a binomial Monte-Carlo null,
calibration diagnostics, and the spectral capacity pipeline relating data
eigenvalue decay to the scaling exponent.
"""

__version__ = "0.1.0"

from .calibration import CalibrationSummary, confidence_split, ece
from .fairness import (FairnessSummary, binomial_null_gini, bottom_top_k,
                       fairness_summary, gini, gini_difference_ci)
from .overlap import (OverlapSummary, bootstrap_ci, containment_null,
                      cross_config_overlap, cross_seed_baseline,
                      independence_null, jaccard)
from .records import (CorpusError, DatasetManifest, ErrorMask,
                      PerClassAccuracy, RunRecord, accuracy, error_mask,
                      group_runs, load_corpus, load_manifest,
                      per_class_accuracy, save_manifest, save_records)
from .report import ReportBundle, run_report
from .scaling import (LocalExponent, ScalingFit, ScalingPoint,
                      classify_saturation, compare_exponents, fit_power_law,
                      local_exponents, scaling_points_from_runs)
from .spectral import (CapacityModel, EigenSpectrum, ResidualLoss,
                       SpectralFit, covariance_spectrum, fit_spectral_decay,
                       implied_gamma, predict_alpha, residual_loss,
                       NAIVE_WIDTH_COUNTING_GAMMA)
from .synth import (SynthSpec, gen_calibration_profile, gen_overlap_masks,
                    gen_planted_spectrum, gen_power_law_runs)

__all__ = [name for name in dir() if not name.startswith("_")]
