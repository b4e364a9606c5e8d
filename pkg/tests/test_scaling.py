import math

import numpy as np
import pytest

from scalelens import (ScalingPoint, classify_saturation, compare_exponents,
                       fit_power_law, local_exponents)
from scalelens.synth import gen_power_law_runs

from golden_data import MOBILENETV2, SCALECNN, error_points


def exact_points(alpha, sizes, seeds=(0,), scale=1.0):
    return [ScalingPoint(n_params=n, metric_value=scale * n ** -alpha,
                         seed=s, config_id=f"n{n}")
            for n in sizes for s in seeds]


class TestFitPowerLaw:
    def test_scalecnn_golden(self):
        fit = fit_power_law(error_points(SCALECNN))
        assert fit.alpha == pytest.approx(0.156, abs=0.015)
        assert fit.r_squared == pytest.approx(0.965, abs=0.02)

    def test_mobilenet_golden(self):
        fit = fit_power_law(error_points(MOBILENETV2))
        assert fit.alpha == pytest.approx(0.106, abs=0.015)
        assert fit.r_squared == pytest.approx(0.914, abs=0.03)

    def test_exact_power_law_recovery(self):
        fit = fit_power_law(exact_points(0.2, [10, 100, 1000, 10_000]))
        assert fit.alpha == pytest.approx(0.2, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_generator_recovery_with_noise(self):
        points = gen_power_law_runs(
            alpha=0.15, intercept=1.0, noise_sigma=0.01,
            sizes=[10_000 * 4 ** k for k in range(8)], n_seeds=5, seed=11)
        fit = fit_power_law(points)
        stderr = fit.alpha_std / math.sqrt(len(fit.per_seed_alphas))
        assert abs(fit.alpha_mean - 0.15) < 3 * stderr

    def test_per_seed_fields_absent_when_seeds_not_aligned(self):
        points = exact_points(0.2, [10, 100, 1000], seeds=(0, 1))
        points = [p for p in points if not (p.config_id == "n10" and p.seed == 1)]
        fit = fit_power_law(points)
        assert fit.per_seed_alphas is None
        assert "seeds do not cover" in fit.warning

    def test_requires_three_sizes(self):
        with pytest.raises(ValueError, match="3 distinct"):
            fit_power_law(exact_points(0.2, [10, 100]))

    def test_rejects_nonpositive_metric(self):
        with pytest.raises(ValueError, match="positive"):
            ScalingPoint(n_params=10, metric_value=0.0, seed=0, config_id="c")

    def test_ci_contains_mean(self):
        points = gen_power_law_runs(0.3, 0.0, 0.02, [10, 100, 1000, 10_000],
                                    n_seeds=5, seed=2)
        fit = fit_power_law(points)
        lo, hi = fit.alpha_ci95
        assert lo < fit.alpha_mean < hi
        half = (hi - lo) / 2
        from scipy import stats
        expected = stats.t.ppf(0.975, 4) * fit.alpha_std / math.sqrt(5)
        assert half == pytest.approx(expected, rel=1e-9)


class TestCompareExponents:
    def test_identical_vectors(self):
        points = gen_power_law_runs(0.2, 0.0, 0.01, [10, 100, 1000], 5, seed=1)
        fit = fit_power_law(points)
        t, p, dof = compare_exponents(fit, fit)
        assert t == 0.0
        assert p == pytest.approx(1.0)
        assert dof == 8

    def test_hand_computed_t(self):
        # pooled-variance formula computed by hand:
        # ssq_a = 1e-5, ssq_b = 2.5e-6, sp = sqrt(1.5625e-6), n = 5 + 5
        # t = 0.05 / (sp * sqrt(2/5)) = 63.2455532...
        fit_a = _fit_with_seeds((0.154, 0.155, 0.156, 0.157, 0.158))
        fit_b = _fit_with_seeds((0.105, 0.1055, 0.106, 0.1065, 0.107))
        t, p, dof = compare_exponents(fit_a, fit_b)
        assert t == pytest.approx(63.245553203367514, rel=1e-9)
        assert p == pytest.approx(4.343643840504297e-12, rel=1e-6)
        assert dof == 8

    def test_well_separated_groups_highly_significant(self):
        fit_a = _fit_with_seeds(tuple(0.156 + d for d in
                                      (-0.002, -0.001, 0.0, 0.001, 0.002)))
        fit_b = _fit_with_seeds(tuple(0.106 + d for d in
                                      (-0.001, -0.0005, 0.0, 0.0005, 0.001)))
        _, p, _ = compare_exponents(fit_a, fit_b)
        assert p < 1e-6

    def test_requires_per_seed(self):
        fit = fit_power_law(exact_points(0.2, [10, 100, 1000]))
        with pytest.raises(ValueError, match="per-seed"):
            compare_exponents(fit, fit)


def _fit_with_seeds(alphas):
    from scalelens.scaling import ScalingFit
    return ScalingFit(alpha=float(np.mean(alphas)), intercept=0.0,
                      r_squared=1.0, n_points=3, metric="error_rate",
                      per_seed_alphas=alphas,
                      alpha_mean=float(np.mean(alphas)),
                      alpha_std=float(np.std(alphas, ddof=1)))


class TestLocalExponents:
    def test_mobilenet_saturation_transitions(self):
        locs = local_exponents(error_points(MOBILENETV2))
        by_pair = {(le.config_lo, le.config_hi): le.alpha_local for le in locs}
        assert by_pair[("m1.00", "m1.50")] == pytest.approx(0.094, abs=0.002)
        assert by_pair[("m1.50", "m2.00")] == pytest.approx(0.040, abs=0.002)
        assert by_pair[("m2.00", "m3.00")] == pytest.approx(0.006, abs=0.002)

    def test_equal_metric_gives_zero(self):
        points = [ScalingPoint(10, 0.5, 0, "a"), ScalingPoint(100, 0.5, 0, "b")]
        locs = local_exponents(points)
        assert locs[0].alpha_local == 0.0

    def test_noise_free_law_matches_global_alpha_everywhere(self):
        locs = local_exponents(exact_points(0.17, [10, 100, 1000, 10_000]))
        for le in locs:
            assert le.alpha_local == pytest.approx(0.17, abs=1e-10)

    def test_ordered_by_size(self):
        locs = local_exponents(exact_points(0.1, [1000, 10, 100]))
        assert [le.n_lo for le in locs] == [10, 100]

    def test_tied_sizes_rejected(self):
        points = [ScalingPoint(10, 0.5, 0, "a"), ScalingPoint(10, 0.4, 0, "b")]
        with pytest.raises(ValueError, match="tie"):
            local_exponents(points)

    def test_per_seed_values_when_aligned(self):
        points = exact_points(0.2, [10, 100], seeds=(0, 1, 2))
        locs = local_exponents(points)
        assert locs[0].per_seed_values == pytest.approx((0.2, 0.2, 0.2))


class TestClassifySaturation:
    def test_published_transition_labels(self):
        locs = local_exponents(error_points(MOBILENETV2))
        labels = dict(zip(((le.config_lo, le.config_hi) for le in locs),
                          classify_saturation(locs)))
        assert labels[("m1.00", "m1.50")] == "scaling"
        assert labels[("m1.50", "m2.00")] == "diminishing"
        assert labels[("m2.00", "m3.00")] == "saturated"

    def test_exact_threshold_takes_pessimistic_label(self):
        from scalelens.scaling import LocalExponent
        at_sat = LocalExponent("a", "b", 10, 100, 0.01)
        at_dim = LocalExponent("a", "b", 10, 100, 0.05)
        assert classify_saturation([at_sat, at_dim]) == ["saturated", "diminishing"]

    def test_custom_thresholds(self):
        from scalelens.scaling import LocalExponent
        le = LocalExponent("a", "b", 10, 100, 0.02)
        assert classify_saturation([le]) == ["diminishing"]
        assert classify_saturation([le], saturated_threshold=0.03) == ["saturated"]
