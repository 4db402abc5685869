import math
import warnings

import numpy as np
import pytest

import patent_rent as pr
from patent_rent.fees import FeeEntry
from conftest import random_covariates, random_params
from _oracles import normal_cdf


class TestExpiryPmf:
    def test_centered_case_splits_in_half(self, india, config):
        # put the regression index exactly on the earliest cutoff
        ladder = pr.threshold_ladder(india, 0.3, config)
        beta = {name: 0.0 for name in pr.BETA_NAMES}
        beta["intercept"] = float(ladder.values[0])
        params = pr.ModelParams(sigma=2.2, depreciation=0.3, beta=beta)
        x = pr.CovariateVector(
            family_size=0, inventor_size=1, grant_lag=0.0, tech_scope=1, tech_field="others"
        )
        # zero out the numeric covariates' effect by zero coefficients
        pmf = pr.expiry_pmf(params, x, india, config)
        assert pmf.probs[0] == pytest.approx(0.5, abs=1e-12)

    def test_sums_to_one_with_nonnegative_entries(self, india, config):
        rng = np.random.default_rng(7)
        for _ in range(300):
            params = random_params(rng)
            x = random_covariates(rng)
            pmf = pr.expiry_pmf(params, x, india, config)
            assert abs(pmf.probs.sum() - 1.0) <= 1e-12
            assert pmf.probs.min() >= 0.0
            assert pmf.thresholds_monotone

    def test_against_independent_cdf(self, published_params, india, config, mean_covariates):
        pmf = pr.expiry_pmf(published_params, mean_covariates, india, config)
        ladder = pr.threshold_ladder(india, published_params.depreciation, config)
        index = pr.linear_index(published_params.beta, mean_covariates)
        z = [(v - index) / published_params.sigma for v in ladder.values]
        expected = [normal_cdf(z[0])]
        expected += [normal_cdf(b) - normal_cdf(a) for a, b in zip(z, z[1:])]
        expected += [1.0 - normal_cdf(z[-1])]
        np.testing.assert_allclose(pmf.probs, expected, atol=1e-13)

    def test_against_simulation(self, published_params, india, config, mean_covariates):
        n = 10**6
        rng = np.random.default_rng(20240811)
        eps = rng.normal(0.0, published_params.sigma, size=n)
        index = pr.linear_index(published_params.beta, mean_covariates)
        ladder = pr.threshold_ladder(india, published_params.depreciation, config)
        ages = pr.classify_expiry_ages(index + eps, ladder)
        pmf = pr.expiry_pmf(published_params, mean_covariates, india, config)
        for k, age in enumerate(pmf.ages):
            p = pmf.probs[k]
            freq = float(np.mean(ages == age))
            tol = 3.0 * math.sqrt(max(p * (1 - p), 1e-12) / n)
            assert abs(freq - p) <= tol, f"age {age}: freq {freq} vs p {p}"

    def test_never_renewed_shifts_with_index(self, omega_star, india, config):
        lower = pr.ModelParams(
            omega_star.sigma, omega_star.depreciation, dict(omega_star.beta, intercept=2.0)
        )
        higher = pr.ModelParams(
            omega_star.sigma, omega_star.depreciation, dict(omega_star.beta, intercept=9.0)
        )
        x = pr.CovariateVector(
            family_size=3, inventor_size=2, grant_lag=7.0, tech_scope=1, tech_field="chemical"
        )
        pmf_lo = pr.expiry_pmf(lower, x, india, config)
        pmf_hi = pr.expiry_pmf(higher, x, india, config)
        assert pmf_hi.probs[0] < pmf_lo.probs[0]
        assert pmf_hi.probs[-1] > pmf_lo.probs[-1]

    def test_huge_sigma_centers_first_cell(self, omega_star, india, config, mean_covariates):
        params = pr.ModelParams(1e6, omega_star.depreciation, omega_star.beta)
        pmf = pr.expiry_pmf(params, mean_covariates, india, config)
        assert pmf.probs[0] == pytest.approx(0.5, abs=1e-3)

    def test_india_third_year_mass_is_zero_by_default(
        self, omega_star, india, config, mean_covariates
    ):
        pmf = pr.expiry_pmf(omega_star, mean_covariates, india, config)
        assert pmf.probs[pmf.ages.index(3)] == 0.0

    def test_shadow_fee_policy_gives_third_year_mass(self, omega_star, india, mean_covariates):
        config = pr.ModelConfig(never_renewed_policy="shadow_fee")
        pmf = pr.expiry_pmf(omega_star, mean_covariates, india, config)
        assert pmf.probs[pmf.ages.index(3)] > 0.0
        assert abs(pmf.probs.sum() - 1.0) <= 1e-12


class TestThresholdLadder:
    def test_us_gap_ages_carry_previous_cutoff(self, config):
        us = pr.builtin_schedule("us")
        ladder = pr.threshold_ladder(us, 0.3, config)
        values = dict(zip(ladder.ages, ladder.values))
        assert values[15] == values[14] == values[19]
        assert ladder.decision_ages == tuple(range(4, 15))

    def test_non_monotone_schedule_flagged(self, config):
        decreasing = pr.FeeSchedule(
            name="dec",
            currency="XTS",
            entries=(FeeEntry(3, 5, 500.0), FeeEntry(6, 19, 1.0)),
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ladder = pr.threshold_ladder(decreasing, 0.31234, config)
        assert not ladder.monotone
        assert any(issubclass(w.category, pr.ModelValidityWarning) for w in caught)
        x = pr.CovariateVector(
            family_size=0, inventor_size=1, grant_lag=0.0, tech_scope=1, tech_field="others"
        )
        params = pr.ModelParams(
            sigma=1.0, depreciation=0.31234, beta={n: 0.0 for n in pr.BETA_NAMES}
        )
        pmf = pr.expiry_pmf(params, x, decreasing, config)
        assert not pmf.thresholds_monotone
        assert pmf.probs.min() < 0.0  # raw, not clipped
        assert abs(pmf.probs.sum() - 1.0) <= 1e-12

    def test_no_fee_anywhere_is_configuration_error(self, config):
        empty = pr.FeeSchedule(name="free", currency="XTS", entries=(FeeEntry(1, 1, 0.0),))
        with pytest.raises(pr.ConfigurationError):
            pr.threshold_ladder(empty, 0.3, config)

    def test_cache_returns_identical_object(self, india, config):
        a = pr.threshold_ladder(india, 0.333333333333, config)
        b = pr.threshold_ladder(india, 0.333333333333, config)
        assert a is b


class TestLogLikelihood:
    def test_single_record_half_probability(self, india, config):
        ladder = pr.threshold_ladder(india, 0.3, config)
        beta = {name: 0.0 for name in pr.BETA_NAMES}
        beta["intercept"] = float(ladder.values[0])
        params = pr.ModelParams(sigma=1.7, depreciation=0.3, beta=beta)
        record = pr.PatentRecord(
            patent_id="p1",
            application_year=2000,
            expiry_age=2,
            covariates=pr.CovariateVector(
                family_size=0, inventor_size=1, grant_lag=0.0, tech_scope=1, tech_field="others"
            ),
        )
        value = pr.log_likelihood(params, [record], india, config)
        assert value == pytest.approx(math.log(0.5), abs=1e-12)

    def test_duplicating_records_doubles_value(self, omega_star, india, config, recovery_records):
        subset = recovery_records[:200]
        single = pr.log_likelihood(omega_star, subset, india, config)
        double = pr.log_likelihood(omega_star, subset + subset, india, config)
        assert double == pytest.approx(2 * single, rel=1e-12)

    def test_permutation_invariance(self, omega_star, india, config, recovery_records):
        subset = recovery_records[:300]
        forward = pr.log_likelihood(omega_star, subset, india, config)
        backward = pr.log_likelihood(omega_star, list(reversed(subset)), india, config)
        assert forward == backward

    def test_matches_pmf_sum(self, omega_star, india, config, recovery_records):
        subset = recovery_records[:50]
        expected = 0.0
        for rec in subset:
            pmf = pr.expiry_pmf(omega_star, rec.covariates, india, config)
            expected += math.log(pmf.prob_of(rec.expiry_age))
        assert pr.log_likelihood(omega_star, subset, india, config) == pytest.approx(
            expected, rel=1e-12
        )

    def test_truth_beats_random_perturbations(
        self, omega_star, india, config, recovery_records
    ):
        rng = np.random.default_rng(5)
        subset = recovery_records[:2000]
        evaluator = pr.LikelihoodEvaluator(subset, india, config)
        at_truth = evaluator.log_likelihood(omega_star)
        wins = 0
        trials = 100
        vec = omega_star.as_vector()
        for _ in range(trials):
            bumped = vec * (1.0 + rng.uniform(-0.2, 0.2, size=vec.shape))
            bumped[0] = max(bumped[0], 1e-3)
            bumped[1] = max(bumped[1], 1e-3)
            if at_truth >= evaluator.log_likelihood_vector(bumped):
                wins += 1
        assert wins >= 95

    def test_empty_records_rejected(self, omega_star, india, config):
        with pytest.raises(pr.DomainError):
            pr.log_likelihood(omega_star, [], india, config)

    def test_finite_even_in_hopeless_region(self, india, config, recovery_records):
        beta = {name: 0.0 for name in pr.BETA_NAMES}
        beta["intercept"] = -9.9  # far below every cutoff
        params = pr.ModelParams(sigma=1e-6, depreciation=0.49, beta=beta)
        value = pr.log_likelihood(params, recovery_records[:100], india, config)
        assert math.isfinite(value)
