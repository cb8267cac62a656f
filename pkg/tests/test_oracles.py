"""
Tests for the brute-force oracles and the TS-Prod validity scan.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icbandit.errors import ConfigurationError, DomainError
from icbandit.models.core import SIGNED_RANGE, BanditFeedback, LossVector, SimplexDistribution
from icbandit.models.rng import RngStream
from icbandit.services import oracles
from icbandit.services.algorithms import Exp3, LbProd, TsOmdDs, TsProd, WsuUx
from icbandit.services.validity import min_prob_scan


class TestStepExpectation:
    """Tests for exact moment enumeration."""

    def test_closed_form_example(self):
        report = oracles.enumerate_step_expectation(
            "lb-prod",
            SimplexDistribution([0.2, 0.3, 0.5]),
            LossVector([1.0, 0.5, 0.0]),
        )
        assert report.normalizer == pytest.approx((0.04 + 0.09 * 0.5) / 0.38)
        assert report.normalizer == pytest.approx(0.22368, abs=1e-5)
        assert report.max_first_residual <= 1e-12
        assert report.holds

    def test_constant_losses_have_zero_drift(self):
        report = oracles.enumerate_step_expectation(
            "lb-prod", SimplexDistribution.uniform(4), LossVector(np.full(4, 0.6))
        )
        assert np.allclose(report.first_moment, 0.0, atol=1e-15)
        assert report.normalizer == pytest.approx(0.6)

    def test_second_moment_bound(self, rng):
        for _ in range(500):
            experts = int(rng.integers(2, 9))
            weights = rng.dirichlet(np.ones(experts)) * (1 - 1e-3) + 1e-3 / experts
            report = oracles.enumerate_step_expectation(
                "lb-prod",
                SimplexDistribution(weights),
                LossVector(rng.uniform(-1.0, 1.0, experts), SIGNED_RANGE),
            )
            assert report.bound_violations == 0
            assert report.max_first_residual <= 1e-12

    def test_matches_algorithm_increment(self, rng):
        weights = np.array([0.1, 0.2, 0.3, 0.4])
        losses = rng.uniform(-1.0, 1.0, 4)
        algorithm = LbProd(4, eta=0.5, weights=weights)
        for arm in range(4):
            expected = algorithm.increment(BanditFeedback(1, arm, float(losses[arm])))
            assert np.allclose(oracles.lb_increment(weights, losses, arm), expected, atol=1e-15)

    def test_expert_cap(self):
        with pytest.raises(DomainError):
            oracles.enumerate_step_expectation(
                "lb-prod", SimplexDistribution.uniform(65), LossVector(np.zeros(65))
            )

    def test_expert_cap_from_settings(self, monkeypatch):
        monkeypatch.setenv("ICBANDIT_MAX_ENUMERATION_EXPERTS", "4")
        with pytest.raises(DomainError):
            oracles.enumerate_step_expectation(
                "lb-prod", SimplexDistribution.uniform(5), LossVector(np.zeros(5))
            )

    def test_unknown_rule(self):
        with pytest.raises(DomainError):
            oracles.enumerate_step_expectation(
                "exp3", SimplexDistribution.uniform(2), LossVector(np.zeros(2))
            )


class TestTsMoments:
    """Tests for the TS-Prod moment oracle."""

    def test_literal_offset_hypothesis_unmet(self):
        report = oracles.ts_moment_check(
            SimplexDistribution.uniform(2), LossVector([0.3, 0.9]), 1, 2.0
        )
        assert not report.hypothesis_met
        assert not report.holds
        assert report.bound_violations == 0

    def test_large_offset(self, rng):
        for _ in range(200):
            losses = LossVector(rng.random(2))
            report = oracles.ts_moment_check(SimplexDistribution.uniform(2), losses, 1, 1e6)
            assert report.hypothesis_met
            assert report.holds
            assert report.max_first_residual <= 1e-12

    def test_delegation(self):
        dist = SimplexDistribution([0.3, 0.7])
        losses = LossVector([0.2, 0.4])
        assert oracles.enumerate_step_expectation("ts-prod", dist, losses, t=3, c0=1e6) == (
            oracles.ts_moment_check(dist, losses, 3, 1e6)
        )

    def test_zero_losses_still_drift(self):
        # the bias term moves weight even when every loss is zero
        report = oracles.ts_moment_check(
            SimplexDistribution([0.2, 0.8]), LossVector([0.0, 0.0]), 5, 1e6
        )
        assert report.normalizer != 0.0
        assert not np.allclose(report.first_moment, 0.0, atol=1e-12)


class TestAffineProbe:
    """Tests for the affinity probe."""

    def test_lb_prod(self):
        algorithm = LbProd(3, eta=0.5, weights=[0.2, 0.3, 0.5])
        reports = oracles.affine_probe(algorithm, 1, np.linspace(-1.0, 1.0, 9))
        assert all(report.max_residual <= 1e-12 for report in reports)
        played = [report for report in reports if report.played]
        assert len(played) == 1
        assert played[0].slope_negative
        assert reports[0].slope_negative is None

    def test_ts_prod_within_validity(self):
        algorithm = TsProd(3, c0=1e6, weights=[0.3, 0.3, 0.4])
        reports = oracles.affine_probe(algorithm, 2, np.linspace(0.0, 1.0, 7))
        assert max(report.max_residual for report in reports) <= 1e-12

    def test_bwsu(self):
        algorithm = WsuUx(2, eta=0.05, gamma=0.2, biased=True)
        reports = oracles.affine_probe(algorithm, 0, np.linspace(0.0, 1.0, 5))
        assert max(report.max_residual for report in reports) <= 1e-12

    def test_linearized_ts_omd(self):
        algorithm = TsOmdDs(3, linearized=True, weights=[0.2, 0.3, 0.5], round_index=40)
        reports = oracles.affine_probe(algorithm, 0, np.linspace(0.0, 1.0, 5))
        assert max(report.max_residual for report in reports) <= 1e-12
        assert reports[0].slope < 0.0

    def test_exp3_is_not_affine(self):
        strong = oracles.affine_probe(Exp3(2, eta=1.0, weights=[0.1, 0.9]), 0, np.linspace(0.0, 1.0, 11))
        assert max(report.max_residual for report in strong) > 1e-3
        mild = oracles.affine_probe(Exp3(2, eta=0.1), 0, np.linspace(0.0, 1.0, 11))
        assert max(report.max_residual for report in mild) > 1e-5

    def test_state_untouched(self):
        algorithm = LbProd(2, eta=0.5)
        oracles.affine_probe(algorithm, 0, np.linspace(0.0, 1.0, 5))
        assert algorithm.t == 1

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            oracles.affine_probe(LbProd(2, eta=0.5), 0, [0.0, 0.5, 1.0])

    def test_grid_outside_range(self):
        with pytest.raises(DomainError):
            oracles.affine_probe(TsProd(2, c0=1e6), 0, np.linspace(-1.0, 1.0, 5))


class TestPerturbation:
    """Tests for the perturbation solver."""

    @pytest.mark.parametrize("x", [-0.25, -0.1, 0.01, 0.2, 0.25])
    def test_closed_form_and_fixed_point(self, x):
        eta, probability = 0.3, 0.4
        estimate = x / (eta * math.sqrt(probability))
        result = oracles.perturbation_solve(eta, probability, estimate)
        assert result.residual <= 1e-12
        assert result.epsilon >= 0.0
        closed = oracles.perturbation_closed_form(eta, probability, estimate)
        assert result.epsilon == pytest.approx(closed, abs=1e-9 * abs(estimate))
        fixed = oracles.perturbation_fixed_point(eta, probability, estimate)
        assert fixed == pytest.approx(closed, abs=1e-9 * abs(estimate))

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0.01, 1.0),
        st.floats(1e-3, 1.0),
        st.floats(-0.25, 0.25).filter(lambda x: abs(x) >= 1e-6),
    )
    def test_bound(self, eta, probability, x):
        estimate = x / (eta * math.sqrt(probability))
        result = oracles.perturbation_solve(eta, probability, estimate)
        assert abs(result.epsilon) <= oracles.PERTURBATION_CONSTANT * abs(estimate)
        assert abs(result.epsilon) <= oracles.PERTURBATION_SECOND_ORDER_CONSTANT * abs(x) * abs(estimate)

    def test_zero_estimate(self):
        result = oracles.perturbation_solve(0.5, 0.3, 0.0)
        assert result.epsilon == 0.0

    def test_outside_region(self):
        with pytest.raises(DomainError):
            oracles.perturbation_solve(1.0, 1.0, 0.3)

    @pytest.mark.parametrize("eta,probability", [(0.0, 0.5), (0.5, 0.0), (0.5, 1.5)])
    def test_invalid_inputs(self, eta, probability):
        with pytest.raises(DomainError):
            oracles.perturbation_solve(eta, probability, 0.1)

    def test_calibrated_constants(self):
        first_order, second_order = oracles.calibrate_perturbation_constant(points=201)
        assert first_order == pytest.approx(0.65685, abs=1e-4)
        assert second_order == pytest.approx(2.6274, abs=1e-3)
        assert oracles.PERTURBATION_CONSTANT >= 2.0 * first_order
        assert oracles.PERTURBATION_SECOND_ORDER_CONSTANT >= 2.0 * second_order


class TestSimplexFuzz:
    """Tests for the simplex fuzzer."""

    @pytest.mark.parametrize("experts", [2, 8])
    def test_lb_prod_clean(self, experts):
        report = oracles.simplex_fuzz(LbProd.tuned(experts, 5000), 2000, seed=1)
        assert report.clean
        assert report.max_sum_error <= 1e-9

    def test_ts_omd_clean(self):
        assert oracles.simplex_fuzz(TsOmdDs(4), 1000, seed=2).clean

    def test_literal_ts_prod_breaches(self):
        report = oracles.simplex_fuzz(TsProd(2), 100, seed=3)
        assert report.breaches == 1
        assert not report.clean


class TestValidityScan:
    """Tests for the TS-Prod minimum-probability scan."""

    def test_literal_offset_breaches_at_first_round(self):
        scan = min_prob_scan(2, 2.0, 10, 3, RngStream(1, 0))
        assert scan.first_breach_round == 1
        assert scan.breach_trials == 3
        assert scan.rounds == [1]
        assert scan.min_prob_trace == [0.5]
        assert scan.breached

    def test_zero_losses_still_breach(self):
        scan = min_prob_scan(2, 2.0, 10, 1, RngStream(1, 0), losses="zero")
        assert scan.first_breach_round == 1

    def test_large_offset_keeps_bound(self):
        scan = min_prob_scan(2, 1e5, 500, 2, RngStream(1, 0))
        assert not scan.breached
        assert scan.bound_held
        assert len(scan.min_prob_trace) == 500
        assert np.all(np.diff(scan.bound_trace) < 0.0)

    @pytest.mark.parametrize("horizon,trials", [(0, 1), (10**6 + 1, 1), (10, 0)])
    def test_invalid(self, horizon, trials):
        with pytest.raises(ConfigurationError):
            min_prob_scan(2, 2.0, horizon, trials, RngStream(1, 0))
