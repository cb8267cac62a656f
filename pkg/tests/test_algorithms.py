"""
Tests for the bandit update rules.
"""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from icbandit.errors import ConfigurationError, InputError, SimplexBreach
from icbandit.models.core import BanditFeedback
from icbandit.services import schedules
from icbandit.services.algorithms import (
    ALGORITHMS,
    Exp3,
    LbProd,
    TsOmdDs,
    TsProd,
    WsuUx,
    build_algorithm,
    solve_tsallis_projection,
)


def hedge_step(weights, estimate, eta):
    """Exact exponential-weights step; the Prod update is its first-order form."""
    scaled = weights * np.exp(-eta * (estimate - estimate.min()))
    return scaled / scaled.sum()


@st.composite
def simplex_states(draw, min_experts=2, max_experts=8, floor=1e-3):
    """Random interior distribution with every entry at least floor / K."""
    experts = draw(st.integers(min_experts, max_experts))
    raw = np.array(draw(st.lists(st.floats(0.0, 1.0), min_size=experts, max_size=experts)))
    weights = raw / raw.sum() if raw.sum() > 0 else np.full(experts, 1.0 / experts)
    return (1.0 - floor) * weights + floor / experts


class TestWsuUx:
    """Tests for WSU-UX and the loss-biased variant."""

    def test_unbiased_example(self):
        algorithm = WsuUx(2, eta=0.05, gamma=0.2)
        assert np.allclose(algorithm.sampling_weights(), [0.5, 0.5])
        algorithm.update(BanditFeedback(1, 0, 1.0))
        assert np.allclose(algorithm.weights, [0.475, 0.525], atol=1e-15)

    def test_biased_example(self):
        algorithm = WsuUx(2, eta=0.05, gamma=0.2, biased=True)
        assert algorithm.used_loss(0, 1.0) == pytest.approx(0.9)
        algorithm.update(BanditFeedback(1, 0, 1.0))
        assert np.allclose(algorithm.weights, [0.4775, 0.5225], atol=1e-15)

    def test_zero_loss_fixed_point(self):
        algorithm = WsuUx(3, eta=0.05, gamma=0.3, weights=[0.2, 0.3, 0.5])
        before = algorithm.weights
        algorithm.update(BanditFeedback(1, 2, 0.0))
        assert np.array_equal(algorithm.weights, before)
        assert algorithm.t == 2

    def test_sampling_mixture(self):
        algorithm = WsuUx(4, eta=0.01, gamma=0.2, weights=[0.1, 0.2, 0.3, 0.4])
        assert np.allclose(algorithm.distribution().weights, 0.05 + 0.8 * np.array([0.1, 0.2, 0.3, 0.4]))

    def test_ratio_precondition(self):
        with pytest.raises(ConfigurationError):
            WsuUx(2, eta=0.1, gamma=0.1)

    def test_names(self):
        assert WsuUx.tuned(2, 1000).name == "bwsu"
        assert WsuUx.tuned(2, 1000, biased=False).name == "wsu-ux"

    @pytest.mark.parametrize("experts", [2, 4, 8])
    def test_biased_loss_range(self, experts):
        algorithm = WsuUx.tuned(experts, 10_000)
        generator = np.random.default_rng(experts)
        for t in range(1, 300):
            arm = int(generator.choice(experts, p=algorithm.sampling_weights()))
            loss = float(generator.random())
            used = algorithm.used_loss(arm, loss)
            assert 0.0 <= used <= loss
            algorithm.update(BanditFeedback(t, arm, loss))

    def test_first_order_hedge_step(self):
        algorithm = WsuUx(2, eta=1e-3, gamma=0.1, weights=[0.3, 0.7])
        feedback = BanditFeedback(1, 0, 1.0)
        estimate = algorithm.estimate(feedback)
        reference = hedge_step(algorithm.weights, estimate, algorithm.eta)
        assert np.allclose(algorithm.propose(feedback), reference, atol=1e-5)

    @settings(max_examples=50, deadline=None)
    @given(simplex_states(), st.floats(0.0, 1.0), st.data())
    def test_sum_preserved(self, weights, loss, data):
        experts = weights.size
        algorithm = WsuUx(experts, eta=0.01, gamma=0.02 * experts, weights=weights)
        arm = data.draw(st.integers(0, experts - 1))
        proposed = algorithm.propose(BanditFeedback(1, arm, loss))
        assert abs(proposed.sum() - weights.sum()) <= 1e-14
        assert np.all(proposed > 0.0)


class TestLbProd:
    """Tests for LB-Prod."""

    def test_example(self):
        algorithm = LbProd(2, eta=0.1)
        feedback = BanditFeedback(1, 0, 1.0)
        assert np.allclose(algorithm.increment(feedback), [0.5, -0.5])
        algorithm.update(feedback)
        assert np.allclose(algorithm.weights, [0.475, 0.525], atol=1e-15)

    def test_zero_loss_fixed_point(self):
        algorithm = LbProd(3, eta=0.5, weights=[0.2, 0.3, 0.5])
        before = algorithm.weights
        algorithm.update(BanditFeedback(1, 1, 0.0))
        assert np.array_equal(algorithm.weights, before)

    def test_signed_losses_accepted(self):
        algorithm = LbProd(2, eta=0.5)
        algorithm.update(BanditFeedback(1, 0, -1.0))
        assert algorithm.weights[0] > 0.5

    @pytest.mark.parametrize("eta", [0.0, 1.0, 1.5])
    def test_eta_range(self, eta):
        with pytest.raises(ConfigurationError):
            LbProd(2, eta=eta)

    @settings(max_examples=100, deadline=None)
    @given(simplex_states(), st.floats(-1.0, 1.0), st.data())
    def test_increment_bounds(self, weights, loss, data):
        experts = weights.size
        arm = data.draw(st.integers(0, experts - 1))
        increment = LbProd(experts, eta=0.5, weights=weights).increment(BanditFeedback(1, arm, loss))
        assert abs(increment[arm]) <= abs(loss) + 1e-15
        others = np.delete(increment, arm)
        assert np.all(np.abs(others) <= 0.5 * abs(loss) + 1e-15)

    @settings(max_examples=100, deadline=None)
    @given(simplex_states(), st.floats(-1.0, 1.0), st.floats(0.01, 0.99), st.data())
    def test_sum_conserved(self, weights, loss, eta, data):
        experts = weights.size
        arm = data.draw(st.integers(0, experts - 1))
        proposed = LbProd(experts, eta=eta, weights=weights).propose(BanditFeedback(1, arm, loss))
        assert abs(proposed.sum() - weights.sum()) <= 1e-14
        assert np.all(proposed > 0.0)


class TestTsProd:
    """Tests for TS-Prod."""

    def test_literal_offset_breaches_at_first_round(self):
        algorithm = TsProd(2)
        assert algorithm.c0 == 2.0
        assert algorithm.biased_loss(0, 1.0) == pytest.approx(-5.3516, abs=1e-3)
        with pytest.raises(SimplexBreach) as exc_info:
            algorithm.update(BanditFeedback(1, 0, 1.0))
        breach = exc_info.value
        assert breach.proposed[0] > 1.0
        assert breach.round_index == 1
        assert breach.algorithm == "ts-prod"
        # state untouched
        assert algorithm.t == 1
        assert np.allclose(algorithm.weights, [0.5, 0.5])

    def test_zero_loss_without_bias(self):
        algorithm = TsProd(3, loss_bias=False, weights=[0.2, 0.3, 0.5])
        before = algorithm.weights
        algorithm.update(BanditFeedback(1, 0, 0.0))
        assert np.allclose(algorithm.weights, before, atol=1e-16)

    def test_offset_floor(self):
        with pytest.raises(ConfigurationError):
            TsProd(2, c0=0.5)

    @settings(max_examples=100, deadline=None)
    @given(simplex_states(floor=0.05), st.floats(0.0, 1.0), st.integers(1, 10_000), st.data())
    def test_sum_conserved_with_large_offset(self, weights, loss, t, data):
        experts = weights.size
        arm = data.draw(st.integers(0, experts - 1))
        algorithm = TsProd(experts, c0=1e6, weights=weights, round_index=t)
        proposed = algorithm.propose(BanditFeedback(t, arm, loss))
        assert abs(proposed.sum() - weights.sum()) <= 1e-12
        assert np.all(proposed > 0.0)


def _grid_search_step(dual: np.ndarray, eta: float, resolution: float = 1e-6) -> np.ndarray:
    """Normalizer mu on a dense grid minimizing |sum 1/(dual - eta mu)^2 - 1|."""
    lowest = dual.min()
    mu = np.arange((lowest - math.sqrt(dual.size)) / eta, (lowest - 1.0) / eta, resolution)
    totals = np.sum((dual[None, :] - eta * mu[:, None]) ** -2.0, axis=1)
    best = mu[int(np.argmin(np.abs(totals - 1.0)))]
    return (dual - eta * best) ** -2.0


class TestTsOmdDs:
    """Tests for dual-stabilized 1/2-Tsallis OMD."""

    def test_constant_eta_fixed_point(self):
        algorithm = TsOmdDs(4, constant_eta=True, round_index=3)
        algorithm.update(BanditFeedback(3, 1, 0.0))
        assert np.allclose(algorithm.weights, 0.25, atol=1e-12)

    def test_step_against_grid_search(self):
        algorithm = TsOmdDs(2, round_index=4)
        eta_next, xi = algorithm.step_size()
        assert eta_next == pytest.approx(1 / math.sqrt(5))
        assert xi == pytest.approx(2 / math.sqrt(5))
        feedback = BanditFeedback(4, 0, 1.0)
        estimate = algorithm.estimate(feedback)
        stabilizer = (1 - xi) / (eta_next * math.sqrt(0.5))
        assert estimate[0] == pytest.approx(1 / (0.5 + math.sqrt(2) / 4) - stabilizer)
        assert estimate[1] == pytest.approx(-stabilizer)

        dual = 1 / np.sqrt(algorithm.weights) + eta_next * estimate
        reference = _grid_search_step(dual, eta_next)
        algorithm.update(feedback)
        assert np.allclose(algorithm.weights, reference, atol=1e-5)
        assert abs(algorithm.weights.sum() - 1.0) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(simplex_states(floor=0.02), st.integers(200, 5000), st.floats(0.0, 1.0), st.data())
    def test_linearized_agrees_to_second_order(self, weights, t, loss, data):
        experts = weights.size
        arm = data.draw(st.integers(0, experts - 1))
        feedback = BanditFeedback(t, arm, loss)
        exact = TsOmdDs(experts, weights=weights, round_index=t)
        guard = exact.guard_value(feedback)
        if guard > 0.25:
            return
        linearized = TsOmdDs(experts, linearized=True, weights=weights, round_index=t)
        gap = np.max(np.abs(exact.propose(feedback) - linearized.propose(feedback)))
        assert gap <= 8.0 * guard**2 + 1e-14

    def test_guard_violation_counted(self):
        algorithm = TsOmdDs(2, weights=[0.015, 0.985], round_index=100)
        feedback = BanditFeedback(100, 0, 1.0)
        assert algorithm.guard_value(feedback) > 0.25
        algorithm.update(feedback)
        assert algorithm.guard_violations == 1
        assert algorithm.max_guard > 0.25

    def test_names(self):
        assert TsOmdDs(2).name == "ts-omd-ds"
        assert TsOmdDs(2, linearized=True).name == "ts-omd-ds-linearized"
        assert TsOmdDs(2, linearized=True).linear_in_loss
        assert not TsOmdDs(2).linear_in_loss

    def test_projection_sums_to_one(self):
        weights = solve_tsallis_projection(np.array([1.5, 2.0, 3.0]))
        assert abs(weights.sum() - 1.0) <= 1e-12
        assert np.all(weights > 0.0)


class TestExp3:
    """Tests for the Exp3 baseline."""

    def test_example(self):
        algorithm = Exp3(2, eta=0.1)
        algorithm.update(BanditFeedback(1, 0, 1.0))
        expected = np.array([math.exp(-0.2), 1.0]) / (math.exp(-0.2) + 1.0)
        assert np.allclose(algorithm.weights, expected, atol=1e-14)
        assert np.allclose(algorithm.weights, [0.45017, 0.54983], atol=1e-5)

    def test_zero_loss_fixed_point(self):
        algorithm = Exp3(3, eta=0.3, weights=[0.2, 0.3, 0.5])
        algorithm.update(BanditFeedback(1, 0, 0.0))
        assert np.allclose(algorithm.weights, [0.2, 0.3, 0.5], atol=1e-15)

    def test_not_linear(self):
        assert not Exp3.linear_in_loss

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 20, elements=st.floats(0.0, 1.0)), st.integers(0, 2**32 - 1))
    def test_weights_stay_normalized(self, losses, seed):
        algorithm = Exp3(3, eta=0.01)
        arms = np.random.default_rng(seed)
        for t, loss in enumerate(losses, start=1):
            algorithm.update(BanditFeedback(t, int(arms.integers(3)), float(loss)))
        npt.assert_allclose(algorithm.weights.sum(), 1.0, atol=1e-12)
        assert np.all(algorithm.weights > 0.0)

    def test_concentrated_weights_without_exploration_breach(self):
        algorithm = Exp3(2, eta=0.004, weights=[1.0 - 2e-5, 2e-5])
        with pytest.raises(SimplexBreach):
            algorithm.update(BanditFeedback(1, 1, 1.0))

    def test_exploration_keeps_concentrated_weights_inside(self):
        eta = 0.004
        gamma = schedules.exp3_exploration(2, eta)
        algorithm = Exp3(2, eta, gamma=gamma, weights=[1.0 - 2e-5, 2e-5])
        algorithm.update(BanditFeedback(1, 1, 1.0))
        assert algorithm.weights.min() >= gamma / 2
        assert algorithm.weights.max() <= 1.0 - gamma / 2 + 1e-15

    def test_tuned_run_on_separated_arms_stays_inside(self):
        horizon = 20_000
        algorithm = Exp3.tuned(2, horizon)
        arms = np.random.default_rng(7)
        for t in range(1, horizon + 1):
            arm = int(arms.choice(2, p=algorithm.weights))
            algorithm.update(BanditFeedback(t, arm, float(arm)))
        assert algorithm.weights[1] >= algorithm.gamma / 2
        assert algorithm.weights[0] < 1.0

    def test_tuned_exploration(self):
        algorithm = Exp3.tuned(2, 40_000)
        assert algorithm.gamma == pytest.approx(2 * schedules.exp3_tuned_eta(2, 40_000))
        assert Exp3.tuned(2, 1).gamma == 0.5

    def test_sampling_mixture(self):
        algorithm = Exp3(2, eta=0.1, gamma=0.2, weights=[0.25, 0.75])
        assert np.allclose(algorithm.weights, [0.3, 0.7])

    def test_recover_resets_log_weights(self):
        algorithm = Exp3(2, eta=0.1, gamma=0.2)
        algorithm.recover(np.array([0.3, 0.7]))
        algorithm.update(BanditFeedback(2, 0, 0.0))
        assert np.allclose(algorithm.weights, [0.3, 0.7])

    def test_gamma_range(self):
        with pytest.raises(ConfigurationError):
            Exp3(2, eta=0.1, gamma=1.0)


class TestBanditInterface:
    """Tests for the shared stateful interface."""

    def test_propose_does_not_mutate(self):
        algorithm = LbProd(2, eta=0.3)
        algorithm.propose(BanditFeedback(1, 0, 1.0))
        assert algorithm.t == 1
        assert np.allclose(algorithm.weights, [0.5, 0.5])

    def test_wrong_round(self):
        algorithm = LbProd(2, eta=0.3)
        with pytest.raises(InputError):
            algorithm.update(BanditFeedback(2, 0, 1.0))

    def test_recover_advances_round(self):
        algorithm = TsProd(2)
        algorithm.recover(np.array([0.9, 0.1]))
        assert algorithm.t == 2
        assert np.allclose(algorithm.weights, [0.9, 0.1])

    def test_clone_is_independent(self):
        algorithm = LbProd(2, eta=0.3)
        copy = algorithm.clone()
        copy.update(BanditFeedback(1, 0, 1.0))
        assert algorithm.t == 1

    def test_initial_weights_validated(self):
        with pytest.raises(ConfigurationError):
            LbProd(3, eta=0.3, weights=[0.5, 0.5])


class TestBuildAlgorithm:
    """Tests for construction by id."""

    @pytest.mark.parametrize("name", sorted(ALGORITHMS))
    def test_tuned(self, name):
        algorithm = build_algorithm(name, 2, 10_000)
        assert algorithm.name == name
        assert algorithm.experts == 2

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            build_algorithm("hedge", 2, 100)

    def test_explicit_needs_eta(self):
        with pytest.raises(ConfigurationError):
            build_algorithm("lb-prod", 2, 100, tuned=False)

    def test_explicit_wsu_needs_gamma(self):
        with pytest.raises(ConfigurationError):
            build_algorithm("bwsu", 2, 100, tuned=False, eta=0.01)

    def test_explicit(self):
        algorithm = build_algorithm("wsu-ux", 2, 100, tuned=False, eta=0.01, gamma=0.1)
        assert algorithm.describe() == {"eta": 0.01, "gamma": 0.1}

    def test_explicit_exp3_exploration_default(self):
        algorithm = build_algorithm("exp3", 2, 100, tuned=False, eta=0.05)
        assert algorithm.describe() == {"eta": 0.05, "gamma": 0.1}
        assert build_algorithm("exp3", 2, 100, tuned=False, eta=0.05, gamma=0.3).gamma == 0.3

    def test_linearized(self):
        assert build_algorithm("ts-omd-ds", 3, 100, linearized=True).name == "ts-omd-ds-linearized"
