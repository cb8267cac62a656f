"""
Bandit update rules behind one stateful interface.

Every algorithm holds its weight vector pi_t and the current round t. The
harness samples arms from `distribution()` and feeds back (round, arm, loss);
`propose` computes the next weights without touching the state, `update`
validates and commits them. Weights are never renormalized inside an update: a
proposal that leaves the open simplex raises SimplexBreach.
"""

import copy
import logging
import math
from abc import ABC, abstractmethod
from typing import ClassVar, Dict, Optional, Tuple, Type

import numpy as np
from scipy import optimize

from icbandit.errors import ConfigurationError, InputError, NumericalError, SimplexBreach
from icbandit.models.core import (
    DEFAULT_TOLERANCE,
    SIGNED_RANGE,
    UNIT_RANGE,
    BanditFeedback,
    SimplexDistribution,
)
from icbandit.services import schedules

logger = logging.getLogger(__name__)

GUARD_LIMIT = 0.25
NORMALIZER_MAX_ITER = 200
NORMALIZER_SUM_TOLERANCE = 1e-12


class BanditAlgorithm(ABC):
    """Base class for all update rules."""

    name: ClassVar[str]
    loss_range: ClassVar[Tuple[float, float]] = UNIT_RANGE
    # Whether pi_{t+1} is affine in the observed loss at fixed (pi_t, A_t, t).
    linear_in_loss: ClassVar[bool] = True

    def __init__(
        self,
        experts: int,
        weights: Optional[np.ndarray] = None,
        round_index: int = 1,
        tolerance: float = DEFAULT_TOLERANCE,
    ):
        if experts < 2:
            raise ConfigurationError(f"Need at least two experts, got K={experts}")
        if round_index < 1:
            raise ConfigurationError(f"Round index must be positive, got {round_index}")
        self.experts = experts
        self.tolerance = tolerance
        self.t = round_index
        if weights is None:
            self._pi = np.full(experts, 1.0 / experts)
        else:
            self._pi = np.array(SimplexDistribution(weights, tolerance).weights)
            if self._pi.size != experts:
                raise ConfigurationError(
                    f"Initial weights have {self._pi.size} entries, expected {experts}"
                )

    @property
    def weights(self) -> np.ndarray:
        """Internal weights pi_t (a copy)."""
        return self._pi.copy()

    def sampling_weights(self) -> np.ndarray:
        """Weights the arm is drawn from in the current round."""
        return self._pi

    def distribution(self) -> SimplexDistribution:
        return SimplexDistribution(self.sampling_weights(), self.tolerance)

    def propose(self, feedback: BanditFeedback) -> np.ndarray:
        """
        Next-round internal weights for this feedback, without changing the state.

        Raises:
            InputError: If the feedback is not for the current round
            InvariantViolation: If the arm or loss is out of range
        """
        if feedback.round != self.t:
            raise InputError(
                f"{self.name}: feedback for round {feedback.round}, expected round {self.t}"
            )
        feedback.validate(self.experts, self.loss_range)
        return self._step(feedback)

    def update(self, feedback: BanditFeedback) -> SimplexDistribution:
        """
        Apply one round of feedback and advance to round t+1.

        Returns:
            The sampling distribution of the new round

        Raises:
            SimplexBreach: If the proposed weights leave the open simplex
        """
        proposed = self.propose(feedback)
        reason = self._breach_reason(proposed)
        if reason is not None:
            raise SimplexBreach(
                self.name, self.t, self._pi, proposed, feedback.arm, feedback.loss, reason
            )
        self._after_step(feedback, proposed)
        self._pi = proposed
        self.t += 1
        return self.distribution()

    def recover(self, weights: np.ndarray) -> None:
        """Install externally repaired weights after a recorded breach and advance the round."""
        self._pi = np.array(SimplexDistribution(weights, self.tolerance).weights)
        self.t += 1

    def clone(self) -> "BanditAlgorithm":
        return copy.deepcopy(self)

    def _breach_reason(self, proposed: np.ndarray) -> Optional[str]:
        if not np.all(np.isfinite(proposed)):
            return "non-finite weight"
        if np.any(proposed <= 0.0):
            return f"weight {float(proposed.min())!r} <= 0"
        if np.any(proposed >= 1.0):
            return f"weight {float(proposed.max())!r} >= 1"
        total = float(proposed.sum())
        if abs(total - 1.0) > self.tolerance:
            return f"weights sum to {total!r}"
        return None

    def _after_step(self, feedback: BanditFeedback, proposed: np.ndarray) -> None:
        """Hook run once an update is accepted."""

    @abstractmethod
    def _step(self, feedback: BanditFeedback) -> np.ndarray:
        """Compute pi_{t+1} from pi_t and validated feedback."""

    def describe(self) -> Dict[str, float]:
        """Parameters echoed into results."""
        return {}


class WsuUx(BanditAlgorithm):
    """
    WSU-UX: Prod-style update on importance-weighted losses, sampling from the
    exploration mixture gamma/K + (1 - gamma) pi.

    With `biased=True` the observed loss is first shrunk to l(1 - eta/pi~_A),
    which turns the first-order step into a second-order one.
    """

    def __init__(
        self,
        experts: int,
        eta: float,
        gamma: float,
        biased: bool = False,
        weights: Optional[np.ndarray] = None,
        round_index: int = 1,
        tolerance: float = DEFAULT_TOLERANCE,
    ):
        schedules.check_wsu_params(experts, eta, gamma, biased)
        super().__init__(experts, weights, round_index, tolerance)
        self.eta = eta
        self.gamma = gamma
        self.biased = biased

    @property
    def name(self) -> str:  # type: ignore[override]
        return "bwsu" if self.biased else "wsu-ux"

    @classmethod
    def tuned(cls, experts: int, horizon: int, biased: bool = True) -> "WsuUx":
        if biased:
            eta, gamma = schedules.bwsu_tuned_params(experts, horizon)
        else:
            eta, gamma = schedules.wsu_ux_tuned_params(experts, horizon)
        return cls(experts, eta, gamma, biased=biased)

    def sampling_weights(self) -> np.ndarray:
        return self.gamma / self.experts + (1.0 - self.gamma) * self._pi

    def used_loss(self, arm: int, loss: float) -> float:
        """Loss entering the estimator: biased in BWSU, as observed otherwise."""
        if not self.biased:
            return loss
        return loss * (1.0 - self.eta / float(self.sampling_weights()[arm]))

    def estimate(self, feedback: BanditFeedback) -> np.ndarray:
        """Importance-weighted loss estimate l^_t."""
        estimate = np.zeros(self.experts)
        arm = feedback.arm
        estimate[arm] = self.used_loss(arm, feedback.loss) / float(self.sampling_weights()[arm])
        return estimate

    def _step(self, feedback: BanditFeedback) -> np.ndarray:
        arm = feedback.arm
        estimate = self.estimate(feedback)
        normalizer = float(self._pi[arm] * estimate[arm])
        proposed = self._pi * (1.0 + self.eta * normalizer)
        proposed[arm] = self._pi[arm] * (1.0 - self.eta * (estimate[arm] - normalizer))
        return proposed

    def describe(self) -> Dict[str, float]:
        return {"eta": self.eta, "gamma": self.gamma}


class LbProd(BanditAlgorithm):
    """
    LB-Prod: linearized log-barrier step with the per-arm normalizer
    lambda_i = pi_i pi_A l / sum_j pi_j^2. Accepts losses in [-1, 1].
    """

    name = "lb-prod"
    loss_range = SIGNED_RANGE

    def __init__(
        self,
        experts: int,
        eta: float,
        weights: Optional[np.ndarray] = None,
        round_index: int = 1,
        tolerance: float = DEFAULT_TOLERANCE,
    ):
        if not 0.0 < eta < 1.0:
            raise ConfigurationError(f"LB-Prod needs 0 < eta < 1, got {eta}")
        super().__init__(experts, weights, round_index, tolerance)
        self.eta = eta

    @classmethod
    def tuned(cls, experts: int, horizon: int) -> "LbProd":
        return cls(experts, schedules.lb_tuned_eta(experts, horizon))

    def increment(self, feedback: BanditFeedback) -> np.ndarray:
        """Masked loss minus normalizer, l~_i - lambda_i."""
        arm = feedback.arm
        normalizer = self._pi * self._pi[arm] * feedback.loss / float(np.dot(self._pi, self._pi))
        masked = np.zeros(self.experts)
        masked[arm] = feedback.loss
        return masked - normalizer

    def _step(self, feedback: BanditFeedback) -> np.ndarray:
        return self._pi * (1.0 - self.eta * self.increment(feedback))

    def describe(self) -> Dict[str, float]:
        return {"eta": self.eta}


class TsProd(BanditAlgorithm):
    """
    TS-Prod: linearized 1/2-Tsallis step with loss biasing.

    The played arm's loss is shifted by eta_t (C_t - 13/2 pi_A) / sqrt(pi_A) and
    the update is pi_i (1 - 2 eta_t / sqrt(pi_i) (l~_i - lambda_i)). The literal
    schedule offset c0 = K exits the simplex at small t; those steps raise
    SimplexBreach.
    """

    name = "ts-prod"

    def __init__(
        self,
        experts: int,
        c0: Optional[float] = None,
        loss_bias: bool = True,
        weights: Optional[np.ndarray] = None,
        round_index: int = 1,
        tolerance: float = DEFAULT_TOLERANCE,
    ):
        super().__init__(experts, weights, round_index, tolerance)
        self.c0 = float(experts if c0 is None else c0)
        if self.c0 < 1.0:
            raise ConfigurationError(f"TS-Prod schedule offset c0 must be >= 1, got {self.c0}")
        self.loss_bias = loss_bias

    def schedule(self) -> Tuple[float, float, float]:
        """(eta_t, eta_{t-1}, C_t) at the current round."""
        return schedules.ts_schedule(self.t, self.c0)  # type: ignore[return-value]

    def biased_loss(self, arm: int, loss: float) -> float:
        if not self.loss_bias:
            return loss
        eta, _, bias_scale = self.schedule()
        pi_arm = float(self._pi[arm])
        return loss - eta * (bias_scale - schedules.TS_BIAS_CONSTANT * pi_arm) / math.sqrt(pi_arm)

    def increment(self, feedback: BanditFeedback) -> np.ndarray:
        arm = feedback.arm
        biased = self.biased_loss(arm, feedback.loss)
        root_pi = np.sqrt(self._pi)
        normalizer = self._pi * root_pi[arm] * biased / float(np.dot(self._pi, root_pi))
        masked = np.zeros(self.experts)
        masked[arm] = biased
        return masked - normalizer

    def _step(self, feedback: BanditFeedback) -> np.ndarray:
        eta = self.schedule()[0]
        return self._pi * (1.0 - 2.0 * eta / np.sqrt(self._pi) * self.increment(feedback))

    def describe(self) -> Dict[str, float]:
        return {"c0": self.c0}


class TsOmdDs(BanditAlgorithm):
    """
    Dual-stabilized 1/2-Tsallis OMD.

    The estimate is l/(pi_A + gamma_t) on the played arm minus the stabilization
    term (1 - xi_t)/(eta_{t+1} sqrt(pi_i)), with eta_t = 1/sqrt(t),
    gamma_t = sqrt(K)/t and xi_t = eta_{t+1}/eta_t. The exact step solves for the
    normalizer s in pi_{t+1,i} = 1/(1/sqrt(pi_i) + eta_{t+1} l^_i - s)^2 so the
    weights sum to one. `linearized=True` applies pi_i (1 - 2 eta_{t+1} sqrt(pi_i) L_i)
    instead, with L = l^ minus its pi^(3/2)-weighted mean.

    Every accepted step evaluates max_i |eta_{t+1} sqrt(pi_i) L_i| and counts the
    rounds where it exceeds 1/4.
    """

    def __init__(
        self,
        experts: int,
        constant_eta: bool = False,
        linearized: bool = False,
        weights: Optional[np.ndarray] = None,
        round_index: int = 1,
        tolerance: float = DEFAULT_TOLERANCE,
    ):
        super().__init__(experts, weights, round_index, tolerance)
        self.constant_eta = constant_eta
        self.linearized = linearized
        self.guard_violations = 0
        self.max_guard = 0.0

    @property
    def name(self) -> str:  # type: ignore[override]
        return "ts-omd-ds-linearized" if self.linearized else "ts-omd-ds"

    @property
    def linear_in_loss(self) -> bool:  # type: ignore[override]
        return self.linearized

    def step_size(self) -> Tuple[float, float]:
        """(eta_{t+1}, xi_t) applied in the current round."""
        eta_now = float(schedules.ts_omd_eta(self.t))
        if self.constant_eta:
            return eta_now, 1.0
        eta_next = float(schedules.ts_omd_eta(self.t + 1))
        return eta_next, eta_next / eta_now

    def estimate(self, feedback: BanditFeedback) -> np.ndarray:
        eta_next, xi = self.step_size()
        gamma = schedules.ts_omd_gamma(self.t, self.experts)
        estimate = -(1.0 - xi) / (eta_next * np.sqrt(self._pi))
        estimate[feedback.arm] += feedback.loss / (float(self._pi[feedback.arm]) + gamma)
        return estimate

    def centered_estimate(self, feedback: BanditFeedback) -> np.ndarray:
        """L = l^ minus its pi^(3/2)-weighted mean."""
        estimate = self.estimate(feedback)
        weights = self._pi * np.sqrt(self._pi)
        return estimate - float(np.dot(weights, estimate)) / float(weights.sum())

    def guard_value(self, feedback: BanditFeedback) -> float:
        eta_next, _ = self.step_size()
        return float(np.max(np.abs(eta_next * np.sqrt(self._pi) * self.centered_estimate(feedback))))

    def _step(self, feedback: BanditFeedback) -> np.ndarray:
        eta_next, _ = self.step_size()
        if self.linearized:
            centered = self.centered_estimate(feedback)
            return self._pi * (1.0 - 2.0 * eta_next * np.sqrt(self._pi) * centered)
        dual = 1.0 / np.sqrt(self._pi) + eta_next * self.estimate(feedback)
        return solve_tsallis_projection(dual, self.t)

    def _after_step(self, feedback: BanditFeedback, proposed: np.ndarray) -> None:
        value = self.guard_value(feedback)
        self.max_guard = max(self.max_guard, value)
        if value > GUARD_LIMIT:
            self.guard_violations += 1
            logger.debug(
                "Bounded-gradient guard exceeded",
                extra={"algorithm": self.name, "round": self.t, "guard": value},
            )

    def describe(self) -> Dict[str, float]:
        return {"guard_violations": float(self.guard_violations), "max_guard": self.max_guard}


def solve_tsallis_projection(dual: np.ndarray, round_index: int = 0) -> np.ndarray:
    """
    Weights 1/(dual_i - s)^2 with s chosen so they sum to one.

    The sum is increasing in s on (-inf, min dual); at s = min - sqrt(K) it is at
    most one and at s = min - 1 it is at least one.

    Raises:
        NumericalError: If the root is not bracketed or the sum misses one by more
            than 1e-12
    """
    lowest = float(dual.min())
    experts = dual.size

    def excess(shift: float) -> float:
        return float(np.sum((dual - shift) ** -2.0)) - 1.0

    try:
        shift = optimize.bisect(
            excess,
            lowest - math.sqrt(experts),
            lowest - 1.0,
            xtol=1e-15,
            rtol=4.0 * np.finfo(float).eps,
            maxiter=NORMALIZER_MAX_ITER,
        )
    except (ValueError, RuntimeError) as e:
        raise NumericalError(
            f"Normalizer solve failed at round {round_index}: {e}",
            details={"round": round_index, "dual": dual.tolist()},
        ) from e
    proposed = (dual - shift) ** -2.0
    total = float(proposed.sum())
    if abs(total - 1.0) > NORMALIZER_SUM_TOLERANCE:
        raise NumericalError(
            f"Normalizer solve left the sum at {total!r} at round {round_index}",
            details={"round": round_index, "sum": total},
        )
    return proposed


class Exp3(BanditAlgorithm):
    """
    Exponential weights on importance-weighted losses; a baseline, not incentive compatible.

    The exponential weights are kept as log-weights p_t and the arm is drawn from
    pi_t = (1 - gamma) p_t + gamma / K, so every entry of pi_t lies in
    [gamma / K, 1 - gamma (K - 1) / K] however far p_t has concentrated, and the
    estimate l / pi_{t,A} is at most K / gamma. With gamma = 0, pi_t = p_t.
    """

    name = "exp3"
    linear_in_loss = False

    def __init__(
        self,
        experts: int,
        eta: float,
        gamma: float = 0.0,
        weights: Optional[np.ndarray] = None,
        round_index: int = 1,
        tolerance: float = DEFAULT_TOLERANCE,
    ):
        if not eta > 0.0:
            raise ConfigurationError(f"Exp3 needs eta > 0, got {eta}")
        if not 0.0 <= gamma < 1.0:
            raise ConfigurationError(f"Exp3 needs 0 <= gamma < 1, got {gamma}")
        super().__init__(experts, weights, round_index, tolerance)
        self.eta = eta
        self.gamma = gamma
        self._log_weights = np.log(self._pi)
        self._pi = self._mix(self._log_weights)

    @classmethod
    def tuned(cls, experts: int, horizon: int) -> "Exp3":
        eta = schedules.exp3_tuned_eta(experts, horizon)
        return cls(experts, eta, gamma=schedules.exp3_exploration(experts, eta))

    def _mix(self, log_weights: np.ndarray) -> np.ndarray:
        exponential = np.exp(log_weights - log_weights.max())
        exponential /= exponential.sum()
        return (1.0 - self.gamma) * exponential + self.gamma / self.experts

    def _next_log_weights(self, feedback: BanditFeedback) -> np.ndarray:
        arm = feedback.arm
        log_weights = self._log_weights.copy()
        log_weights[arm] -= self.eta * feedback.loss / float(self._pi[arm])
        return log_weights - log_weights.max()

    def _step(self, feedback: BanditFeedback) -> np.ndarray:
        return self._mix(self._next_log_weights(feedback))

    def _after_step(self, feedback: BanditFeedback, proposed: np.ndarray) -> None:
        self._log_weights = self._next_log_weights(feedback)

    def recover(self, weights: np.ndarray) -> None:
        super().recover(weights)
        floor = self.gamma / self.experts
        exponential = np.maximum(self._pi - floor, np.finfo(float).tiny) / (1.0 - self.gamma)
        self._log_weights = np.log(exponential)

    def describe(self) -> Dict[str, float]:
        return {"eta": self.eta, "gamma": self.gamma}


ALGORITHMS: Dict[str, Type[BanditAlgorithm]] = {
    "exp3": Exp3,
    "wsu-ux": WsuUx,
    "bwsu": WsuUx,
    "lb-prod": LbProd,
    "ts-prod": TsProd,
    "ts-omd-ds": TsOmdDs,
}

# Algorithms whose update is affine and decreasing in the played loss.
INCENTIVE_COMPATIBLE = ("wsu-ux", "bwsu", "lb-prod", "ts-prod")


def build_algorithm(
    name: str,
    experts: int,
    horizon: int,
    tuned: bool = True,
    eta: Optional[float] = None,
    gamma: Optional[float] = None,
    c0: Optional[float] = None,
    linearized: bool = False,
    tolerance: float = DEFAULT_TOLERANCE,
) -> BanditAlgorithm:
    """
    Instantiate an algorithm by id.

    Args:
        name: One of ALGORITHMS
        experts: Number of arms K
        horizon: Horizon T, used by tuned constructors
        tuned: Derive eta/gamma from (K, T) instead of taking them explicitly
        eta, gamma: Explicit parameters (when not tuned)
        c0: TS-Prod schedule offset (defaults to K)
        linearized: TS-OMD-DS linearized Prod form
        tolerance: Simplex-sum tolerance of the returned algorithm

    Raises:
        ConfigurationError: Unknown id, missing parameters or violated preconditions
    """
    if name not in ALGORITHMS:
        raise ConfigurationError(
            f"Unknown algorithm '{name}'", details={"known": sorted(ALGORITHMS)}
        )
    algorithm = _construct(name, experts, horizon, tuned, eta, gamma, c0, linearized)
    algorithm.tolerance = tolerance
    return algorithm


def _construct(
    name: str,
    experts: int,
    horizon: int,
    tuned: bool,
    eta: Optional[float],
    gamma: Optional[float],
    c0: Optional[float],
    linearized: bool,
) -> BanditAlgorithm:
    if name == "ts-prod":
        return TsProd(experts, c0=c0)
    if name == "ts-omd-ds":
        return TsOmdDs(experts, linearized=linearized)
    if tuned:
        if name == "exp3":
            return Exp3.tuned(experts, horizon)
        if name == "lb-prod":
            return LbProd.tuned(experts, horizon)
        return WsuUx.tuned(experts, horizon, biased=name == "bwsu")
    if eta is None:
        raise ConfigurationError(f"Algorithm '{name}' needs eta when tuned = false")
    if name == "exp3":
        if gamma is None:
            gamma = schedules.exp3_exploration(experts, eta)
        return Exp3(experts, eta, gamma=gamma)
    if name == "lb-prod":
        return LbProd(experts, eta)
    if gamma is None:
        raise ConfigurationError(f"Algorithm '{name}' needs gamma when tuned = false")
    return WsuUx(experts, eta, gamma, biased=name == "bwsu")
