"""
Brute-force verifiers for the per-step identities of the Prod-family updates.

The enumeration oracles recompute masked losses and normalizers from their
closed forms instead of calling the algorithm classes, so a bug in an update
cannot certify itself. Expectations over the played arm are exact sums over
all K arms.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from icbandit.config import get_settings
from icbandit.errors import DomainError, SimplexBreach
from icbandit.models.core import BanditFeedback, LossVector, SimplexDistribution
from icbandit.models.reports import AffineReport, MomentReport, PerturbationResult, SimplexFuzzReport
from icbandit.models.rng import SAMPLING_STREAM, RngStream
from icbandit.services import schedules
from icbandit.services.algorithms import BanditAlgorithm
from icbandit.services.sampling import sample_arm

logger = logging.getLogger(__name__)

MIN_PROBE_POINTS = 5
ASSUMPTION_LIMIT = 0.25
# Twice the supremum of |eps| / |L| and of |eps| / (|x| |L|), x = eta sqrt(pi) L,
# over |x| <= 1/4 (calibrate_perturbation_constant gives 0.65685 and 2.6274).
PERTURBATION_CONSTANT = 1.32
PERTURBATION_SECOND_ORDER_CONSTANT = 5.26
TS_SECOND_MOMENT_FACTOR = 13.0 / 8.0
LB_SECOND_MOMENT_FACTOR = 2.0


def _check_enumerable(experts: int) -> None:
    limit = get_settings().max_enumeration_experts
    if experts > limit:
        raise DomainError(
            f"Enumeration oracles are capped at K={limit}, got K={experts}",
            details={"experts": experts, "limit": limit},
        )


def lb_increment(weights: np.ndarray, losses: np.ndarray, arm: int) -> np.ndarray:
    """l~_i - lambda_i of LB-Prod when `arm` is played."""
    increment = -weights * weights[arm] * losses[arm] / np.dot(weights, weights)
    increment[arm] += losses[arm]
    return increment


def ts_increment(
    weights: np.ndarray, losses: np.ndarray, arm: int, eta: float, bias_scale: float
) -> np.ndarray:
    """l~_i - lambda_i of TS-Prod when `arm` is played, loss bias included."""
    biased = losses[arm] - eta * (bias_scale - 6.5 * weights[arm]) / math.sqrt(weights[arm])
    increment = -weights * math.sqrt(weights[arm]) * biased / np.sum(weights**1.5)
    increment[arm] += biased
    return increment


def _enumerate(weights: np.ndarray, increments: List[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    stacked = np.vstack(increments)
    first = weights @ stacked
    second = weights @ (stacked**2)
    return first, second


def enumerate_step_expectation(
    rule: str,
    distribution: SimplexDistribution,
    losses: LossVector,
    t: Optional[int] = None,
    c0: Optional[float] = None,
) -> MomentReport:
    """
    Exact first and second moments of the LB-Prod (or TS-Prod) increment.

    For LB-Prod the first moment is compared with pi_i (l_i - c_t),
    c_t = sum pi^2 l / sum pi^2, and the second moment with 2 pi_i.

    Args:
        rule: "lb-prod" or "ts-prod" (the latter delegates to ts_moment_check)
        distribution: pi_t
        losses: Full loss vector l_t
        t, c0: TS-Prod round and schedule offset

    Raises:
        DomainError: If K exceeds the enumeration cap or the rule is unknown
    """
    if rule == "ts-prod":
        return ts_moment_check(distribution, losses, t or 1, c0 or float(distribution.experts))
    if rule != "lb-prod":
        raise DomainError(f"No enumeration oracle for '{rule}'")
    weights, values = distribution.weights, losses.losses
    _check_enumerable(weights.size)
    first, second = _enumerate(weights, [lb_increment(weights, values, a) for a in range(weights.size)])
    normalizer = float(np.dot(weights**2, values) / np.dot(weights, weights))
    closed = weights * (values - normalizer)
    bound = LB_SECOND_MOMENT_FACTOR * weights
    return MomentReport(
        rule=rule,
        experts=weights.size,
        first_moment=first.tolist(),
        second_moment=second.tolist(),
        closed_form_first=closed.tolist(),
        first_residual=np.abs(first - closed).tolist(),
        second_bound=bound.tolist(),
        normalizer=normalizer,
        bound_violations=int(np.sum(second > bound * (1.0 + 1e-12))),
    )


def ts_moment_check(
    distribution: SimplexDistribution, losses: LossVector, t: int, c0: float
) -> MomentReport:
    """
    TS-Prod moments against pi_i (l_i - c_t) - eta_t sqrt(pi_i) (C_t - 13/2 pi_i)
    and the bound 13/8 pi_i (1 - pi_i).

    c_t is the pi^(3/2)-weighted mean of the biased played loss. When some
    pi_i <= C_t^2 eta_t^2 the report carries hypothesis_met=False; moments are
    still enumerated but bound violations are not counted.
    """
    weights, values = distribution.weights, losses.losses
    _check_enumerable(weights.size)
    eta, _, bias_scale = schedules.ts_schedule(t, c0)
    root = np.sqrt(weights)
    biased = values - eta * (bias_scale - 6.5 * weights) / root
    normalizer = float(np.dot(weights * root, biased) / np.sum(weights * root))
    first, second = _enumerate(
        weights, [ts_increment(weights, values, a, eta, bias_scale) for a in range(weights.size)]
    )
    closed = weights * (values - normalizer) - eta * root * (bias_scale - 6.5 * weights)
    bound = TS_SECOND_MOMENT_FACTOR * weights * (1.0 - weights)
    hypothesis_met = bool(np.all(weights > (bias_scale * eta) ** 2))
    violations = int(np.sum(second > bound * (1.0 + 1e-12))) if hypothesis_met else 0
    return MomentReport(
        rule="ts-prod",
        experts=weights.size,
        first_moment=first.tolist(),
        second_moment=second.tolist(),
        closed_form_first=closed.tolist(),
        first_residual=np.abs(first - closed).tolist(),
        second_bound=bound.tolist(),
        normalizer=normalizer,
        hypothesis_met=hypothesis_met,
        bound_violations=violations,
    )


def affine_probe(
    algorithm: BanditAlgorithm, arm: int, grid: Sequence[float]
) -> List[AffineReport]:
    """
    Fit loss -> pi_{t+1,i} for every arm i at fixed (pi_t, A_t = arm, t).

    Coefficients come from the two extreme grid points; the residual is the
    worst deviation at the interior points.

    Raises:
        DomainError: If the grid has fewer than five points or leaves the loss range
    """
    points = np.sort(np.asarray(grid, dtype=np.float64))
    low, high = algorithm.loss_range
    if points.size < MIN_PROBE_POINTS or points[0] < low or points[-1] > high:
        raise DomainError(
            f"Probe grid needs >= {MIN_PROBE_POINTS} points inside [{low}, {high}]",
            details={"grid": points.tolist()},
        )
    snapshot = algorithm.clone()
    outputs = np.vstack(
        [snapshot.propose(BanditFeedback(snapshot.t, arm, float(loss))) for loss in points]
    )
    reports = []
    for target in range(snapshot.experts):
        values = outputs[:, target]
        slope = (values[-1] - values[0]) / (points[-1] - points[0])
        intercept = values[0] - slope * points[0]
        residual = np.abs(values[1:-1] - (slope * points[1:-1] + intercept))
        reports.append(
            AffineReport(
                arm=target,
                played=target == arm,
                slope=float(slope),
                intercept=float(intercept),
                max_residual=float(residual.max()),
                grid_points=int(points.size),
            )
        )
    return reports


def _perturbation_gap(eta: float, probability: float, estimate: float, epsilon: float) -> float:
    scale = eta * math.sqrt(probability)
    return 1.0 / (1.0 + scale * (estimate + epsilon)) ** 2 - (1.0 - 2.0 * scale * estimate)


def perturbation_solve(eta: float, probability: float, estimate: float) -> PerturbationResult:
    """
    Solve 1/(1 + eta sqrt(pi) (L + eps))^2 = 1 - 2 eta sqrt(pi) L for eps by bisection
    on [-|L|, |L|].

    Raises:
        DomainError: If |eta sqrt(pi) L| > 1/4, eta <= 0 or pi outside (0, 1]
    """
    if not eta > 0.0 or not 0.0 < probability <= 1.0:
        raise DomainError(f"Need eta > 0 and pi in (0, 1], got eta={eta}, pi={probability}")
    scaled = eta * math.sqrt(probability) * estimate
    if abs(scaled) > ASSUMPTION_LIMIT + 1e-12:
        raise DomainError(
            f"|eta*sqrt(pi)*L| = {abs(scaled):.6g} exceeds 1/4",
            details={"eta": eta, "probability": probability, "estimate": estimate},
        )
    if estimate == 0.0:
        return PerturbationResult(
            eta=eta, probability=probability, estimate=0.0, epsilon=0.0, residual=0.0, scaled_step=0.0
        )
    bound = abs(estimate)
    epsilon = optimize.bisect(
        lambda e: _perturbation_gap(eta, probability, estimate, e),
        -bound,
        bound,
        xtol=max(1e-16 * bound, np.finfo(float).tiny),
        rtol=4.0 * np.finfo(float).eps,
        maxiter=400,
    )
    return PerturbationResult(
        eta=eta,
        probability=probability,
        estimate=estimate,
        epsilon=float(epsilon),
        residual=abs(_perturbation_gap(eta, probability, estimate, epsilon)),
        scaled_step=scaled,
    )


def perturbation_closed_form(eta: float, probability: float, estimate: float) -> float:
    """eps = ((1 - 2x)^(-1/2) - 1 - x) / (eta sqrt(pi)) with x = eta sqrt(pi) L."""
    scale = eta * math.sqrt(probability)
    x = scale * estimate
    return ((1.0 - 2.0 * x) ** -0.5 - 1.0 - x) / scale


def perturbation_fixed_point(
    eta: float, probability: float, estimate: float, iterations: int = 200
) -> float:
    """Iterate 2 eps = l~ (3y + 2y^2) / (1 + y)^2, y = eta sqrt(pi) l~, l~ = L + eps."""
    scale = eta * math.sqrt(probability)
    epsilon = 0.0
    for _ in range(iterations):
        shifted = estimate + epsilon
        y = scale * shifted
        epsilon = shifted * (3.0 * y + 2.0 * y * y) / (2.0 * (1.0 + y) ** 2)
    return epsilon


def calibrate_perturbation_constant(points: int = 2001) -> Tuple[float, float]:
    """
    Supremum of |eps|/|L| and of |eps|/(|x| |L|) over a grid of the region |x| <= 1/4.

    Returns:
        (first-order ratio, second-order ratio)
    """
    first_order = 0.0
    second_order = 0.0
    for eta in (0.05, 0.5, 1.0):
        for probability in (0.01, 0.25, 1.0):
            scale = eta * math.sqrt(probability)
            for x in np.linspace(-ASSUMPTION_LIMIT, ASSUMPTION_LIMIT, points):
                if x == 0.0:
                    continue
                result = perturbation_solve(eta, probability, float(x) / scale)
                ratio = abs(result.epsilon) / abs(result.estimate)
                first_order = max(first_order, ratio)
                second_order = max(second_order, ratio / abs(result.scaled_step))
    return first_order, second_order


def simplex_fuzz(algorithm: BanditAlgorithm, steps: int, seed: int) -> SimplexFuzzReport:
    """
    Drive an algorithm with arms drawn from its own distribution and uniform
    random losses over its loss range, tracking the simplex invariants.
    """
    arms = RngStream(seed, SAMPLING_STREAM).generator()
    losses = RngStream(seed, SAMPLING_STREAM).generator(substream=1)
    low, high = algorithm.loss_range
    report = SimplexFuzzReport(
        algorithm=algorithm.name, experts=algorithm.experts, steps=steps, seed=seed
    )
    max_sum_error = 0.0
    min_weight = 1.0
    for _ in range(steps):
        arm = sample_arm(algorithm.distribution(), arms)
        feedback = BanditFeedback(algorithm.t, arm, float(losses.uniform(low, high)))
        try:
            algorithm.update(feedback)
        except SimplexBreach as e:
            logger.debug("Fuzz breach", extra={"algorithm": algorithm.name, "round": e.round_index})
            report.breaches += 1
            break
        weights = algorithm.weights
        max_sum_error = max(max_sum_error, abs(float(weights.sum()) - 1.0))
        min_weight = min(min_weight, float(weights.min()))
    report.max_sum_error = max_sum_error
    report.min_weight = min_weight
    return report
