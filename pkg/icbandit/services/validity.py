"""
TS-Prod minimum-probability scan.
"""

import logging
from typing import Literal

import numpy as np

from icbandit.errors import ConfigurationError, SimplexBreach
from icbandit.models.core import BanditFeedback
from icbandit.models.reports import ValidityScan
from icbandit.models.rng import RngStream
from icbandit.services import schedules
from icbandit.services.algorithms import TsProd
from icbandit.services.sampling import sample_arm

logger = logging.getLogger(__name__)

MAX_SCAN_HORIZON = 10**6


def min_prob_scan(
    experts: int,
    c0: float,
    horizon: int,
    trials: int,
    rng: RngStream,
    losses: Literal["random", "zero"] = "random",
) -> ValidityScan:
    """
    Run TS-Prod from the uniform start under random losses and trace
    min_i pi_{t,i} against C_t^2 eta_t^2.

    Each trial stops at its first breach; the trace at round t is the minimum
    over the trials still running. Breaches are data, never raised.

    Args:
        experts: K
        c0: Schedule offset
        horizon: Rounds per trial (at most 10^6)
        trials: Independent trials (substreams of `rng`)
        rng: Stream for arms and losses
        losses: "random" draws the played loss uniform on [0, 1]; "zero" feeds zero losses
    """
    if not 1 <= horizon <= MAX_SCAN_HORIZON or trials < 1:
        raise ConfigurationError(
            f"Scan needs 1 <= horizon <= {MAX_SCAN_HORIZON} and trials >= 1, "
            f"got horizon={horizon}, trials={trials}"
        )
    rounds = np.arange(1, horizon + 1)
    eta, _, bias_scale = schedules.ts_schedule(rounds, c0)
    bound = (bias_scale * eta) ** 2
    min_trace = np.full(horizon, np.inf)
    first_breach = None
    breach_trials = 0

    for trial in range(trials):
        generator = rng.generator(substream=trial)
        algorithm = TsProd(experts, c0=c0)
        for t in range(1, horizon + 1):
            weights = algorithm.weights
            min_trace[t - 1] = min(min_trace[t - 1], float(weights.min()))
            arm = sample_arm(algorithm.distribution(), generator)
            loss = float(generator.random()) if losses == "random" else 0.0
            try:
                algorithm.update(BanditFeedback(t, arm, loss))
            except SimplexBreach as e:
                breach_trials += 1
                first_breach = t if first_breach is None else min(first_breach, t)
                logger.info(
                    "TS-Prod left the simplex",
                    extra={"experts": experts, "c0": c0, "trial": trial, "round": t, "reason": e.reason},
                )
                break

    recorded = np.isfinite(min_trace)
    return ValidityScan(
        experts=experts,
        c0=c0,
        horizon=horizon,
        trials=trials,
        first_breach_round=first_breach,
        breach_trials=breach_trials,
        rounds=rounds[recorded].tolist(),
        min_prob_trace=min_trace[recorded].tolist(),
        bound_trace=bound[recorded].tolist(),
    )
