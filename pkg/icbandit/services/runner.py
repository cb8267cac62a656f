"""
Seeded experiment runs.

Each seed is an independent run with its own environment and algorithm; seeds
run on a thread pool and are merged in seed order, so the result does not
depend on the thread count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np

from icbandit import __version__
from icbandit.config import get_settings
from icbandit.errors import ConfigurationError, RunFailure, SimplexBreach
from icbandit.models.core import BanditFeedback, RegretLedger
from icbandit.models.results import BreachEvent, ExperimentResult, SeedTrajectory
from icbandit.models.rng import ENVIRONMENT_STREAM, SAMPLING_STREAM, RngStream
from icbandit.schemas.experiment import ExperimentConfig
from icbandit.services.algorithms import BanditAlgorithm, build_algorithm
from icbandit.services.environments import Environment, build_environment
from icbandit.services.regret import pseudo_regret
from icbandit.services.sampling import sample_arm
from icbandit.utils.logging import RunLogger

logger = logging.getLogger(__name__)

RECOVERY_FLOOR = 1e-12


def checkpoint_rounds(horizon: int, cadence: str = "geometric") -> List[int]:
    """
    Rounds at which regret is recorded.

    Args:
        horizon: T
        cadence: "every" for 1..T, "geometric" for powers of two up to T plus T

    Returns:
        Increasing rounds; empty for T = 0
    """
    if horizon <= 0:
        return []
    if cadence == "every":
        return list(range(1, horizon + 1))
    rounds = []
    power = 1
    while power < horizon:
        rounds.append(power)
        power *= 2
    rounds.append(horizon)
    return rounds


def build_components(config: ExperimentConfig, seed: int) -> tuple[BanditAlgorithm, Environment]:
    """Environment and algorithm for one seed (also used for upfront validation)."""
    horizon = config.experiment.horizon
    environment = build_environment(
        config.environment, horizon, RngStream(seed, ENVIRONMENT_STREAM)
    )
    section = config.algorithm
    algorithm = build_algorithm(
        section.name,
        environment.experts,
        max(horizon, 1),
        tuned=section.tuned,
        eta=section.eta,
        gamma=section.gamma,
        c0=section.c0,
        linearized=section.linearized,
        tolerance=get_settings().simplex_tolerance,
    )
    if environment.loss_range[0] < algorithm.loss_range[0]:
        raise ConfigurationError(
            f"Environment emits losses in {list(environment.loss_range)}, "
            f"{algorithm.name} accepts {list(algorithm.loss_range)}"
        )
    return algorithm, environment


def _repair(proposed: np.ndarray) -> np.ndarray:
    repaired = np.where(np.isfinite(proposed), proposed, RECOVERY_FLOOR)
    repaired = np.maximum(repaired, RECOVERY_FLOOR)
    return repaired / repaired.sum()


def run_seed(config: ExperimentConfig, seed: int, mode: Optional[str] = None) -> SeedTrajectory:
    """
    One seeded run.

    Raises:
        RunFailure: Strict mode and the algorithm left the simplex
    """
    mode = mode or config.experiment.mode
    algorithm, environment = build_components(config, seed)
    horizon = config.experiment.horizon
    checkpoints = set(checkpoint_rounds(horizon, config.experiment.cadence))
    arms = RngStream(seed, SAMPLING_STREAM).generator()
    ledger = RegretLedger(environment.experts)
    run_logger = RunLogger(algorithm.name, environment.name, seed)
    trajectory = SeedTrajectory(seed=seed)
    run_logger.log_run_started(horizon, environment.experts, mode)

    for t in range(1, horizon + 1):
        losses = environment.next_losses(
            t, algorithm if environment.needs_algorithm else None
        ).losses
        distribution = algorithm.distribution()
        arm = sample_arm(distribution, arms)
        ledger.record(distribution.weights, losses, arm)
        try:
            algorithm.update(BanditFeedback(t, arm, float(losses[arm])))
        except SimplexBreach as e:
            run_logger.log_breach(t, e.reason)
            if mode == "strict":
                run_logger.log_run_failed(e)
                raise RunFailure(
                    f"{algorithm.name} left the simplex at round {t} (seed {seed})",
                    details={"seed": seed, **e.details},
                ) from e
            repaired = _repair(e.proposed)
            algorithm.recover(repaired)
            run_logger.log_renormalization(t, float(np.nansum(e.proposed)))
            trajectory.breaches.append(
                BreachEvent(
                    algorithm=algorithm.name,
                    seed=seed,
                    round=t,
                    reason=e.reason,
                    weight_sum=float(np.nansum(e.proposed)),
                    min_weight=float(np.nanmin(e.proposed)),
                    renormalized=True,
                )
            )
        if t in checkpoints:
            regret = pseudo_regret(ledger)
            trajectory.pseudo_regret.append(regret)
            trajectory.realized_regret.append(ledger.realized_regret())
            run_logger.log_checkpoint(t, regret)

    trajectory.diagnostics = algorithm.describe()
    trajectory.failed = bool(trajectory.breaches)
    final = trajectory.pseudo_regret[-1] if trajectory.pseudo_regret else 0.0
    trajectory.wall_clock_s = run_logger.log_run_completed(final, len(trajectory.breaches))
    return trajectory


def summarize(trajectories: List[SeedTrajectory]) -> tuple[List[float], List[float]]:
    """
    Cross-seed mean and standard error per checkpoint.

    The standard error is std(ddof=1)/sqrt(n), and 0 for a single seed.
    """
    if not trajectories or not trajectories[0].pseudo_regret:
        return [], []
    values = np.array([trajectory.pseudo_regret for trajectory in trajectories])
    mean = values.mean(axis=0)
    if values.shape[0] < 2:
        return mean.tolist(), [0.0] * values.shape[1]
    stderr = values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])
    return mean.tolist(), stderr.tolist()


def run(
    config: ExperimentConfig, threads: Optional[int] = None, mode: Optional[str] = None
) -> ExperimentResult:
    """
    Run every seed of a configuration.

    Parameters and preconditions are checked once, before any round runs.

    Args:
        config: Validated experiment configuration
        threads: Worker threads (defaults to the config's `threads`)
        mode: "strict" or "scan" (defaults to the config's `mode`)

    Raises:
        ConfigurationError: Invalid parameters
        InputError: Unreadable loss source
        RunFailure: Strict-mode breach
    """
    seeds = config.experiment.seeds
    algorithm, environment = build_components(config, seeds[0])
    workers = max(1, min(threads or config.experiment.threads, len(seeds)))
    logger.info(
        "Experiment started",
        extra={
            "algorithm": algorithm.name,
            "environment": environment.name,
            "horizon": config.experiment.horizon,
            "seeds": len(seeds),
            "threads": workers,
        },
    )

    if workers == 1:
        trajectories = [run_seed(config, seed, mode) for seed in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(lambda seed: run_seed(config, seed, mode), seeds))

    mean, stderr = summarize(trajectories)
    return ExperimentResult(
        version=__version__,
        config=config.echo(),
        algorithm=algorithm.name,
        environment=environment.name,
        horizon=config.experiment.horizon,
        experts=environment.experts,
        environment_parameters=environment.describe(),
        checkpoints=checkpoint_rounds(config.experiment.horizon, config.experiment.cadence),
        seeds=trajectories,
        mean=mean,
        stderr=stderr,
    )
