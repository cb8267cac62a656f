"""
Regret scaling across horizons.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence

from icbandit.errors import ConfigurationError
from icbandit.models.results import ExperimentResult, ScalingReport
from icbandit.schemas.experiment import ExperimentConfig
from icbandit.services import runner

logger = logging.getLogger(__name__)

DEFAULT_MIN_SEEDS = 20


def _comparable(config: Dict[str, Any]) -> Dict[str, Any]:
    experiment = {
        k: v for k, v in config["experiment"].items() if k not in ("horizon", "output", "threads")
    }
    return {**config, "experiment": experiment}


def scaling_report(results: Sequence[ExperimentResult], min_seeds: int = DEFAULT_MIN_SEEDS) -> ScalingReport:
    """
    Ratios R(T_{k+1}) / R(T_k) of the final mean pseudo-regret.

    A sqrt(T)-regret algorithm on horizons growing by 4x gives ratios near 2;
    a logarithmic regime gives ratios near log(4T)/log(T).

    Raises:
        ConfigurationError: Fewer than two results, fewer than `min_seeds` seeds,
            horizons not increasing, or configurations that differ beyond the horizon
    """
    if len(results) < 2:
        raise ConfigurationError("Scaling needs results at two or more horizons")
    reference = _comparable(results[0].config)
    for result in results:
        if len(result.seeds) < min_seeds:
            raise ConfigurationError(
                f"Scaling needs >= {min_seeds} seeds per horizon, got {len(result.seeds)} at T={result.horizon}"
            )
        if _comparable(result.config) != reference:
            raise ConfigurationError(
                "Scaling results come from different configurations",
                details={"horizon": result.horizon},
            )
    horizons = [result.horizon for result in results]
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigurationError(f"Horizons must increase, got {horizons}")

    finals = [result.final_mean for result in results]
    ratios = [b / a if a != 0.0 else math.inf for a, b in zip(finals, finals[1:])]
    log_reference = [math.log(b) / math.log(a) if a > 1 else math.inf for a, b in zip(horizons, horizons[1:])]
    report = ScalingReport(
        algorithm=results[0].algorithm,
        environment=results[0].environment,
        horizons=horizons,
        final_mean=finals,
        ratios=ratios,
        seeds=len(results[0].seeds),
        reference_log=log_reference,
    )
    logger.info(
        "Scaling report",
        extra={"algorithm": report.algorithm, "horizons": horizons, "ratios": ratios},
    )
    return report


def run_scaling(
    config: ExperimentConfig,
    horizons: Sequence[int],
    threads: Optional[int] = None,
    mode: Optional[str] = None,
    min_seeds: int = DEFAULT_MIN_SEEDS,
) -> tuple[List[ExperimentResult], ScalingReport]:
    """Run one configuration at each horizon and report the ratios."""
    results = [runner.run(config.with_horizon(h), threads=threads, mode=mode) for h in horizons]
    return results, scaling_report(results, min_seeds=min_seeds)
