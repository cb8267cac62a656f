"""
Loss-generating environments.

All environments are oblivious: the loss vector of round t depends only on the
configuration, the seed and t (each round reads its own Philox substream), so
skipping rounds or replaying a run reproduces the same losses.
"""

import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence, Tuple

import numpy as np

from icbandit.errors import ConfigurationError, InputError
from icbandit.models.core import SIGNED_RANGE, UNIT_RANGE, LossVector
from icbandit.models.rng import RngStream

if TYPE_CHECKING:
    from icbandit.schemas.experiment import EnvironmentSection
    from icbandit.services.algorithms import BanditAlgorithm

logger = logging.getLogger(__name__)


class Environment(ABC):
    """Base class; subclasses produce the raw loss vector of a round."""

    name: str = "environment"
    # Whether losses depend on the learner (strategic reports).
    needs_algorithm: bool = False

    def __init__(self, experts: int, loss_range: Tuple[float, float] = UNIT_RANGE):
        if experts < 2:
            raise ConfigurationError(f"Need at least two experts, got K={experts}")
        self.experts = experts
        self.loss_range = loss_range
        self._last_round = 0

    def next_losses(
        self, t: int, algorithm: Optional["BanditAlgorithm"] = None
    ) -> LossVector:
        """
        Full hidden loss vector of round t.

        Raises:
            InputError: If t does not increase across calls, or the source is exhausted
        """
        if t <= self._last_round:
            raise InputError(
                f"{self.name}: rounds must increase, got {t} after {self._last_round}"
            )
        self._last_round = t
        return LossVector(self._losses(t, algorithm), self.loss_range)

    @abstractmethod
    def _losses(self, t: int, algorithm: Optional["BanditAlgorithm"]) -> np.ndarray:
        """Loss vector for round t."""

    def describe(self) -> dict:
        return {"name": self.name, "experts": self.experts}


class StochasticBernoulliEnv(Environment):
    """Independent Bernoulli losses with fixed means."""

    name = "bernoulli"

    def __init__(self, means: Sequence[float], rng: RngStream):
        self.means = np.array(means, dtype=np.float64)
        if np.any(self.means < 0.0) or np.any(self.means > 1.0):
            raise ConfigurationError(f"Bernoulli means must lie in [0, 1], got {list(means)}")
        super().__init__(self.means.size)
        self.rng = rng

    def _losses(self, t: int, algorithm: Optional["BanditAlgorithm"]) -> np.ndarray:
        draws = self.rng.generator(substream=t).random(self.experts)
        return (draws < self.means).astype(np.float64)

    def best_arm(self) -> int:
        return int(np.argmin(self.means))

    def has_unique_best(self) -> bool:
        return int(np.sum(self.means == self.means.min())) == 1

    def gaps(self) -> np.ndarray:
        """Delta_i = mean_i - min mean."""
        return self.means - self.means.min()

    def describe(self) -> dict:
        return {
            **super().describe(),
            "means": self.means.tolist(),
            "best_arm": self.best_arm() if self.has_unique_best() else None,
            "gaps": self.gaps().tolist(),
        }


class SwitchingEnv(Environment):
    """
    The best arm rotates every `period` rounds: arm ((t-1) // period) mod K gets
    `low`, every other arm gets `high`.
    """

    name = "switching"

    def __init__(self, experts: int, period: int, low: float = 0.0, high: float = 1.0):
        if period < 1:
            raise ConfigurationError(f"Switching period must be positive, got {period}")
        if not low < high:
            raise ConfigurationError(f"Need low < high, got low={low}, high={high}")
        super().__init__(experts, _range_for(low, high))
        self.period = period
        self.low = low
        self.high = high

    @classmethod
    def with_switches(
        cls, experts: int, horizon: int, switches: int, low: float = 0.0, high: float = 1.0
    ) -> "SwitchingEnv":
        """Period ceil(T / (switches + 1)), so the same switch count applies at any horizon."""
        if switches < 0:
            raise ConfigurationError(f"Switch count must be non-negative, got {switches}")
        period = max(1, math.ceil(max(horizon, 1) / (switches + 1)))
        return cls(experts, period, low, high)

    def best_arm_at(self, t: int) -> int:
        return ((t - 1) // self.period) % self.experts

    def _losses(self, t: int, algorithm: Optional["BanditAlgorithm"]) -> np.ndarray:
        losses = np.full(self.experts, self.high)
        losses[self.best_arm_at(t)] = self.low
        return losses


class UniformEnv(Environment):
    """I.i.d. uniform losses in [low, high]."""

    name = "uniform"

    def __init__(self, experts: int, rng: RngStream, low: float = 0.0, high: float = 1.0):
        if not low < high:
            raise ConfigurationError(f"Need low < high, got low={low}, high={high}")
        super().__init__(experts, _range_for(low, high))
        self.rng = rng
        self.low = low
        self.high = high

    def _losses(self, t: int, algorithm: Optional["BanditAlgorithm"]) -> np.ndarray:
        return self.rng.generator(substream=t).uniform(self.low, self.high, self.experts)


class MatrixEnv(Environment):
    """Losses replayed from a fixed T x K matrix, one round per row."""

    name = "matrix"

    def __init__(self, matrix: np.ndarray, loss_range: Tuple[float, float] = UNIT_RANGE):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise InputError(f"Loss matrix must be two-dimensional, got shape {matrix.shape}")
        low, high = loss_range
        if np.any(~np.isfinite(matrix)) or np.any(matrix < low) or np.any(matrix > high):
            raise InputError(f"Loss matrix has entries outside [{low}, {high}]")
        super().__init__(matrix.shape[1], loss_range)
        self.matrix = matrix

    @classmethod
    def from_file(cls, path: Path, loss_range: Tuple[float, float] = UNIT_RANGE) -> "MatrixEnv":
        """
        Load a plain-text loss file: one round per line, comma-separated, '#' comments.

        Raises:
            InputError: If the file is missing, ragged or not numeric
        """
        try:
            matrix = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=np.float64)
        except (OSError, ValueError) as e:
            raise InputError(
                f"Cannot read loss matrix from {path}: {e}", details={"path": str(path)}
            ) from e
        if matrix.size == 0:
            raise InputError(f"Loss matrix file {path} has no rows", details={"path": str(path)})
        logger.info(
            "Loaded loss matrix",
            extra={"path": str(path), "rounds": matrix.shape[0], "experts": matrix.shape[1]},
        )
        return cls(matrix, loss_range)

    @property
    def rounds(self) -> int:
        return int(self.matrix.shape[0])

    def _losses(self, t: int, algorithm: Optional["BanditAlgorithm"]) -> np.ndarray:
        if t > self.rounds:
            raise InputError(
                f"Loss matrix exhausted: round {t} requested, {self.rounds} rows available",
                details={"round": t, "rows": self.rounds},
            )
        return self.matrix[t - 1]


def _range_for(low: float, high: float) -> Tuple[float, float]:
    if 0.0 <= low and high <= 1.0:
        return UNIT_RANGE
    if -1.0 <= low and high <= 1.0:
        return SIGNED_RANGE
    raise ConfigurationError(f"Losses must lie in [0, 1] or [-1, 1], got [{low}, {high}]")


def build_environment(section: "EnvironmentSection", horizon: int, rng: RngStream) -> Environment:
    """
    Instantiate the environment described by a validated config section.

    Args:
        section: [environment] section
        horizon: Run horizon T (switch counts, matrix length check)
        rng: Environment stream of the seed

    Raises:
        ConfigurationError: Inconsistent parameters
        InputError: Unreadable or too short loss file
    """
    from icbandit.services.forecasting import ForecastingEnv

    if section.name == "bernoulli":
        return StochasticBernoulliEnv(section.means or [], rng)
    if section.name == "switching":
        experts = section.experts or 2
        if section.switches is not None:
            return SwitchingEnv.with_switches(
                experts, horizon, section.switches, section.low, section.high
            )
        return SwitchingEnv(experts, section.period or 1, section.low, section.high)
    if section.name == "uniform":
        return UniformEnv(section.experts or 2, rng, section.low, section.high)
    if section.name == "matrix":
        env = MatrixEnv.from_file(Path(section.path or ""), _range_for(section.low, section.high))
        if section.experts is not None and section.experts != env.experts:
            raise InputError(
                f"Loss file has {env.experts} columns, config declares experts = {section.experts}"
            )
        if env.rounds < horizon:
            raise InputError(
                f"Loss file has {env.rounds} rows, horizon is {horizon}",
                details={"rows": env.rounds, "horizon": horizon},
            )
        return env
    return ForecastingEnv(
        section.experts or 2,
        rng,
        strategic=section.strategic_experts(),
        grid=section.grid,
        calibrated=section.calibrated,
    )
