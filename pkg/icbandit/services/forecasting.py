"""
The forecasting game: experts report a probability of rain, the learner picks
one expert per round and every expert suffers the squared loss of its report.

A strategic expert reports the grid point that maximizes its expected
next-round weight pi_{t+1,i}, the expectation running over the rain outcome
(under the expert's belief) and over the learner's arm draw. Under a learner
whose update is affine and decreasing in the played loss, that grid point is
the belief itself up to the grid resolution.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from icbandit.errors import ConfigurationError
from icbandit.models.core import BanditFeedback
from icbandit.models.rng import RngStream
from icbandit.services.algorithms import BanditAlgorithm
from icbandit.services.environments import Environment

logger = logging.getLogger(__name__)

DEFAULT_GRID = 0.01


class StrategicReportPolicy:
    """Greedy one-round report optimization over a uniform grid on [0, 1]."""

    def __init__(self, resolution: float = DEFAULT_GRID):
        if not 0.0 < resolution <= 0.5:
            raise ConfigurationError(f"Report grid resolution must lie in (0, 1/2], got {resolution}")
        self.resolution = resolution
        self.grid = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)

    def best_report(
        self,
        algorithm: BanditAlgorithm,
        expert: int,
        belief: float,
        reference_reports: np.ndarray,
    ) -> float:
        """
        Grid point maximizing E[pi_{t+1,expert} | report], lowest on ties.

        Args:
            algorithm: Learner; only `propose` is called, the state is untouched
            expert: Reporting expert
            belief: Expert's probability of rain
            reference_reports: Reports of the other experts this round
        """
        belief = float(np.clip(belief, 0.0, 1.0))
        sampling = algorithm.distribution().weights
        outcomes = [(1.0, belief), (0.0, 1.0 - belief)]

        # Rounds where another arm is played do not depend on the report.
        baseline = 0.0
        for outcome, chance in outcomes:
            if chance == 0.0:
                continue
            for arm in range(algorithm.experts):
                if arm == expert or sampling[arm] == 0.0:
                    continue
                loss = (outcome - float(reference_reports[arm])) ** 2
                feedback = BanditFeedback(algorithm.t, arm, loss)
                baseline += chance * sampling[arm] * algorithm.propose(feedback)[expert]

        values = np.full(self.grid.size, baseline)
        for index, report in enumerate(self.grid):
            for outcome, chance in outcomes:
                if chance == 0.0:
                    continue
                feedback = BanditFeedback(algorithm.t, expert, (outcome - float(report)) ** 2)
                values[index] += (
                    chance * sampling[expert] * algorithm.propose(feedback)[expert]
                )
        return float(self.grid[int(np.argmax(values))])


class ForecastingEnv(Environment):
    """
    K forecasters with i.i.d. uniform beliefs (unless fixed); rain falls with
    the belief of the calibrated expert. Strategic experts replace their
    truthful report by the policy's best response to the current learner.
    """

    name = "forecasting"

    def __init__(
        self,
        experts: int,
        rng: RngStream,
        strategic: Sequence[int] = (),
        grid: float = DEFAULT_GRID,
        calibrated: int = 0,
        beliefs: Optional[Sequence[float]] = None,
    ):
        super().__init__(experts)
        if not 0 <= calibrated < experts:
            raise ConfigurationError(f"Calibrated expert {calibrated} out of range for K={experts}")
        bad = [i for i in strategic if not 0 <= i < experts]
        if bad:
            raise ConfigurationError(f"Strategic experts out of range: {bad}")
        self.rng = rng
        self.strategic = tuple(sorted(set(strategic)))
        self.policy = StrategicReportPolicy(grid)
        self.calibrated = calibrated
        self.fixed_beliefs = None if beliefs is None else np.clip(np.array(beliefs, dtype=np.float64), 0.0, 1.0)
        self.reference_reports: Optional[np.ndarray] = None
        self.last_reports: Optional[np.ndarray] = None
        self.last_outcome: Optional[float] = None

    @property
    def needs_algorithm(self) -> bool:  # type: ignore[override]
        return bool(self.strategic)

    def draw_round(self, t: int) -> Tuple[np.ndarray, float]:
        """Beliefs and rain outcome of round t; also sets the truthful reference reports."""
        generator = self.rng.generator(substream=t)
        draws = generator.random(self.experts)
        beliefs = draws if self.fixed_beliefs is None else self.fixed_beliefs.copy()
        outcome = 1.0 if generator.random() < beliefs[self.calibrated] else 0.0
        self.reference_reports = beliefs.copy()
        return beliefs, outcome

    def _losses(self, t: int, algorithm: Optional[BanditAlgorithm]) -> np.ndarray:
        beliefs, outcome = self.draw_round(t)
        reports = beliefs.copy()
        if self.strategic:
            if algorithm is None:
                raise ConfigurationError("Strategic experts need the learner to best-respond to")
            for expert in self.strategic:
                reports[expert] = strategic_report(self, algorithm, expert, float(beliefs[expert]))
        self.last_reports = reports
        self.last_outcome = outcome
        return (outcome - reports) ** 2

    def describe(self) -> dict:
        return {
            "name": self.name,
            "experts": self.experts,
            "strategic": list(self.strategic),
            "grid": self.policy.resolution,
        }


def strategic_report(
    env: ForecastingEnv, algorithm: BanditAlgorithm, expert: int, belief: float
) -> float:
    """
    Best one-round report of `expert` against `algorithm`.

    Other experts are taken to report `env.reference_reports` (their truthful
    beliefs of the current round); before any round is drawn every other expert
    is assumed to report the same belief.
    """
    reference = env.reference_reports
    if reference is None:
        reference = np.full(env.experts, float(belief))
    return env.policy.best_report(algorithm, expert, belief, reference)


def find_untruthful_witness(
    factory: Callable[[np.ndarray], BanditAlgorithm],
    probabilities: Sequence[float] = (0.05, 0.1, 0.2, 0.3, 0.5),
    beliefs: Sequence[float] = (0.2, 0.35, 0.5, 0.65, 0.8),
    resolution: float = DEFAULT_GRID,
) -> Optional[Tuple[List[float], float, float]]:
    """
    Search two-expert states for a belief whose best report misses it by more
    than the grid resolution.

    Args:
        factory: Builds the learner from initial weights
        probabilities: Candidate weights of expert 0
        beliefs: Candidate beliefs of expert 0

    Returns:
        (weights, belief, report) of the first witness, or None
    """
    policy = StrategicReportPolicy(resolution)
    for probability in probabilities:
        weights = np.array([probability, 1.0 - probability])
        algorithm = factory(weights)
        for belief in beliefs:
            reference = np.array([belief, belief])
            report = policy.best_report(algorithm, 0, belief, reference)
            if abs(report - belief) > resolution + 1e-12:
                logger.debug(
                    "Untruthful report found",
                    extra={"algorithm": algorithm.name, "belief": belief, "report": report},
                )
                return weights.tolist(), belief, report
    return None
