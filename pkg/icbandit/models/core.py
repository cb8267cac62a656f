"""
Core domain types: distributions over experts, loss vectors, bandit feedback and
the regret ledger.

These sit on the per-round hot path, so they are slotted classes validated with
numpy rather than pydantic models.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from icbandit.errors import ConfigurationError, InvariantViolation, OutOfRangeError

DEFAULT_TOLERANCE = 1e-9

UNIT_RANGE: Tuple[float, float] = (0.0, 1.0)
SIGNED_RANGE: Tuple[float, float] = (-1.0, 1.0)


class SimplexDistribution:
    """
    Probability vector over K >= 2 experts.

    The constructor validates, it never repairs: a vector whose sum is off by more
    than `tolerance`, or with a non-positive entry, raises InvariantViolation.
    `require_positive=False` admits point masses (used only for sampling checks).
    """

    __slots__ = ("_weights", "tolerance")

    def __init__(
        self,
        weights: np.ndarray,
        tolerance: float = DEFAULT_TOLERANCE,
        require_positive: bool = True,
    ):
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise InvariantViolation(
                "A distribution needs a 1-d vector over at least two experts",
                details={"shape": list(w.shape)},
            )
        if not np.all(np.isfinite(w)):
            raise InvariantViolation(
                "Distribution has non-finite entries", details={"weights": w.tolist()}
            )
        total = float(w.sum())
        if abs(total - 1.0) > tolerance:
            raise InvariantViolation(
                f"Distribution sums to {total!r}, outside tolerance {tolerance}",
                details={"weights": w.tolist(), "sum": total},
            )
        if require_positive:
            if np.any(w <= 0.0) or np.any(w >= 1.0):
                raise InvariantViolation(
                    "Distribution entries must lie strictly inside (0, 1)",
                    details={"weights": w.tolist()},
                )
        elif np.any(w < 0.0):
            raise InvariantViolation(
                "Distribution entries must be non-negative", details={"weights": w.tolist()}
            )
        w.flags.writeable = False
        self._weights = w
        self.tolerance = tolerance

    @classmethod
    def uniform(cls, experts: int, tolerance: float = DEFAULT_TOLERANCE) -> "SimplexDistribution":
        """Uniform distribution over `experts` arms."""
        return cls(np.full(experts, 1.0 / experts), tolerance=tolerance)

    @property
    def weights(self) -> np.ndarray:
        """Read-only weight vector."""
        return self._weights

    @property
    def experts(self) -> int:
        return int(self._weights.size)

    def __len__(self) -> int:
        return self.experts

    def __getitem__(self, index: int) -> float:
        return float(self._weights[index])

    def __repr__(self) -> str:
        return f"SimplexDistribution({self._weights.tolist()})"


class LossVector:
    """Full loss vector for one round with its declared range."""

    __slots__ = ("losses", "loss_range")

    def __init__(self, losses: np.ndarray, loss_range: Tuple[float, float] = UNIT_RANGE):
        if loss_range not in (UNIT_RANGE, SIGNED_RANGE):
            raise ConfigurationError(
                f"Loss range must be [0, 1] or [-1, 1], got {list(loss_range)}"
            )
        values = np.array(losses, dtype=np.float64)
        low, high = loss_range
        if values.ndim != 1 or np.any(values < low) or np.any(values > high):
            raise InvariantViolation(
                f"Losses outside the declared range [{low}, {high}]",
                details={"losses": values.tolist()},
            )
        values.flags.writeable = False
        self.losses = values
        self.loss_range = loss_range

    @property
    def experts(self) -> int:
        return int(self.losses.size)

    def __getitem__(self, index: int) -> float:
        return float(self.losses[index])


@dataclass(frozen=True, slots=True)
class BanditFeedback:
    """The chosen arm and its observed loss; the only input of an update."""

    round: int
    arm: int
    loss: float

    def validate(self, experts: int, loss_range: Tuple[float, float]) -> None:
        """
        Check the feedback against an algorithm's shape.

        Raises:
            InvariantViolation: If the arm or the loss is out of range
        """
        if self.round < 1:
            raise InvariantViolation(f"Round must be positive, got {self.round}")
        if not 0 <= self.arm < experts:
            raise InvariantViolation(f"Arm {self.arm} out of range for K={experts}")
        low, high = loss_range
        if not low <= self.loss <= high:
            raise InvariantViolation(
                f"Loss {self.loss} outside the declared range [{low}, {high}]"
            )


class RegretLedger:
    """
    Running totals for pseudo-regret accounting.

    Tracks the expected play loss sum_t <p_t, l_t> (p_t being the sampling
    distribution), the cumulative loss of every arm and the realized loss of the
    played arms. The comparator minimum is taken at query time.
    """

    def __init__(self, experts: int, keep_history: bool = False):
        self.experts = experts
        self.rounds = 0
        self.expected_loss = 0.0
        self.realized_loss = 0.0
        self.per_arm_cumulative_loss = np.zeros(experts, dtype=np.float64)
        self.keep_history = keep_history
        self._expected_history: List[float] = []
        self._arm_history: List[np.ndarray] = []
        self._realized_history: List[float] = []

    def record(self, distribution: np.ndarray, losses: np.ndarray, arm: int) -> None:
        """
        Account one round.

        Args:
            distribution: Sampling distribution of the round
            losses: Full hidden loss vector of the round
            arm: Played arm
        """
        self.rounds += 1
        self.expected_loss += float(np.dot(distribution, losses))
        self.per_arm_cumulative_loss += losses
        self.realized_loss += float(losses[arm])
        if self.keep_history:
            self._expected_history.append(self.expected_loss)
            self._arm_history.append(self.per_arm_cumulative_loss.copy())
            self._realized_history.append(self.realized_loss)

    def totals(self, t: int) -> Tuple[float, np.ndarray, float]:
        """
        Expected loss, per-arm cumulative loss and realized loss after t rounds.

        Raises:
            OutOfRangeError: If t exceeds the accumulated rounds, or precedes the
                current round while no history is kept
        """
        if t < 0 or t > self.rounds:
            raise OutOfRangeError(
                f"Round {t} is beyond the {self.rounds} accumulated rounds",
                details={"round": t, "accumulated": self.rounds},
            )
        if t == self.rounds:
            return self.expected_loss, self.per_arm_cumulative_loss, self.realized_loss
        if t == 0:
            return 0.0, np.zeros(self.experts), 0.0
        if not self.keep_history:
            raise OutOfRangeError(
                f"Round {t} precedes the current round {self.rounds} and no history is kept",
                details={"round": t, "accumulated": self.rounds},
            )
        return (
            self._expected_history[t - 1],
            self._arm_history[t - 1],
            self._realized_history[t - 1],
        )

    def realized_regret(self, t: Optional[int] = None) -> float:
        """Realized loss of the played arms minus the best arm's cumulative loss."""
        _, per_arm, realized = self.totals(self.rounds if t is None else t)
        return realized - float(per_arm.min()) if per_arm.size else 0.0

