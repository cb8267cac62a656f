"""
Oracle and verification report models.
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

CheckStatus = Literal["pass", "fail", "expected-non-ic", "documented-breach", "hypothesis-unmet"]

# Statuses that count toward a passing suite.
PASSING_STATUSES = frozenset({"pass", "expected-non-ic", "documented-breach"})


class MomentReport(BaseModel):
    """Exact per-arm moments of the increment l~_i - lambda_i, enumerated over the played arm."""

    model_config = ConfigDict(frozen=True)

    rule: str
    experts: int
    first_moment: List[float]
    second_moment: List[float]
    closed_form_first: List[float]
    first_residual: List[float]
    second_bound: List[float]
    normalizer: float = Field(..., description="c_t of the closed form")
    hypothesis_met: bool = True
    bound_violations: int = 0

    @property
    def max_first_residual(self) -> float:
        return max(self.first_residual) if self.first_residual else 0.0

    @property
    def holds(self) -> bool:
        """Both claims hold (only meaningful when the hypothesis is met)."""
        return self.hypothesis_met and self.bound_violations == 0


class AffineReport(BaseModel):
    """Affine fit of loss -> next-round probability of one arm."""

    model_config = ConfigDict(frozen=True)

    arm: int
    played: bool
    slope: float
    intercept: float
    max_residual: float = Field(..., ge=0.0)
    grid_points: int = Field(..., ge=3)

    @property
    def slope_negative(self) -> Optional[bool]:
        """Sign check, reported only for the played arm."""
        return self.slope < 0.0 if self.played else None


class ValidityScan(BaseModel):
    """Minimum-probability trace of TS-Prod against its lower bound C_t^2 eta_t^2."""

    experts: int
    c0: float
    horizon: int
    trials: int
    first_breach_round: Optional[int] = None
    breach_trials: int = 0
    rounds: List[int] = Field(default_factory=list)
    min_prob_trace: List[float] = Field(default_factory=list)
    bound_trace: List[float] = Field(default_factory=list)

    @property
    def breached(self) -> bool:
        return self.first_breach_round is not None

    @property
    def bound_held(self) -> bool:
        """min_i pi_{t,i} > C_t^2 eta_t^2 at every recorded round."""
        return all(p > b for p, b in zip(self.min_prob_trace, self.bound_trace))


class PerturbationResult(BaseModel):
    """Root of the perturbation equation for one (eta, pi_i, L_i)."""

    model_config = ConfigDict(frozen=True)

    eta: float
    probability: float
    estimate: float
    epsilon: float
    residual: float
    scaled_step: float = Field(..., description="eta * sqrt(pi) * L")


class CheckResult(BaseModel):
    """One battery inside a verification suite."""

    suite: str
    name: str
    status: CheckStatus
    cases: int = 0
    detail: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in PASSING_STATUSES


class VerificationReport(BaseModel):
    """Machine-readable result of `icbandit verify`."""

    version: str
    suites: List[str]
    # Algorithm filter of the per-algorithm suites; None runs all of them
    algorithms: Optional[List[str]] = None
    full: bool = False
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def summary(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for check in self.checks:
            counts[check.status] = counts.get(check.status, 0) + 1
        return counts


class SimplexFuzzReport(BaseModel):
    """Outcome of driving one algorithm with random arms and losses."""

    algorithm: str
    experts: int
    steps: int
    seed: int
    breaches: int = 0
    max_sum_error: float = 0.0
    min_weight: float = 1.0

    @property
    def clean(self) -> bool:
        return self.breaches == 0 and self.max_sum_error <= 1e-9 and self.min_weight > 0.0
