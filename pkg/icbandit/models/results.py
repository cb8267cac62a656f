"""
Experiment result models and their canonical serialization.
"""

import json
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

# Fields that carry wall-clock measurements; everything else is determined by
# (config, seeds).
TIMING_FIELDS = frozenset({"wall_clock_s"})


class BreachEvent(BaseModel):
    """A validity breach observed during a run."""

    algorithm: str
    seed: int
    round: int
    reason: str
    weight_sum: float
    min_weight: float
    renormalized: bool = False


class SeedTrajectory(BaseModel):
    """Regret trajectory of one seed at the shared checkpoints."""

    seed: int
    pseudo_regret: List[float] = Field(default_factory=list)
    realized_regret: List[float] = Field(default_factory=list)
    breaches: List[BreachEvent] = Field(default_factory=list)
    failed: bool = False
    # Algorithm parameters and counters at the end of the run
    diagnostics: Dict[str, float] = Field(default_factory=dict)
    wall_clock_s: float = 0.0


class ExperimentResult(BaseModel):
    """Per-seed trajectories, the cross-seed summary and the config echo."""

    version: str
    config: Dict[str, Any]
    algorithm: str
    environment: str
    horizon: int
    experts: int
    environment_parameters: Dict[str, Any] = Field(default_factory=dict)
    checkpoints: List[int] = Field(default_factory=list)
    seeds: List[SeedTrajectory] = Field(default_factory=list)
    mean: List[float] = Field(default_factory=list)
    stderr: List[float] = Field(default_factory=list)

    @property
    def breaches(self) -> List[BreachEvent]:
        return [event for trajectory in self.seeds for event in trajectory.breaches]

    @property
    def final_mean(self) -> float:
        return self.mean[-1] if self.mean else 0.0

    def canonical_json(self, include_timing: bool = True) -> str:
        """
        Serialize with sorted keys and fixed indentation.

        Args:
            include_timing: Keep wall-clock fields (drop them to compare runs)

        Returns:
            JSON text; parsing and re-serializing it yields identical bytes
        """
        payload = self.model_dump(mode="json")
        if not include_timing:
            payload = _strip_timing(payload)
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _strip_timing(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _strip_timing(v) for k, v in value.items() if k not in TIMING_FIELDS}
    if isinstance(value, list):
        return [_strip_timing(v) for v in value]
    return value


class ScalingReport(BaseModel):
    """Mean-regret ratios across geometrically spaced horizons."""

    algorithm: str
    environment: str
    horizons: List[int]
    final_mean: List[float]
    ratios: List[float]
    seeds: int
    reference_sqrt: float = 2.0
    reference_log: Optional[List[float]] = None
