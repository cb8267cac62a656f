"""
Experiment configuration files.

A configuration is a flat `key = value` file with three sections:

    [experiment]
    horizon = 10000
    seeds = 20
    cadence = geometric

    [algorithm]
    name = lb-prod
    tuned = true

    [environment]
    name = switching
    experts = 2
    switches = 2

Every section is a pydantic model with `extra="forbid"`; keys that exist but do
not apply to the chosen algorithm or environment are rejected too. See
docs/configuration.md for the full key reference.
"""

import configparser
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from icbandit.errors import ConfigurationError

AlgorithmName = Literal["exp3", "wsu-ux", "bwsu", "lb-prod", "ts-prod", "ts-omd-ds"]
EnvironmentName = Literal["bernoulli", "switching", "uniform", "matrix", "forecasting"]

SECTIONS = ("experiment", "algorithm", "environment")

# Environment keys beyond `name` that each generator accepts.
ENVIRONMENT_KEYS = {
    "bernoulli": {"means"},
    "switching": {"experts", "period", "switches", "low", "high"},
    "uniform": {"experts", "low", "high"},
    "matrix": {"path", "experts", "low", "high"},
    "forecasting": {"experts", "strategic", "grid", "calibrated"},
}


def _split(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class ExperimentSection(BaseModel):
    """[experiment]: horizon, seeds, output and run mode."""

    model_config = ConfigDict(extra="forbid")

    horizon: int = Field(..., ge=0)
    seeds: List[int] = Field(default_factory=lambda: [0])
    base_seed: int = Field(0, ge=0)
    output: str = "./results"
    cadence: Literal["geometric", "every"] = "geometric"
    mode: Literal["strict", "scan"] = "strict"
    threads: int = Field(1, ge=1)
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])

    @model_validator(mode="before")
    @classmethod
    def expand_seed_count(cls, data: Any) -> Any:
        """`seeds = 20` means 20 consecutive seeds from base_seed; a comma list is taken as is."""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if "seeds" not in data:
            data["seeds"] = [int(data.get("base_seed", 0))]
            return data
        seeds = data["seeds"]
        if isinstance(seeds, int) or (isinstance(seeds, str) and "," not in seeds):
            count = int(seeds)
            if count < 1:
                raise ValueError("seeds must be a positive count or a comma-separated list")
            base = int(data.get("base_seed", 0))
            data["seeds"] = list(range(base, base + count))
        else:
            data["seeds"] = _split(seeds)
        return data

    @field_validator("formats", mode="before")
    @classmethod
    def split_formats(cls, v: Any) -> Any:
        return _split(v)

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("at least one seed is required")
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        if any(seed < 0 or seed >= 2**64 for seed in v):
            raise ValueError("seeds must be 64-bit unsigned integers")
        return v


class AlgorithmSection(BaseModel):
    """[algorithm]: id plus either `tuned = true` or explicit parameters."""

    model_config = ConfigDict(extra="forbid")

    name: AlgorithmName
    tuned: bool = True
    eta: Optional[float] = Field(None, gt=0.0)
    gamma: Optional[float] = Field(None, gt=0.0, lt=1.0)
    c0: Optional[float] = Field(None, ge=1.0)
    linearized: bool = False

    @model_validator(mode="after")
    def reject_inapplicable_keys(self) -> "AlgorithmSection":
        given = self.model_fields_set
        allowed = {"name", "tuned"}
        if self.name == "ts-prod":
            allowed |= {"c0"}
        elif self.name == "ts-omd-ds":
            allowed |= {"linearized"}
        elif not self.tuned:
            allowed |= {"eta", "gamma"} if self.name in ("wsu-ux", "bwsu", "exp3") else {"eta"}
        extra = sorted(given - allowed)
        if extra:
            raise ValueError(f"keys {extra} do not apply to algorithm '{self.name}'")
        if self.name in ("exp3", "lb-prod", "wsu-ux", "bwsu") and not self.tuned:
            required = {"eta", "gamma"} if self.name in ("wsu-ux", "bwsu") else {"eta"}
            missing = sorted(required - given)
            if missing:
                raise ValueError(f"keys {missing} are required when tuned = false")
        return self


class EnvironmentSection(BaseModel):
    """[environment]: generator id and its parameters."""

    model_config = ConfigDict(extra="forbid")

    name: EnvironmentName
    means: Optional[List[float]] = None
    experts: Optional[int] = Field(None, ge=2)
    period: Optional[int] = Field(None, ge=1)
    switches: Optional[int] = Field(None, ge=0)
    low: float = 0.0
    high: float = 1.0
    path: Optional[str] = None
    strategic: Optional[str] = None
    grid: float = Field(0.01, gt=0.0, le=0.5)
    calibrated: int = Field(0, ge=0)

    @field_validator("means", mode="before")
    @classmethod
    def split_means(cls, v: Any) -> Any:
        return _split(v)

    @model_validator(mode="after")
    def check_keys(self) -> "EnvironmentSection":
        given = self.model_fields_set - {"name"}
        extra = sorted(given - ENVIRONMENT_KEYS[self.name])
        if extra:
            raise ValueError(f"keys {extra} do not apply to environment '{self.name}'")
        if self.name == "bernoulli" and (self.means is None or len(self.means) < 2):
            raise ValueError("bernoulli needs means for at least two arms")
        if self.name == "switching" and (self.period is None) == (self.switches is None):
            raise ValueError("switching needs exactly one of period or switches")
        if self.name == "matrix" and not self.path:
            raise ValueError("matrix needs a path")
        if self.name in ("switching", "uniform", "forecasting") and self.experts is None:
            raise ValueError(f"{self.name} needs experts")
        if self.low >= self.high or self.low < -1.0 or self.high > 1.0:
            raise ValueError("need -1 <= low < high <= 1")
        if self.name == "forecasting" and self.calibrated >= (self.experts or 0):
            raise ValueError("calibrated must index an expert")
        return self

    @property
    def signed(self) -> bool:
        return self.low < 0.0

    def strategic_experts(self) -> List[int]:
        """Indices of strategic forecasters: `all`, a comma list, or none."""
        if not self.strategic or self.strategic.strip().lower() == "none":
            return []
        if self.strategic.strip().lower() == "all":
            return list(range(self.experts or 0))
        try:
            return [int(item) for item in _split(self.strategic)]
        except ValueError as e:
            raise ConfigurationError(f"Invalid strategic expert list: {self.strategic}") from e

    def declared_experts(self) -> Optional[int]:
        """K when it is known without reading files."""
        if self.name == "bernoulli":
            return len(self.means or [])
        return self.experts


class ExperimentConfig(BaseModel):
    """A full, validated experiment configuration."""

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentSection
    algorithm: AlgorithmSection
    environment: EnvironmentSection

    @model_validator(mode="after")
    def check_loss_range(self) -> "ExperimentConfig":
        if self.environment.signed and self.algorithm.name != "lb-prod":
            raise ValueError("losses in [-1, 1] are only supported by lb-prod")
        return self

    def with_overrides(self, **experiment: Any) -> "ExperimentConfig":
        """Copy with [experiment] keys replaced (CLI flags); None values are ignored."""
        updates = {k: v for k, v in experiment.items() if v is not None}
        if not updates:
            return self
        data = self.experiment.model_dump()
        if "seeds" in updates or "base_seed" in updates:
            count = updates.pop("seeds", len(data["seeds"]))
            base = updates.pop("base_seed", data["seeds"][0])
            data["seeds"] = list(range(base, base + int(count)))
            data["base_seed"] = base
        data.update(updates)
        try:
            section = ExperimentSection.model_validate(data)
        except ValidationError as e:
            raise _as_configuration_error(e, "command line") from e
        return self.model_copy(update={"experiment": section})

    def with_horizon(self, horizon: int) -> "ExperimentConfig":
        section = self.experiment.model_copy(update={"horizon": horizon})
        return self.model_copy(update={"experiment": section})

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _as_configuration_error(error: ValidationError, source: str) -> ConfigurationError:
    problems = [
        {"location": ".".join(str(part) for part in item["loc"]), "message": item["msg"]}
        for item in error.errors()
    ]
    summary = "; ".join(f"{p['location']}: {p['message']}" for p in problems)
    return ConfigurationError(f"Invalid configuration in {source}: {summary}", details={"errors": problems})


def parse_experiment_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """
    Parse configuration text.

    Raises:
        ConfigurationError: Syntax errors, unknown sections or keys, invalid values
    """
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None, default_section="__defaults__"
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"Cannot parse {source}: {e}") from e
    unknown = sorted(set(parser.sections()) - set(SECTIONS))
    if unknown:
        raise ConfigurationError(f"Unknown sections in {source}: {unknown}")
    missing = [name for name in SECTIONS if not parser.has_section(name)]
    if missing:
        raise ConfigurationError(f"Missing sections in {source}: {missing}")
    data = {name: dict(parser.items(name)) for name in SECTIONS}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise _as_configuration_error(e, source) from e


def load_experiment_config(path: Path) -> ExperimentConfig:
    """
    Read and validate a configuration file.

    Raises:
        ConfigurationError: If the file cannot be read or fails validation
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read configuration {path}: {e}") from e
    return parse_experiment_config(text, source=str(path))
