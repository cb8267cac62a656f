"""
Pytest configuration and fixtures for testing.
"""

import os

# Pin settings BEFORE importing package modules
os.environ["ENVIRONMENT"] = "test"
os.environ["ICBANDIT_LOG_LEVEL"] = "WARNING"
os.environ["ICBANDIT_LOG_FORMAT"] = "json"

from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from icbandit.config import Settings, reset_settings
from icbandit.models.rng import RngStream
from icbandit.schemas.experiment import ExperimentConfig, parse_experiment_config


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop cached settings around every test."""
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def test_settings():
    """Settings with small verification batteries."""
    return Settings(
        environment="test",
        log_level="WARNING",
        verify_cases=50,
        verify_steps=200,
        verify_seeds=1,
    )


@pytest.fixture
def rng():
    """Seeded numpy generator for drawing test states."""
    return np.random.default_rng(12345)


@pytest.fixture
def stream():
    """Environment stream of seed 7."""
    return RngStream(7, 0)


@pytest.fixture
def switching_config_text(tmp_path):
    """Two-arm switching adversary under tuned LB-Prod."""
    return f"""
[experiment]
horizon = 64
seeds = 3
output = {tmp_path / "out"}

[algorithm]
name = lb-prod
tuned = true

[environment]
name = switching
experts = 2
switches = 2
"""


@pytest.fixture
def make_config(tmp_path) -> Callable[..., ExperimentConfig]:
    """Build a validated config from section overrides."""

    def _make(experiment: str = "", algorithm: str = "", environment: str = "") -> ExperimentConfig:
        text = "\n".join(
            [
                "[experiment]",
                experiment or "horizon = 32\nseeds = 2",
                f"output = {tmp_path / 'out'}",
                "[algorithm]",
                algorithm or "name = lb-prod",
                "[environment]",
                environment or "name = switching\nexperts = 2\nswitches = 1",
            ]
        )
        return parse_experiment_config(text)

    return _make


@pytest.fixture
def config_file(tmp_path, switching_config_text) -> Path:
    """Configuration file on disk."""
    path = tmp_path / "experiment.ini"
    path.write_text(switching_config_text, encoding="utf-8")
    return path
