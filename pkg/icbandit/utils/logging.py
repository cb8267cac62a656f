"""
Structured logging for harness runs.
"""

import json
import logging
import time
from typing import Any, Dict, Optional

from icbandit.config import Settings

# Attributes present on every LogRecord; everything else came in through `extra=`.
_RESERVED = frozenset(
    logging.LogRecord("", 0, "", 0, "", None, None).__dict__.keys()
) | {"message", "asctime"}


class JsonFormatter(logging.Formatter):
    """Render a record and its `extra` fields as one JSON object per line."""

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            "time": self.formatTime(record, "%Y-%m-%dT%H:%M:%S"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                payload[key] = value
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


def configure_logging(settings: Settings) -> None:
    """
    Install a single stream handler on the package logger.

    Args:
        settings: Runtime settings (log_level, log_format)
    """
    package_logger = logging.getLogger("icbandit")
    package_logger.setLevel(settings.log_level)
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)

    handler = logging.StreamHandler()
    if settings.is_json_logging:
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
    package_logger.addHandler(handler)
    package_logger.propagate = False


class RunLogger:
    """Structured logger for the lifecycle of one seeded run."""

    def __init__(self, algorithm: str, environment: str, seed: int, name: str = "icbandit.runs"):
        """Initialize run logger."""
        self.logger = logging.getLogger(name)
        self.context = {"algorithm": algorithm, "environment": environment, "seed": seed}
        self._started: Optional[float] = None

    def log_run_started(self, horizon: int, experts: int, mode: str) -> None:
        """
        Log the start of a run.

        Args:
            horizon: Number of rounds T
            experts: Number of experts K
            mode: strict or scan
        """
        self._started = time.perf_counter()
        self.logger.info(
            "Run started",
            extra={**self.context, "horizon": horizon, "experts": experts, "mode": mode},
        )

    def log_checkpoint(self, round_index: int, pseudo_regret: float) -> None:
        """Log a recorded checkpoint."""
        self.logger.debug(
            "Checkpoint recorded",
            extra={**self.context, "round": round_index, "pseudo_regret": pseudo_regret},
        )

    def log_breach(self, round_index: int, reason: str) -> None:
        """Log a validity breach."""
        self.logger.warning(
            "Validity breach",
            extra={**self.context, "round": round_index, "reason": reason},
        )

    def log_renormalization(self, round_index: int, weight_sum: float) -> None:
        """Log the scan-mode repair that lets a run continue after a breach."""
        self.logger.warning(
            "Scan mode renormalized weights",
            extra={**self.context, "round": round_index, "weight_sum": weight_sum},
        )

    def log_run_completed(self, pseudo_regret: float, breaches: int) -> float:
        """
        Log a completed run.

        Returns:
            Wall-clock seconds since log_run_started
        """
        elapsed = self.elapsed()
        self.logger.info(
            "Run completed",
            extra={
                **self.context,
                "pseudo_regret": pseudo_regret,
                "breaches": breaches,
                "duration_s": elapsed,
            },
        )
        return elapsed

    def log_run_failed(self, error: Exception) -> None:
        """Log a run aborted by an error."""
        self.logger.error(
            "Run failed",
            extra={**self.context, "error": str(error), "duration_s": self.elapsed()},
            exc_info=True,
        )

    def elapsed(self) -> float:
        """Seconds since the run started (0 if it never started)."""
        if self._started is None:
            return 0.0
        return time.perf_counter() - self._started
