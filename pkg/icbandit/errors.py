"""
Exception hierarchy and the exception-to-exit-code transformation used by the CLI.
"""

from typing import Any, Dict, Optional

import numpy as np


class BanditError(Exception):
    """Base class for every error raised by the package."""

    code = "INTERNAL_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(BanditError):
    """Invalid parameters or configuration, detected before any round runs."""

    code = "CONFIG_ERROR"


class InputError(BanditError):
    """Malformed or exhausted external input (loss files, round ordering)."""

    code = "INPUT_ERROR"


class InvariantViolation(BanditError):
    """An algorithm produced a state outside its documented invariants."""

    code = "INVARIANT_VIOLATION"


class SimplexBreach(InvariantViolation):
    """
    A proposed probability vector left the open simplex.

    Carries everything needed to reproduce the step: the algorithm id, the round,
    the weights before the step, the proposed weights and the feedback.
    """

    code = "SIMPLEX_BREACH"

    def __init__(
        self,
        algorithm: str,
        round_index: int,
        weights: np.ndarray,
        proposed: np.ndarray,
        arm: int,
        loss: float,
        reason: str,
    ):
        self.algorithm = algorithm
        self.round_index = round_index
        self.weights = np.array(weights, dtype=np.float64)
        self.proposed = np.array(proposed, dtype=np.float64)
        self.arm = arm
        self.loss = loss
        self.reason = reason
        super().__init__(
            f"{algorithm}: simplex breach at round {round_index} ({reason})",
            details={
                "algorithm": algorithm,
                "round": round_index,
                "arm": arm,
                "loss": loss,
                "reason": reason,
                "weights": self.weights.tolist(),
                "proposed": self.proposed.tolist(),
            },
        )


class NumericalError(BanditError):
    """A numerical routine failed to converge or bracket its root."""

    code = "NUMERICAL_ERROR"


class DomainError(BanditError, ValueError):
    """An oracle was called outside the region where its statement holds."""

    code = "DOMAIN_ERROR"


class OutOfRangeError(BanditError, IndexError):
    """A query referenced a round the ledger has not accumulated."""

    code = "OUT_OF_RANGE"


class OutputError(BanditError):
    """The output directory or a result file could not be written."""

    code = "IO_ERROR"


class RunFailure(BanditError):
    """A strict-mode run aborted on an invariant violation."""

    code = "RUN_FAILURE"


class ErrorTransformer:
    """Transform package errors to CLI exit codes and error payloads."""

    EXIT_CODES = {
        ConfigurationError: 1,
        InputError: 1,
        DomainError: 1,
        InvariantViolation: 2,
        NumericalError: 2,
        RunFailure: 2,
        OutOfRangeError: 2,
        OutputError: 3,
    }

    def exit_code(self, error: BaseException) -> int:
        """
        Get the process exit code for an error.

        Args:
            error: Exception raised by a CLI command

        Returns:
            1 for configuration/input errors, 2 for run failures, 3 for I/O errors
        """
        for error_type, code in self.EXIT_CODES.items():
            if isinstance(error, error_type):
                return code
        if isinstance(error, OSError):
            return 3
        return 2

    def transform_error(self, error: BaseException) -> Dict[str, Any]:
        """
        Transform an error to the payload printed on stderr.

        Args:
            error: Exception to transform

        Returns:
            Error response dict
        """
        if isinstance(error, BanditError):
            return {
                "error": {
                    "code": error.code,
                    "message": error.message,
                    "exit_code": self.exit_code(error),
                    "details": error.details,
                }
            }

        return {
            "error": {
                "code": "IO_ERROR" if isinstance(error, OSError) else "INTERNAL_ERROR",
                "message": str(error),
                "exit_code": self.exit_code(error),
                "details": {"type": type(error).__name__},
            }
        }
