"""
CSV and JSON emission for experiment results.

Files written per result:

- trajectories.csv: t,seed,pseudo_regret (one row per checkpoint per seed)
- summary.csv: t,mean,stderr,n_seeds
- result.json: the full ExperimentResult with config echo and version

Floats are written with 17 significant digits so values read back exactly.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List

import pandas as pd

from icbandit.models.results import ExperimentResult
from icbandit.utils.io import ensure_writable_directory, write_atomic

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TRAJECTORY_FILE = "trajectories.csv"
SUMMARY_FILE = "summary.csv"
RESULT_FILE = "result.json"


def trajectory_frame(result: ExperimentResult) -> pd.DataFrame:
    rows = [
        {"t": t, "seed": trajectory.seed, "pseudo_regret": value}
        for trajectory in result.seeds
        for t, value in zip(result.checkpoints, trajectory.pseudo_regret)
    ]
    return pd.DataFrame(rows, columns=["t", "seed", "pseudo_regret"])


def summary_frame(result: ExperimentResult) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t": result.checkpoints[: len(result.mean)],
            "mean": result.mean,
            "stderr": result.stderr,
            "n_seeds": [len(result.seeds)] * len(result.mean),
        },
        columns=["t", "mean", "stderr", "n_seeds"],
    )


def _csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def emit(result: ExperimentResult, output: Path, formats: Iterable[str] = ("csv", "json")) -> List[Path]:
    """
    Write a result into `output`, each file atomically.

    Args:
        result: Completed experiment result
        output: Target directory (created if missing)
        formats: Any of "csv", "json"

    Returns:
        Paths written

    Raises:
        OutputError: If the directory or a file cannot be written
    """
    directory = ensure_writable_directory(Path(output))
    contents: Dict[str, str] = {}
    if "csv" in formats:
        contents[TRAJECTORY_FILE] = _csv(trajectory_frame(result))
        contents[SUMMARY_FILE] = _csv(summary_frame(result))
    if "json" in formats:
        contents[RESULT_FILE] = result.canonical_json()
    written = []
    for name, text in contents.items():
        path = directory / name
        write_atomic(path, text)
        written.append(path)
    logger.info(
        "Results written",
        extra={"output": str(directory), "files": [p.name for p in written]},
    )
    return written
