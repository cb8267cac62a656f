#!/usr/bin/env python3
"""
Rebuild summary.csv from trajectories.csv without importing icbandit.

    scripts/recompute_summary.py results/trajectories.csv [--out summary.csv]

Mean and standard error (std with ddof=1 over sqrt(n), 0 for one seed) per
checkpoint. Compare the output against the emitted summary.csv to check the
harness aggregation independently.
"""

import argparse
import sys
from pathlib import Path

import pandas as pd


def recompute_summary(trajectories: Path) -> pd.DataFrame:
    """Per-checkpoint mean, stderr and seed count from a per-seed trajectory file."""
    frame = pd.read_csv(trajectories, float_precision="round_trip")
    missing = {"t", "seed", "pseudo_regret"} - set(frame.columns)
    if missing:
        raise ValueError(f"{trajectories} lacks columns {sorted(missing)}")
    grouped = frame.groupby("t", sort=True)["pseudo_regret"]
    summary = pd.DataFrame(
        {
            "mean": grouped.mean(),
            "stderr": grouped.std(ddof=1) / grouped.count() ** 0.5,
            "n_seeds": grouped.count(),
        }
    ).reset_index()
    summary["stderr"] = summary["stderr"].fillna(0.0)
    return summary[["t", "mean", "stderr", "n_seeds"]]


def main() -> int:
    parser = argparse.ArgumentParser(description="Recompute summary.csv from trajectories.csv")
    parser.add_argument("trajectories", type=Path)
    parser.add_argument("--out", type=Path, help="write here instead of stdout")
    args = parser.parse_args()

    try:
        summary = recompute_summary(args.trajectories)
    except (OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    text = summary.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    if args.out:
        args.out.write_text(text, encoding="utf-8")
        print(f"✓ Wrote {args.out} ({len(summary)} checkpoints)")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
