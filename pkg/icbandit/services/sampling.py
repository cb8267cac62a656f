"""
Arm sampling by CDF inversion.
"""

import numpy as np

from icbandit.models.core import SimplexDistribution


def arm_from_uniform(weights: np.ndarray, u: float) -> int:
    """
    Invert the cumulative sums of `weights` at `u` in [0, 1).

    Arm i owns the interval (cdf_{i-1}, cdf_i]; a draw on a boundary goes to the
    lower index, and zero-width intervals are skipped.
    """
    cdf = np.cumsum(weights)
    last = weights.size - 1
    index = min(int(np.searchsorted(cdf, u, side="left")), last)
    while index < last and weights[index] == 0.0:
        index += 1
    return index


def sample_arm(distribution: SimplexDistribution, rng: np.random.Generator) -> int:
    """
    Draw one arm with probability equal to its weight.

    Args:
        distribution: Validated sampling distribution
        rng: Generator; exactly one uniform double is consumed

    Returns:
        Arm index in [0, K)
    """
    return arm_from_uniform(distribution.weights, float(rng.random()))
