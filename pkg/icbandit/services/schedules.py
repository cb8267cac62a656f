"""
Learning-rate schedules and tuned parameter constructors.

Tuned constructors take (K, T) and fix the absolute constants left open by
order-of-magnitude tunings:

- BWSU: eta = sqrt(log K / (K T)), gamma = 2 eta K (so eta K / gamma = 1/2).
- WSU-UX, T^(2/3) regime: gamma = (K log K / T)^(1/3) capped at 1/2, eta = gamma / (2K).
- LB-Prod: eta = sqrt(K log T / (2T)), valid for T > K log T / 2.
- Exp3: eta = sqrt(2 log K / (K T)), exploration gamma = min(K eta, 1/2).
- TS-Prod: eta_t = 1/sqrt(c0 + 26t), eta_0 = 1/sqrt(c0), C_t = 13/2 + 1/eta_t^2 - 1/(eta_t eta_{t-1}).
"""

import math
from typing import Tuple, Union

import numpy as np

from icbandit.errors import ConfigurationError

ArrayLike = Union[int, float, np.ndarray]

TS_SLOPE = 26.0
TS_BIAS_CONSTANT = 6.5
WSU_MAX_RATIO = 0.5
EXP3_MAX_EXPLORATION = 0.5


def _check_shape(experts: int, horizon: int) -> None:
    if experts < 2:
        raise ConfigurationError(f"Need at least two experts, got K={experts}")
    if horizon < 1:
        raise ConfigurationError(f"Horizon must be positive, got T={horizon}")


def lb_tuned_eta(experts: int, horizon: int) -> float:
    """
    LB-Prod learning rate sqrt(K log T / (2T)).

    Raises:
        ConfigurationError: Unless T >= 2 and T > K log T / 2, the range in which
            the rate lies in (0, 1)
    """
    _check_shape(experts, horizon)
    threshold = experts * math.log(horizon) / 2.0
    if horizon < 2 or not horizon > threshold:
        raise ConfigurationError(
            f"LB-Prod tuning needs T > K*log(T)/2; got K={experts}, T={horizon} "
            f"(K*log(T)/2 = {threshold:.4f})",
            details={"experts": experts, "horizon": horizon, "threshold": threshold},
        )
    return math.sqrt(experts * math.log(horizon) / (2.0 * horizon))


def bwsu_tuned_params(experts: int, horizon: int) -> Tuple[float, float]:
    """(eta, gamma) for the loss-biased WSU-UX."""
    _check_shape(experts, horizon)
    eta = math.sqrt(math.log(experts) / (experts * horizon))
    gamma = 2.0 * eta * experts
    if gamma >= 1.0:
        raise ConfigurationError(
            f"BWSU tuning needs T > 4K*log(K); got K={experts}, T={horizon}",
            details={"experts": experts, "horizon": horizon, "gamma": gamma},
        )
    return eta, gamma


def wsu_ux_tuned_params(experts: int, horizon: int) -> Tuple[float, float]:
    """(eta, gamma) for the unbiased WSU-UX in its T^(2/3) regime."""
    _check_shape(experts, horizon)
    gamma = min((experts * math.log(experts) / horizon) ** (1.0 / 3.0), 0.5)
    return gamma / (2.0 * experts), gamma


def exp3_tuned_eta(experts: int, horizon: int) -> float:
    """Exp3 learning rate sqrt(2 log K / (K T))."""
    _check_shape(experts, horizon)
    return math.sqrt(2.0 * math.log(experts) / (experts * horizon))


def exp3_exploration(experts: int, eta: float) -> float:
    """Uniform-exploration share min(K eta, 1/2); bounds the importance-weighted loss by K / gamma."""
    return min(experts * eta, EXP3_MAX_EXPLORATION)


def check_wsu_params(experts: int, eta: float, gamma: float, biased: bool) -> None:
    """
    Validate WSU-UX parameters.

    Raises:
        ConfigurationError: If eta <= 0, gamma outside (0, 1) or eta K / gamma > 1/2
    """
    if not eta > 0.0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"gamma must lie in (0, 1), got {gamma}")
    ratio = eta * experts / gamma
    if ratio > WSU_MAX_RATIO * (1.0 + 1e-12):
        raise ConfigurationError(
            f"{'BWSU' if biased else 'WSU-UX'} needs eta*K/gamma <= 1/2, got {ratio:.6g}",
            details={"eta": eta, "gamma": gamma, "experts": experts, "ratio": ratio},
        )


def ts_eta(t: ArrayLike, c0: float) -> ArrayLike:
    """eta_t = 1/sqrt(c0 + 26t); t = 0 gives eta_0 = 1/sqrt(c0)."""
    return 1.0 / np.sqrt(c0 + TS_SLOPE * np.asarray(t, dtype=np.float64))


def ts_schedule(t: ArrayLike, c0: float) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """
    TS-Prod schedule at round t (scalar or array).

    Returns:
        (eta_t, eta_{t-1}, C_t); C_t uses the cancellation-free form
        13/2 + 26x / (x + sqrt(x(x - 26))) with x = c0 + 26t

    Raises:
        ConfigurationError: If t < 1 or c0 < 1
    """
    rounds = np.asarray(t, dtype=np.float64)
    if np.any(rounds < 1) or c0 < 1:
        raise ConfigurationError(f"TS schedule needs t >= 1 and c0 >= 1, got c0={c0}")
    x = c0 + TS_SLOPE * rounds
    eta = 1.0 / np.sqrt(x)
    eta_prev = 1.0 / np.sqrt(x - TS_SLOPE)
    bias_scale = TS_BIAS_CONSTANT + TS_SLOPE * x / (x + np.sqrt(x * (x - TS_SLOPE)))
    if rounds.ndim == 0:
        return float(eta), float(eta_prev), float(bias_scale)
    return eta, eta_prev, bias_scale


def ts_omd_eta(t: ArrayLike) -> ArrayLike:
    """Dual-stabilized OMD step eta_t = 1/sqrt(t)."""
    return 1.0 / np.sqrt(np.asarray(t, dtype=np.float64))


def ts_omd_gamma(t: int, experts: int) -> float:
    """Implicit-exploration offset gamma_t = sqrt(K)/t."""
    return math.sqrt(experts) / t
