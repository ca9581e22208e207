"""Closed-form variances/covariances of the smoothed process and its error.

Notation: w is (fractional) Brownian motion with Hurst index H,
w_delta(t) = int_0^t (w(r + delta) - w(r)) / delta dr and X_delta = w_delta - w.

    cov_I(u) = Var w_delta(u)
    cov_J(u) = E w_delta(u) w(u)
    cov_K(u) = Var X_delta(u) = I(u) + |u|^2H - 2 J(u)

Each formula is coded branch by branch; negative u is reflected to -u.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def _check_delta(delta):
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")


def sigma2_X_delta(u: float, delta: float) -> float:
    """Brownian case: u - u^3/(3 delta^2) below delta, 2 delta / 3 from delta on."""
    _check_delta(delta)
    if u < 0:
        raise ValueError("u must be non-negative; reflect negative lags first")
    if u < delta:
        return u - u**3 / (3.0 * delta**2)
    return 2.0 * delta / 3.0


def cov_I(u: float, delta: float, H: float) -> float:
    _check_delta(delta)
    u = abs(u)
    p = 2 * H + 2
    c = 1.0 / (delta**2 * (2 * H + 1) * (2 * H + 2))
    if u >= delta:
        return c * ((u + delta) ** p - 2 * delta**p - 2 * u**p + (u - delta) ** p)
    return c * ((u + delta) ** p - 2 * delta**p - 2 * u**p + (delta - u) ** p)


def cov_J(u: float, delta: float, H: float) -> float:
    _check_delta(delta)
    u = abs(u)
    p = 2 * H + 1
    c = 1.0 / (2 * delta * (2 * H + 1))
    if u >= delta:
        return c * ((u + delta) ** p - 2 * delta**p - (u - delta) ** p)
    return c * ((u + delta) ** p - 2 * delta**p + (delta - u) ** p)


def cov_K(u: float, delta: float, H: float) -> float:
    _check_delta(delta)
    u = abs(u)
    a = 2 * H + 1
    b = 2 * H + 2
    if u >= delta:
        kbar = (
            (u + delta) ** b
            + (u - delta) ** b
            - 2 * u**b
            - delta * b * ((u + delta) ** a - (u - delta) ** a)
            + delta**2 * a * b * u ** (2 * H)
        )
    else:
        kbar = (
            (u + delta) ** b
            + (delta - u) ** b
            - 2 * u**b
            - delta * b * ((u + delta) ** a + (delta - u) ** a)
            + delta**2 * a * b * u ** (2 * H)
        )
    return delta ** (2 * H) / (H + 1) + kbar / (delta**2 * a * b)


def constant_M(rho: float) -> float:
    """((2^(1+rho) + 1) / 3^(1-rho))^(1/rho)."""
    if rho < 1:
        raise ValueError(f"rho must be >= 1, got {rho}")
    return ((2.0 ** (1 + rho) + 1.0) / 3.0 ** (1 - rho)) ** (1.0 / rho)


def _check_interval(s, t, rho):
    if not s < t:
        raise ValueError(f"need s < t, got [{s}, {t}]")
    if not 1.0 <= rho < 2.0:
        raise ValueError(f"rho must lie in [1, 2), got {rho}")


def bound_rho_var_X_delta(delta: float, rho: float, s: float, t: float) -> float:
    _check_interval(s, t, rho)
    _check_delta(delta)
    return delta ** (1 - 1 / rho) * constant_M(rho) * (t - s) ** (1 / rho)


def bound_rho_var_bm(T: float, rho: float, s: float, t: float) -> float:
    _check_interval(s, t, rho)
    if T <= 0:
        raise ValueError("T must be positive")
    return T ** (1 - 1 / rho) * constant_M(rho) * (t - s) ** (1 / rho)


@dataclass(frozen=True)
class CovarianceModel:
    """Increment variance sigma2(tau) of a process with stationary increments."""

    sigma2: Callable[[float], float]
    label: str
    params: dict = field(default_factory=dict)

    def __call__(self, tau: float) -> float:
        return self.sigma2(tau)

    def values(self, taus) -> np.ndarray:
        return np.array([self.sigma2(float(t)) for t in np.ravel(taus)]).reshape(np.shape(taus))


def bm_model(T: float = 1.0) -> CovarianceModel:
    return CovarianceModel(lambda tau: float(tau), "bm", {"T": T})


def x_delta_model(delta: float) -> CovarianceModel:
    _check_delta(delta)
    return CovarianceModel(lambda tau: sigma2_X_delta(tau, delta), "x_delta", {"delta": delta, "H": 0.5})


def omega_delta_model(delta: float, H: float = 0.5) -> CovarianceModel:
    _check_delta(delta)
    return CovarianceModel(lambda tau: cov_I(tau, delta, H), "omega_delta", {"delta": delta, "H": H})


def fbm_x_delta_model(delta: float, H: float) -> CovarianceModel:
    _check_delta(delta)
    return CovarianceModel(lambda tau: cov_K(tau, delta, H), "x_delta_fbm", {"delta": delta, "H": H})


def growth_constant_x_delta(delta: float, rho: float) -> float:
    """L with sigma2_X_delta(u) <= L u^(1/rho)."""
    return delta ** (1 - 1 / rho)


def growth_constant_bm(T: float, rho: float) -> float:
    return T ** (1 - 1 / rho)
