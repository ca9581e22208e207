"""Rectangular increment covariances and brute-force 2D rho-variation."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from .analytic_cov import CovarianceModel, constant_M

MAX_POINTS = 10


@dataclass(frozen=True)
class RectCovariance:
    """R(s, t; s', t') = E (X(t) - X(s)) (X(t') - X(s'))."""

    evaluator: Callable[[float, float, float, float], float]
    label: str = ""

    def __call__(self, s, t, s2, t2) -> float:
        return self.evaluator(s, t, s2, t2)


def rect_cov_from_sigma2(model: CovarianceModel) -> RectCovariance:
    """Polarisation for stationary increments; valid for any signs of the times."""
    f = model.sigma2

    def R(s, t, s2, t2):
        return 0.5 * (f(abs(t - s2)) + f(abs(s - t2)) - f(abs(t - t2)) - f(abs(s - s2)))

    return RectCovariance(R, model.label)


def rect_cov_from_samples(times, samples) -> RectCovariance:
    """Empirical R from sample paths; ``samples`` has shape (N, len(times))."""
    times = np.asarray(times, dtype=float)
    samples = np.asarray(samples, dtype=float)
    index = {float(t): k for k, t in enumerate(times)}

    def R(s, t, s2, t2):
        try:
            a = samples[:, index[float(t)]] - samples[:, index[float(s)]]
            b = samples[:, index[float(t2)]] - samples[:, index[float(s2)]]
        except KeyError as exc:
            raise ValueError(f"time {exc.args[0]} is not a sampled time") from None
        return float(np.mean(a * b))

    return RectCovariance(R, "empirical")


def _partitions(n):
    # indicator rows over the intervals (a, b), a < b, of every partition using the
    # fixed endpoints 0 and n-1 plus any subset of the interior points
    intervals = list(combinations(range(n), 2))
    pos = {iv: k for k, iv in enumerate(intervals)}
    interior = range(1, n - 1)
    rows = []
    for r in range(n - 1):
        for subset in combinations(interior, r):
            pts = (0, *subset, n - 1)
            row = np.zeros(len(intervals))
            for a, b in zip(pts[:-1], pts[1:]):
                row[pos[(a, b)]] = 1.0
            rows.append(row)
    return intervals, np.array(rows)


def rho_variation_bruteforce(cov: RectCovariance, grid_points, rho: float) -> float:
    """Exact sup over all partition pairs drawn from ``grid_points`` of (sum |R|^rho)^(1/rho)."""
    pts = np.sort(np.asarray(grid_points, dtype=float))
    n = len(pts)
    if not 2 <= n <= MAX_POINTS:
        raise ValueError(f"need 2 <= number of points <= {MAX_POINTS}, got {n}")
    if rho < 1:
        raise ValueError("rho must be >= 1")
    intervals, P = _partitions(n)
    W = np.empty((len(intervals), len(intervals)))
    for i, (a, b) in enumerate(intervals):
        for j, (c, d) in enumerate(intervals):
            W[i, j] = abs(cov(pts[a], pts[b], pts[c], pts[d])) ** rho
    sums = P @ W @ P.T
    return float(np.max(sums) ** (1.0 / rho))


@dataclass(frozen=True)
class Th109Report:
    monotone: bool
    concave: bool
    growth_ok: bool
    L: float
    rho: float
    M: float

    @property
    def all_pass(self) -> bool:
        return self.monotone and self.concave and self.growth_ok

    def bound(self, s: float, t: float) -> float:
        """L * M(rho) * (t - s)^(1/rho)."""
        return self.L * self.M * (t - s) ** (1.0 / self.rho)


def check_th109_hypotheses(model: CovarianceModel, h: float, rho: float, L: float, n_scan: int = 2001, tol: float = 1e-12) -> Th109Report:
    """Scan sigma2 on [0, h] for monotonicity, concavity and sigma2(u) <= L u^(1/rho)."""
    u = np.linspace(0.0, h, n_scan)
    v = model.values(u)
    scale = max(1.0, float(np.max(np.abs(v))))
    d1 = np.diff(v)
    d2 = np.diff(v, 2)
    monotone = bool(np.all(d1 >= -tol * scale))
    concave = bool(np.all(d2 <= tol * scale))
    growth_ok = bool(np.all(v <= L * u ** (1.0 / rho) + tol * scale))
    return Th109Report(monotone, concave, growth_ok, L, rho, constant_M(rho))
