"""Controlled paths, the compensated (sewing) integral and RDE/ODE solvers.

Shapes: a vector field maps y of shape (..., d) to f(y) of shape (..., d, m)
and Df(y) of shape (..., d, m, d) with Df[..., i, j, l] = d f_ij / d y_l.
All array-level solvers accept leading batch dimensions so Monte Carlo
samples can be advanced together.

The rough solver sums the local expansion

    Xi(u, v) = f(Y_u) (w_v - w_u) + (Df(Y_u) f(Y_u)) : X(u, v)

cell by cell along the solution. Because each step only sees the cell
increment and the cell area, solving on [0, t + tau] and restarting on the
shifted lift at tau give identical steps: the cocycle identity holds to
rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid_path import TimeGrid, VectorPath, check_window
from .rough_core import RoughPathLift
from .smoothing import SmoothingParams, _resolve, slopes


class SolverDivergence(FloatingPointError):
    def __init__(self, index):
        super().__init__(f"solution became non-finite at step {index}")
        self.index = index


@dataclass(frozen=True)
class VectorField:
    f: Callable[[np.ndarray], np.ndarray]
    Df: Callable[[np.ndarray], np.ndarray]
    d: int
    m: int
    name: str = ""
    bounds: dict = field(default_factory=dict)

    def derivative_error(self, points, step: float = 1e-5) -> float:
        """Largest relative gap between Df and central differences of f at ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        worst = 0.0
        for y in points:
            fd = np.empty((self.d, self.m, self.d))
            for l in range(self.d):
                e = np.zeros(self.d)
                e[l] = step
                fd[:, :, l] = (self.f(y + e) - self.f(y - e)) / (2 * step)
            exact = self.Df(y)
            scale = max(1.0, float(np.max(np.abs(exact))))
            worst = max(worst, float(np.max(np.abs(fd - exact))) / scale)
        return worst


def constant_field(C) -> VectorField:
    C = np.atleast_2d(np.asarray(C, dtype=float))
    d, m = C.shape

    def f(y):
        return np.broadcast_to(C, np.shape(y)[:-1] + (d, m)).copy()

    def Df(y):
        return np.zeros(np.shape(y)[:-1] + (d, m, d))

    return VectorField(f, Df, d, m, "constant", {"f": float(np.max(np.abs(C))), "Df": 0.0, "D2f": 0.0})


def linear_field(a: float) -> VectorField:
    """f(y) = a y with d = m = 1. Not bounded; only a closed-form oracle."""
    a = float(a)

    def f(y):
        return a * np.asarray(y)[..., :, None]

    def Df(y):
        return np.full(np.shape(y)[:-1] + (1, 1, 1), a)

    return VectorField(f, Df, 1, 1, "linear", {})


def sin_field() -> VectorField:
    """f(y) = sin(y), d = m = 1."""

    def f(y):
        return np.sin(np.asarray(y))[..., :, None]

    def Df(y):
        return np.cos(np.asarray(y))[..., :, None, None]

    return VectorField(f, Df, 1, 1, "sin", {"f": 1.0, "Df": 1.0, "D2f": 1.0})


_SINCOS_DIRS = np.array(
    [
        [[1.0, 0.5], [-0.7, 1.2]],
        [[0.4, -1.1], [0.9, 0.3]],
    ]
)
# entry (i, j) is sin for i == j and cos otherwise
_SINCOS_KIND = np.array([[0, 1], [1, 0]])


def sincos_field() -> VectorField:
    """Bounded C^3 field on R^2 with 2x2 values built from sin/cos of linear forms."""
    a = _SINCOS_DIRS
    is_sin = _SINCOS_KIND == 0

    def f(y):
        phase = np.einsum("ijl,...l->...ij", a, np.asarray(y))
        return np.where(is_sin, np.sin(phase), np.cos(phase))

    def Df(y):
        phase = np.einsum("ijl,...l->...ij", a, np.asarray(y))
        dphase = np.where(is_sin, np.cos(phase), -np.sin(phase))
        return dphase[..., None] * a

    amax = float(np.max(np.sum(np.abs(a), axis=-1)))
    return VectorField(f, Df, 2, 2, "sincos", {"f": 1.0, "Df": amax, "D2f": amax**2, "D3f": amax**3})


FIELDS = {
    "sincos": sincos_field,
    "sin": sin_field,
    "constant": lambda: constant_field([[1.0, 0.5], [-0.3, 0.8]]),
    "linear": lambda: linear_field(1.0),
}


def get_field(name: str) -> VectorField:
    try:
        return FIELDS[name]()
    except KeyError:
        raise ValueError(f"unknown field {name!r}; known: {sorted(FIELDS)}") from None


@dataclass(frozen=True, eq=False)
class ControlledPath:
    """(Y, Y') controlled by ``reference``: Y(t) - Y(s) = Y'(s) (w(t) - w(s)) + R(s, t)."""

    grid: TimeGrid
    Y: np.ndarray
    Yp: np.ndarray
    reference: RoughPathLift

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        Yp = np.asarray(self.Yp, dtype=float)
        if Y.shape[0] != self.grid.n_points or Yp.shape[:-1] != Y.shape:
            raise ValueError(f"inconsistent shapes Y{Y.shape}, Y'{Yp.shape}")
        if Yp.shape[-1] != self.reference.dim or not self.grid.compatible(self.reference.grid):
            raise ValueError("derivative does not match the reference path")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Yp", Yp)

    def remainder(self, s: int, t: int) -> np.ndarray:
        x = self.reference.path.values
        return self.Y[t] - self.Y[s] - self.Yp[s] @ (x[t] - x[s])

    def remainder_seminorm(self, beta: float) -> float:
        """2beta-Hölder seminorm of R over grid pairs (Euclidean norm of the flattened value)."""
        x = self.reference.path.values
        n = self.grid.n_cells
        h = self.grid.mesh
        best = 0.0
        for lag in range(1, n + 1):
            dY = self.Y[lag:] - self.Y[:-lag]
            lin = np.einsum("k...q,kq->k...", self.Yp[:-lag], x[lag:] - x[:-lag])
            r = (dY - lin).reshape(n + 1 - lag, -1)
            best = max(best, float(np.max(np.linalg.norm(r, axis=1))) / (lag * h) ** (2 * beta))
        return best


def compose_controlled(field: VectorField, cp: ControlledPath) -> ControlledPath:
    """f(Y) with Gubinelli derivative Df(Y) Y'."""
    if cp.Y.ndim != 2 or cp.Y.shape[1] != field.d:
        raise ValueError(f"field expects R^{field.d} values, got shape {cp.Y.shape[1:]}")
    Z = field.f(cp.Y)
    Zp = np.einsum("kijl,klq->kijq", field.Df(cp.Y), cp.Yp)
    return ControlledPath(cp.grid, Z, Zp, cp.reference)


def _xi_terms(field, Y, Yp, dx, dX, F=None):
    if F is None:
        F = field.f(Y)
    G = np.einsum("...ijl,...lq->...ijq", field.Df(Y), Yp)
    return np.einsum("...ij,...j->...i", F, dx) + np.einsum("...ijq,...qj->...i", G, dX)


def rough_integral(field: VectorField, cp: ControlledPath, lift: RoughPathLift, s_idx: int, t_idx: int) -> np.ndarray:
    """Sum of Xi over the grid cells of [s, t]."""
    if not cp.grid.compatible(lift.grid):
        raise ValueError("controlled path and lift live on different grids")
    if not 0 <= s_idx <= t_idx <= lift.grid.n_cells:
        raise ValueError(f"bad window ({s_idx}, {t_idx})")
    if s_idx == t_idx:
        return np.zeros(field.d)
    dx = lift.path.increments[s_idx:t_idx]
    dX = lift.cell_areas()[s_idx:t_idx]
    terms = _xi_terms(field, cp.Y[s_idx:t_idx], cp.Yp[s_idx:t_idx], dx, dX)
    return terms.sum(axis=0)


def _first_bad(Y):
    bad = ~np.all(np.isfinite(Y.reshape(Y.shape[:-1] + (-1,))), axis=-1)
    bad = bad.reshape(-1, bad.shape[-1]).any(axis=0)
    return int(np.argmax(bad)) if bad.any() else None


def davie_steps(field: VectorField, dx, dX, y0) -> np.ndarray:
    """Y_{k+1} = Y_k + f(Y_k) dx_k + (Df(Y_k) f(Y_k)) : dX_k; batch dims allowed."""
    dx = np.asarray(dx)
    n = dx.shape[-2]
    y = np.array(np.broadcast_to(y0, dx.shape[:-2] + (field.d,)), dtype=float)
    out = np.empty(dx.shape[:-2] + (n + 1, field.d))
    out[..., 0, :] = y
    with np.errstate(all="ignore"):
        for k in range(n):
            F = field.f(y)
            y = y + _xi_terms(field, y, F, dx[..., k, :], dX[..., k, :, :], F)
            out[..., k + 1, :] = y
    bad = _first_bad(out)
    if bad is not None:
        raise SolverDivergence(bad)
    return out


def solve_rde(field: VectorField, lift: RoughPathLift, xi, window=None) -> ControlledPath:
    """Explicit second-order (Davie) scheme; Y(window start) = xi and Y' = f(Y)."""
    if lift.dim != field.m:
        raise ValueError(f"field is driven by R^{field.m}, lift has dimension {lift.dim}")
    i0, i1 = check_window(lift.grid, window)
    sub = lift if (i0, i1) == (0, lift.grid.n_cells) else lift.restrict(i0, i1)
    xi = np.asarray(xi, dtype=float).reshape(field.d)
    Y = davie_steps(field, sub.path.increments, sub.cell_areas(), xi)
    return ControlledPath(sub.grid, Y, field.f(Y), sub)


def rk4_steps(field: VectorField, g, mesh: float, y0) -> np.ndarray:
    """Classical RK4 for y' = f(y) g(t), g piecewise linear with knots on the grid."""
    g = np.asarray(g)
    n = g.shape[-2] - 1
    y = np.array(np.broadcast_to(y0, g.shape[:-2] + (field.d,)), dtype=float)
    out = np.empty(g.shape[:-2] + (n + 1, field.d))
    out[..., 0, :] = y
    h = mesh

    def rhs(y, gk):
        return np.einsum("...ij,...j->...i", field.f(y), gk)

    with np.errstate(all="ignore"):
        for k in range(n):
            g0 = g[..., k, :]
            g1 = g[..., k + 1, :]
            gm = 0.5 * (g0 + g1)
            k1 = rhs(y, g0)
            k2 = rhs(y + 0.5 * h * k1, gm)
            k3 = rhs(y + 0.5 * h * k2, gm)
            k4 = rhs(y + h * k3, g1)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[..., k + 1, :] = y
    bad = _first_bad(out)
    if bad is not None:
        raise SolverDivergence(bad)
    return out


def solve_ode_rk4(field: VectorField, omega: VectorPath, params: SmoothingParams, xi, window=None) -> VectorPath:
    """Solve dY = f(Y) w_delta'(t) dt on the window, Y(window start) = xi.

    ``omega`` is the source path; w_delta' is read off it exactly.
    """
    if omega.dim != field.m:
        raise ValueError(f"field is driven by R^{field.m}, path has dimension {omega.dim}")
    k, i0, i1, _ = _resolve(omega, params, window)
    g = slopes(omega.values, k, params.delta, i0, i1)
    xi = np.asarray(xi, dtype=float).reshape(field.d)
    Y = rk4_steps(field, g, params.mesh, xi)
    return VectorPath(omega.grid.sub(i0, i1), Y)


def cocycle_phi(t_index: int, driver, xi, field: VectorField, solver: str = "rough", params: SmoothingParams | None = None) -> np.ndarray:
    """phi(t, w, xi): solution at t = t_index * mesh started from xi at t = 0.

    ``driver`` is a RoughPathLift for the rough solver and the source path w
    (with ``params``) for the RK4 solver.
    """
    xi = np.asarray(xi, dtype=float).reshape(field.d)
    if t_index < 0:
        raise ValueError("t_index must be non-negative")
    if t_index == 0:
        return xi.copy()
    z = driver.grid.zero_index
    if solver == "rough":
        return solve_rde(field, driver, xi, (z, z + t_index)).Y[-1]
    if solver == "rk4":
        if params is None:
            raise ValueError("the rk4 solver needs smoothing parameters")
        return solve_ode_rk4(field, driver, params, xi, (z, z + t_index)).values[-1]
    raise ValueError(f"unknown solver {solver!r}")
