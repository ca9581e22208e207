"""The stationary smooth approximation w_delta of a grid path and its exact lift.

w_delta(t) = int_0^t (w(r + delta) - w(r)) / delta dr, taken over the
piecewise-linear interpolant of w. With delta a whole number of cells the
integrand is piecewise linear with kinks on the grid, so

* the per-cell trapezoid rule gives w_delta exactly at grid points,
* w_delta is piecewise quadratic, (w_delta - w_delta(t_k)) (x) w_delta' is a
  cubic on each cell, and Simpson's rule gives the cell areas exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid_path import VectorPath, check_window
from .rough_core import AreaField, RoughPathLift, cumulative_from_cells


@dataclass(frozen=True)
class SmoothingParams:
    delta: float
    mesh: float

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        k = round(self.delta / self.mesh)
        if k < 1 or abs(k * self.mesh - self.delta) > 1e-9 * self.mesh:
            raise ValueError(f"delta = {self.delta} is not a whole multiple of the mesh {self.mesh}")

    @property
    def cells(self) -> int:
        return round(self.delta / self.mesh)


def _resolve(omega: VectorPath, params: SmoothingParams, window):
    grid = omega.grid
    if abs(grid.mesh - params.mesh) > 1e-9 * grid.mesh:
        raise ValueError("smoothing parameters were built for a different mesh")
    k = params.cells
    if window is None:
        window = (0, grid.n_cells - k)
    i0, i1 = check_window(grid, window)
    if i1 + k > grid.n_cells:
        raise ValueError(
            f"path must extend delta = {params.delta} beyond the window end (needs {k} more cells)"
        )
    z = grid.zero_index
    if not i0 <= z <= i1:
        raise ValueError("the smoothing window must contain t = 0")
    return k, i0, i1, z


def slopes(values, k: int, delta: float, i0: int, i1: int):
    """w_delta'(t_j) = (w(t_j + delta) - w(t_j)) / delta for j = i0..i1 (batch dims allowed)."""
    return (values[..., i0 + k : i1 + k + 1, :] - values[..., i0 : i1 + 1, :]) / delta


def smooth_values(values, k, delta, mesh, i0, i1, z):
    g = slopes(values, k, delta, i0, i1)
    out = np.zeros(g.shape)
    np.cumsum(0.5 * mesh * (g[..., :-1, :] + g[..., 1:, :]), axis=-2, out=out[..., 1:, :])
    return out - out[..., z - i0 : z - i0 + 1, :]


def smooth_lift_values(values, k, delta, mesh, i0, i1, z):
    """(w_delta samples, cumulative areas based at i0) on the window, batch dims allowed."""
    g = slopes(values, k, delta, i0, i1)
    wd = smooth_values(values, k, delta, mesh, i0, i1, z)
    g0, g1 = g[..., :-1, :], g[..., 1:, :]
    y_half = mesh * (3.0 * g0 + g1) / 8.0
    y_one = mesh * (g0 + g1) / 2.0
    g_half = (g0 + g1) / 2.0
    cells = (mesh / 6.0) * (
        4.0 * y_half[..., :, None] * g_half[..., None, :] + y_one[..., :, None] * g1[..., None, :]
    )
    return wd, cumulative_from_cells(wd, cells)


def smooth_path(omega: VectorPath, params: SmoothingParams, window=None) -> VectorPath:
    k, i0, i1, z = _resolve(omega, params, window)
    vals = smooth_values(omega.values, k, params.delta, params.mesh, i0, i1, z)
    return VectorPath(omega.grid.sub(i0, i1), vals)


def smooth_derivative(omega: VectorPath, params: SmoothingParams, t_index: int) -> np.ndarray:
    k = params.cells
    if t_index < 0 or t_index + k > omega.grid.n_cells:
        raise ValueError(f"t_index {t_index} + delta runs off the grid")
    return (omega.values[t_index + k] - omega.values[t_index]) / params.delta


def smooth_area(omega: VectorPath, params: SmoothingParams, window=None) -> AreaField:
    k, i0, i1, z = _resolve(omega, params, window)
    _, A = smooth_lift_values(omega.values, k, params.delta, params.mesh, i0, i1, z)
    return AreaField(omega.grid.sub(i0, i1), A)


def smooth_lift(omega: VectorPath, params: SmoothingParams, window=None) -> RoughPathLift:
    k, i0, i1, z = _resolve(omega, params, window)
    wd, A = smooth_lift_values(omega.values, k, params.delta, params.mesh, i0, i1, z)
    grid = omega.grid.sub(i0, i1)
    return RoughPathLift(VectorPath(grid, wd), AreaField(grid, A), geometric=True)


def diff_process(omega: VectorPath, omega_delta: VectorPath) -> VectorPath:
    """X_delta = w_delta - w; ``omega`` may live on a larger grid with the same lattice."""
    g, gd = omega.grid, omega_delta.grid
    if not g.compatible(gd):
        if abs(g.mesh - gd.mesh) > 1e-9 * g.mesh:
            raise ValueError("paths live on different grids")
        i0 = g.index_of(gd.t_start)
        omega = omega.restrict(i0, i0 + gd.n_cells)
    return omega_delta - omega
