"""Uniform time grids and grid-sampled vector paths.

A ``VectorPath`` always stands for the piecewise-linear interpolant of its
samples. Hölder quantities are sups over grid-point pairs only, which
lower-bounds the sup over the interpolant and converges under refinement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

_REL_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Grid points t_k = t_start + k * mesh, k = 0..n_cells."""

    t_start: float
    n_cells: int
    mesh: float

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.mesh)):
            raise ValueError("grid bounds must be finite")
        if self.mesh <= 0:
            raise ValueError(f"mesh must be positive, got {self.mesh}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be an integer >= 1, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        if self.t_start <= 0.0 <= self.t_end and self._zero_offset() is None:
            raise ValueError("0 lies inside the grid but is not a grid point")

    @property
    def t_end(self) -> float:
        return self.t_start + self.n_cells * self.mesh

    @property
    def n_points(self) -> int:
        return self.n_cells + 1

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_points) * self.mesh

    def time(self, k: int) -> float:
        return self.t_start + k * self.mesh

    def _zero_offset(self):
        k = round(-self.t_start / self.mesh)
        if abs(self.t_start + k * self.mesh) <= _REL_TOL * self.mesh:
            return int(k)
        return None

    @property
    def zero_index(self) -> int:
        """Index of t = 0; raises if 0 is not a grid point."""
        k = self._zero_offset()
        if k is None or not 0 <= k <= self.n_cells:
            raise ValueError("0 is not a point of this grid")
        return k

    def index_of(self, t: float) -> int:
        k = round((t - self.t_start) / self.mesh)
        if abs(self.time(k) - t) > _REL_TOL * max(1.0, abs(t)) or not 0 <= k <= self.n_cells:
            raise ValueError(f"t = {t} is not a grid point")
        return int(k)

    def sub(self, i0: int, i1: int) -> "TimeGrid":
        """Subgrid of points i0..i1."""
        check_window(self, (i0, i1))
        return TimeGrid(self.time(i0), i1 - i0, self.mesh)

    def compatible(self, other: "TimeGrid") -> bool:
        return (
            self.n_cells == other.n_cells
            and abs(self.mesh - other.mesh) <= _REL_TOL * self.mesh
            and abs(self.t_start - other.t_start) <= _REL_TOL * self.mesh
        )


def make_grid(t_start: float, t_end: float, n_cells: int) -> TimeGrid:
    if not (math.isfinite(t_start) and math.isfinite(t_end)):
        raise ValueError("grid bounds must be finite")
    if n_cells < 1:
        raise ValueError("a grid needs at least one cell")
    if t_end <= t_start:
        raise ValueError(f"need t_end > t_start, got [{t_start}, {t_end}]")
    return TimeGrid(float(t_start), int(n_cells), (t_end - t_start) / n_cells)


def check_window(grid: TimeGrid, window) -> tuple[int, int]:
    if window is None:
        return 0, grid.n_cells
    i0, i1 = (int(i) for i in window)
    if not 0 <= i0 < i1 <= grid.n_cells:
        raise ValueError(f"window {window} is empty or outside 0..{grid.n_cells}")
    return i0, i1


@dataclass(frozen=True, eq=False)
class VectorPath:
    """Samples of an R^m path, one row per grid point."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.n_points:
            raise ValueError(
                f"expected {self.grid.n_points} rows of values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def restrict(self, i0: int, i1: int) -> "VectorPath":
        return VectorPath(self.grid.sub(i0, i1), self.values[i0 : i1 + 1])

    def __add__(self, other):
        if isinstance(other, VectorPath):
            if not self.grid.compatible(other.grid):
                raise ValueError("paths live on different grids")
            other = other.values
        return VectorPath(self.grid, self.values + np.asarray(other, dtype=float))

    def __sub__(self, other):
        if isinstance(other, VectorPath):
            return self + other * -1.0
        return self + (-np.asarray(other, dtype=float))

    def __mul__(self, lam: float):
        return VectorPath(self.grid, float(lam) * self.values)

    __rmul__ = __mul__


def holder_seminorm(path: VectorPath, beta: float, window=None) -> float:
    """max over grid pairs s < t in the window of |X(t) - X(s)| / (t - s)**beta."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    i0, i1 = check_window(path.grid, window)
    return _kernels.holder_sup(path.values, path.grid.mesh, beta, i0, i1)


def wiener_shift(path: VectorPath, tau_index: int) -> VectorPath:
    """(theta_tau w)(t) = w(t + tau) - w(tau), tau = tau_index * mesh.

    The result lives on the original grid truncated to the points t with
    t + tau still on the grid.
    """
    grid = path.grid
    j = int(tau_index)
    z = grid.zero_index
    if not 0 <= z + j <= grid.n_cells or abs(j) >= grid.n_cells:
        raise ValueError(f"shift {tau_index} exceeds the grid extent")
    anchor = path.values[z + j]
    if j >= 0:
        new_grid = TimeGrid(grid.t_start, grid.n_cells - j, grid.mesh)
        vals = path.values[j:] - anchor
    else:
        new_grid = TimeGrid(grid.time(-j), grid.n_cells + j, grid.mesh)
        vals = path.values[: grid.n_cells + j + 1] - anchor
    return VectorPath(new_grid, vals)


def write_path_csv(path: VectorPath, filename, prefix: str = "x") -> None:
    header = ["t"] + [f"{prefix}{i + 1}" for i in range(path.dim)]
    with open(filename, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(path.grid.times, path.values):
            w.writerow([format(float(t), ".17g")] + [format(float(x), ".17g") for x in row])


def read_path_csv(filename) -> VectorPath:
    data = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    grid = make_grid(t[0], t[-1], len(t) - 1)
    return VectorPath(grid, data[:, 1:])
