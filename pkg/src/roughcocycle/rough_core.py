"""Second-order (area) data over a grid path and the rough-path metric.

Areas are stored cumulatively, A_k = X(t_0, t_k), and every X(s, t) is
rebuilt from Chen's relation

    X(s, t) = A(t) - A(s) - (x(s) - x(t_0)) (x) (x(t) - x(s)),

so Chen holds identically and no O(n^2) table is ever stored. Matrix norms
are max-abs-entry; vector norms are Euclidean.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import _kernels
from .grid_path import TimeGrid, VectorPath, check_window, wiener_shift


@dataclass(frozen=True, eq=False)
class AreaField:
    grid: TimeGrid
    cumulative: np.ndarray

    def __post_init__(self):
        a = np.array(self.cumulative, dtype=np.float64)
        if a.ndim != 3 or a.shape[0] != self.grid.n_points or a.shape[1] != a.shape[2]:
            raise ValueError(f"cumulative areas must have shape (n+1, m, m), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("areas must be finite")
        if np.any(a[0] != 0.0):
            raise ValueError("cumulative area must vanish at the base point")
        a.setflags(write=False)
        object.__setattr__(self, "cumulative", a)


@dataclass(frozen=True, eq=False)
class RoughPathLift:
    path: VectorPath
    area: AreaField
    geometric: bool = field(default=True)

    def __post_init__(self):
        if not self.path.grid.compatible(self.area.grid):
            raise ValueError("path and area must share a grid")
        if self.area.cumulative.shape[1] != self.path.dim:
            raise ValueError("area dimension does not match path dimension")

    @property
    def grid(self) -> TimeGrid:
        return self.path.grid

    @property
    def dim(self) -> int:
        return self.path.dim

    def cell_areas(self) -> np.ndarray:
        """X(t_k, t_{k+1}) for every cell, shape (n, m, m)."""
        return areas_between(self.path.values, self.area.cumulative, np.arange(self.grid.n_cells), np.arange(1, self.grid.n_points))

    def restrict(self, i0: int, i1: int) -> "RoughPathLift":
        i0, i1 = check_window(self.grid, (i0, i1))
        idx = np.arange(i0, i1 + 1)
        A = areas_between(self.path.values, self.area.cumulative, np.full(idx.shape, i0), idx)
        sub = self.grid.sub(i0, i1)
        return RoughPathLift(VectorPath(sub, self.path.values[i0 : i1 + 1]), AreaField(sub, A), self.geometric)

    def coarsen(self, factor: int) -> "RoughPathLift":
        """Keep every ``factor``-th grid point; areas stay the exact fine areas."""
        factor = int(factor)
        if factor < 1 or self.grid.n_cells % factor:
            raise ValueError(f"cannot coarsen {self.grid.n_cells} cells by {factor}")
        grid = TimeGrid(self.grid.t_start, self.grid.n_cells // factor, self.grid.mesh * factor)
        return RoughPathLift(
            VectorPath(grid, self.path.values[::factor]),
            AreaField(grid, self.area.cumulative[::factor]),
            self.geometric,
        )


def areas_between(x, A, s_idx, t_idx):
    """Vectorised Chen reconstruction X(s, t) for index arrays (leading batch dims allowed)."""
    x = np.asarray(x)
    scalar = np.ndim(s_idx) == 0 and np.ndim(t_idx) == 0
    s_idx = np.atleast_1d(s_idx)
    t_idx = np.atleast_1d(t_idx)
    xs = np.take(x, s_idx, axis=-2)
    xt = np.take(x, t_idx, axis=-2)
    base = x[..., :1, :]
    As = np.take(A, s_idx, axis=-3)
    At = np.take(A, t_idx, axis=-3)
    out = At - As - (xs - base)[..., :, None] * (xt - xs)[..., None, :]
    return out[..., 0, :, :] if scalar else out


def cumulative_from_cells(x, cell_areas):
    """Accumulate per-cell areas into A_k = X(t_0, t_k) through Chen (batch dims allowed)."""
    x = np.asarray(x)
    dx = np.diff(x, axis=-2)
    rel = x[..., :-1, :] - x[..., :1, :]
    steps = rel[..., :, None] * dx[..., None, :] + cell_areas
    A = np.zeros(x.shape + (x.shape[-1],))
    np.cumsum(steps, axis=-3, out=A[..., 1:, :, :])
    return A


def area_lookup(lift: RoughPathLift, s_idx: int, t_idx: int) -> np.ndarray:
    n = lift.grid.n_cells
    if not 0 <= s_idx <= t_idx <= n:
        raise ValueError(f"need 0 <= s <= t <= {n}, got ({s_idx}, {t_idx})")
    return areas_between(lift.path.values, lift.area.cumulative, s_idx, t_idx)


def chen_defect(path: VectorPath, raw_area, triples=None) -> float:
    """Max over s < u < t of |X(s,t) - X(s,u) - X(u,t) - dx(s,u) (x) dx(u,t)|.

    ``raw_area`` maps index pairs (s, t) to m x m arrays. Without explicit
    ``triples`` every ordered triple of indices that appear in the table is used.
    """
    x = path.values
    if triples is None:
        pts = sorted({i for pair in raw_area for i in pair})
        triples = [
            (s, u, t)
            for a, s in enumerate(pts)
            for b, u in enumerate(pts[a + 1 :], a + 1)
            for t in pts[b + 1 :]
        ]
    worst = 0.0
    for s, u, t in triples:
        try:
            st, su, ut = raw_area[(s, t)], raw_area[(s, u)], raw_area[(u, t)]
        except KeyError as exc:
            raise ValueError(f"raw area table is missing pair {exc.args[0]}") from None
        d = np.asarray(st) - su - ut - np.outer(x[u] - x[s], x[t] - x[u])
        worst = max(worst, float(np.max(np.abs(d))))
    return worst


def lift_smooth(path: VectorPath) -> RoughPathLift:
    """Exact iterated integrals of the piecewise-linear interpolant."""
    dx = path.increments
    cells = 0.5 * dx[:, :, None] * dx[:, None, :]
    A = cumulative_from_cells(path.values, cells)
    return RoughPathLift(path, AreaField(path.grid, A), geometric=True)


def _check_beta(beta):
    if not 1.0 / 3.0 < beta < 0.5:
        raise ValueError(f"beta must lie in (1/3, 1/2), got {beta}")


def metric_terms(a: RoughPathLift, b: RoughPathLift, beta: float, window=None):
    """(rho_beta, sup of the path term, sup of the area term) over grid pairs."""
    _check_beta(beta)
    if not a.grid.compatible(b.grid):
        raise ValueError("lifts live on different grids")
    i0, i1 = check_window(a.grid, window)
    return _kernels.rough_sup(
        a.path.values, a.area.cumulative, b.path.values, b.area.cumulative, a.grid.mesh, beta, i0, i1
    )


def rough_metric(a: RoughPathLift, b: RoughPathLift, beta: float, window=None) -> float:
    return metric_terms(a, b, beta, window)[0]


def homogeneous_norm(lift: RoughPathLift, beta: float, window=None) -> float:
    _check_beta(beta)
    i0, i1 = check_window(lift.grid, window)
    zx = np.zeros_like(lift.path.values)
    zA = np.zeros_like(lift.area.cumulative)
    _, path_part, area_part = _kernels.rough_sup(
        lift.path.values, lift.area.cumulative, zx, zA, lift.grid.mesh, beta, i0, i1
    )
    return path_part + np.sqrt(area_part)


@njit(cache=True)
def _sym_defect(x, A, i0, i1):
    m = x.shape[1]
    best = 0.0
    for s in range(i0, i1):
        for t in range(s + 1, i1 + 1):
            for i in range(m):
                for j in range(i, m):
                    xij = A[t, i, j] - A[s, i, j] - (x[s, i] - x[0, i]) * (x[t, j] - x[s, j])
                    xji = A[t, j, i] - A[s, j, i] - (x[s, j] - x[0, j]) * (x[t, i] - x[s, i])
                    d = abs(0.5 * (xij + xji) - 0.5 * (x[t, i] - x[s, i]) * (x[t, j] - x[s, j]))
                    if d > best:
                        best = d
    return best


def symmetry_defect(lift: RoughPathLift, window=None) -> float:
    """max over grid pairs of |Sym X(s,t) - dx (x) dx / 2|."""
    i0, i1 = check_window(lift.grid, window)
    return float(_sym_defect(lift.path.values, lift.area.cumulative, i0, i1))


def shift_lift(lift: RoughPathLift, tau_index: int) -> RoughPathLift:
    """Wiener shift of a lift: area(shifted; s, t) = area(original; s + tau, t + tau)."""
    j = int(tau_index)
    path = wiener_shift(lift.path, j)
    off = max(j, 0)
    k = np.arange(path.grid.n_points)
    A = areas_between(lift.path.values, lift.area.cumulative, np.full(k.shape, off), off + k)
    return RoughPathLift(path, AreaField(path.grid, A), lift.geometric)


def write_lift_csv(lift: RoughPathLift, filename) -> None:
    m = lift.dim
    header = ["t"] + [f"x{i + 1}" for i in range(m)]
    header += [f"A{i + 1}{j + 1}" for i in range(m) for j in range(m)]
    with open(filename, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, xv, Av in zip(lift.grid.times, lift.path.values, lift.area.cumulative):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in xv] + [repr(float(v)) for v in Av.ravel()])
