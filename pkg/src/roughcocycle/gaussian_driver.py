"""Brownian and fractional Brownian samplers with reproducible substreams.

Substream seeds come from a SplitMix64 step:

    state = master_seed + (stream_index + 1) * 0x9E3779B97F4A7C15   (mod 2**64)
    seed  = mix64(state)

so ``derive_seed(0, k)`` reproduces the k-th output of the reference
SplitMix64 generator seeded with 0. Each seed drives a numpy PCG64.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid_path import TimeGrid, VectorPath
from .rough_core import RoughPathLift, lift_smooth

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
MAX_FBM_CELLS = 4096


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, stream_index: int) -> int:
    if stream_index < 0:
        raise ValueError("stream_index must be non-negative")
    return mix64((master_seed & _MASK) + (stream_index + 1) * _GOLDEN)


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int = 0

    @property
    def seed(self) -> int:
        return derive_seed(self.master_seed, self.stream_index)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, index)


@dataclass(frozen=True)
class HurstModel:
    H: float
    dim: int = 1

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {self.H}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")


def fbm_covariance(s, t, H):
    """R(s, t) = (|t|^2H + |s|^2H - |t - s|^2H) / 2."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.abs(t) ** (2 * H) + np.abs(s) ** (2 * H) - np.abs(t - s) ** (2 * H))


def _anchor(increments, z0):
    # cumulative path with value 0 at row z0
    shape = increments.shape[:-2] + (increments.shape[-2] + 1, increments.shape[-1])
    vals = np.zeros(shape)
    np.cumsum(increments, axis=-2, out=vals[..., 1:, :])
    return vals - vals[..., z0 : z0 + 1, :]


def bm_values(grid: TimeGrid, m: int, rng: RngStream) -> np.ndarray:
    z0 = grid.zero_index
    n = grid.n_cells
    gen = rng.generator()
    sd = np.sqrt(grid.mesh)
    forward = gen.standard_normal((n - z0, m)) * sd
    backward = gen.standard_normal((z0, m)) * sd
    vals = np.zeros((n + 1, m))
    vals[z0 + 1 :] = np.cumsum(forward, axis=0)
    if z0:
        vals[:z0] = -np.cumsum(backward, axis=0)[::-1]
    return vals


def sample_bm(grid: TimeGrid, m: int, rng: RngStream) -> VectorPath:
    """Brownian motion with w(0) = 0; the negative side is an independent backward walk."""
    return VectorPath(grid, bm_values(grid, m, rng))


def bm_batch(grid: TimeGrid, m: int, master_seed: int, indices) -> np.ndarray:
    """Stack of ``bm_values`` for the given stream indices, shape (N, n+1, m)."""
    return np.stack([bm_values(grid, m, RngStream(master_seed, int(i))) for i in indices])


def fbm_increment_covariance(grid: TimeGrid, H: float) -> np.ndarray:
    t = grid.times
    s0, s1 = t[:-1, None], t[1:, None]
    r0, r1 = t[None, :-1], t[None, 1:]
    return (
        fbm_covariance(s1, r1, H)
        - fbm_covariance(s1, r0, H)
        - fbm_covariance(s0, r1, H)
        + fbm_covariance(s0, r0, H)
    )


@lru_cache(maxsize=16)
def _fbm_factor(t_start: float, n_cells: int, mesh: float, H: float) -> np.ndarray:
    cov = fbm_increment_covariance(TimeGrid(t_start, n_cells, mesh), H)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError(
            f"fBm increment covariance is not numerically positive definite (H={H}, n={n_cells})"
        ) from None
    L.setflags(write=False)
    return L


def fbm_values(grid: TimeGrid, model: HurstModel, rng: RngStream) -> np.ndarray:
    if grid.n_cells > MAX_FBM_CELLS:
        raise ValueError(f"dense fBm sampling is limited to {MAX_FBM_CELLS} cells")
    z0 = grid.zero_index
    L = _fbm_factor(grid.t_start, grid.n_cells, grid.mesh, float(model.H))
    z = rng.generator().standard_normal((grid.n_cells, model.dim))
    return _anchor(L @ z, z0)


def sample_fbm(grid: TimeGrid, model: HurstModel, rng: RngStream) -> VectorPath:
    """Exact fBm on the grid through a Cholesky factor of the increment covariance."""
    return VectorPath(grid, fbm_values(grid, model, rng))


def bm_reference_lift(path: VectorPath) -> RoughPathLift:
    """Geometric lift of the interpolated Brownian sample.

    Stands in for the Stratonovich area; the error vanishes as the mesh shrinks.
    """
    return lift_smooth(path)
