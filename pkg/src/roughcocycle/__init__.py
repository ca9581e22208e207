"""Rough-path lifts, the stationary smoothing w_delta, and cocycle checks for rough differential equations."""

from .grid_path import TimeGrid, VectorPath, holder_seminorm, make_grid, wiener_shift
from .rough_core import (
    AreaField,
    RoughPathLift,
    area_lookup,
    chen_defect,
    homogeneous_norm,
    lift_smooth,
    rough_metric,
    shift_lift,
    symmetry_defect,
)
from .gaussian_driver import HurstModel, RngStream, bm_reference_lift, derive_seed, sample_bm, sample_fbm
from .smoothing import SmoothingParams, diff_process, smooth_area, smooth_derivative, smooth_lift, smooth_path
from .rde import ControlledPath, VectorField, cocycle_phi, rough_integral, solve_ode_rk4, solve_rde

__version__ = "0.1.0"

__all__ = [
    "TimeGrid",
    "VectorPath",
    "holder_seminorm",
    "make_grid",
    "wiener_shift",
    "AreaField",
    "RoughPathLift",
    "area_lookup",
    "chen_defect",
    "homogeneous_norm",
    "lift_smooth",
    "rough_metric",
    "shift_lift",
    "symmetry_defect",
    "HurstModel",
    "RngStream",
    "bm_reference_lift",
    "derive_seed",
    "sample_bm",
    "sample_fbm",
    "SmoothingParams",
    "diff_process",
    "smooth_area",
    "smooth_derivative",
    "smooth_lift",
    "smooth_path",
    "ControlledPath",
    "VectorField",
    "cocycle_phi",
    "rough_integral",
    "solve_ode_rk4",
    "solve_rde",
]
