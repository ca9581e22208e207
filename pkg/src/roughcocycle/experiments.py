"""Configuration, Monte Carlo drivers and CSV reports for the convergence checks.

Every command takes an ``ExperimentConfig``, writes its CSV files into
``config.out_dir`` and returns a ``Report`` whose ``all_pass`` is the
conjunction of the pass column(s). Sample ``i`` always uses the substream
``RngStream(master_seed, i)``, so every delta in one run is computed on
the same underlying Brownian paths.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.stats import kendalltau

from .analytic_cov import (
    bm_model,
    bound_rho_var_bm,
    bound_rho_var_X_delta,
    constant_M,
    cov_I,
    cov_J,
    cov_K,
    sigma2_X_delta,
    x_delta_model,
)
from .gaussian_driver import HurstModel, RngStream, bm_values, fbm_covariance, fbm_values
from .grid_path import TimeGrid, VectorPath, holder_seminorm, wiener_shift, write_path_csv
from .rde import SolverDivergence, davie_steps, get_field, rk4_steps, solve_ode_rk4, solve_rde
from .rough_core import (
    AreaField,
    RoughPathLift,
    areas_between,
    cumulative_from_cells,
    lift_smooth,
    metric_terms,
    shift_lift,
)
from .smoothing import SmoothingParams, slopes, smooth_lift, smooth_lift_values, smooth_values
from .variation import rect_cov_from_sigma2, rho_variation_bruteforce

MANDATORY = ("master_seed", "T", "mesh_exponent", "deltas", "beta", "rho", "q", "n_samples")
MIN_SAMPLES = 100
GUARD_CELLS = 8
KENDALL_MAX = 0.3
# constant in the L2 bound for areas of X_delta, read off the diagonal entries
AREA_BOUND_C = 3.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    T: float
    mesh_exponent: int
    deltas: tuple
    beta: float
    rho: float
    q: int
    n_samples: int
    out_dir: str = "out"
    field: str = "sincos"
    dim: int = 2
    xi: tuple = (0.5, -0.5)
    xi_deltas: tuple = ()
    kolmogorov: bool = True
    window: str = "positive"
    hurst: tuple = (0.5,)
    lags: tuple = (0.25, 0.5, 1.0)
    mesh_allowance: float = 2.0
    rho_list: tuple = (1.0, 1.25, 1.5)
    variation_points: int = 8
    variation_windows: tuple = ((0.0, 1.0), (0.0, 0.5), (-0.5, 0.5))
    cocycle_samples: int = 50
    cocycle_delta: float = 0.25
    cocycle_levels: int = 3
    cocycle_tau_stride: int = 1
    moment_scales: int = 6

    def __post_init__(self):
        errors = []
        if not (self.T > 0 and math.isfinite(self.T)):
            errors.append("T must be a positive number")
        if not 1 <= self.mesh_exponent <= 20:
            errors.append("mesh_exponent must lie in 1..20")
        if not self.deltas:
            errors.append("deltas must not be empty")
        if any(not 0 < d <= 1 for d in self.deltas):
            errors.append("every delta must lie in (0, 1]")
        if list(self.deltas) != sorted(self.deltas, reverse=True) or len(set(self.deltas)) != len(self.deltas):
            errors.append("deltas must be sorted strictly descending")
        if not 1 <= self.rho < 2:
            errors.append("rho must lie in [1, 2)")
        if self.q < 1:
            errors.append("q must be >= 1")
        lo, hi = self.beta_interval()
        if not lo < self.beta < hi:
            errors.append(f"beta = {self.beta} lies outside ({lo:.6g}, {hi:.6g})")
        if self.n_samples < MIN_SAMPLES:
            errors.append(f"n_samples must be >= {MIN_SAMPLES}")
        if self.cocycle_samples < 1 or self.cocycle_levels < 1 or self.cocycle_tau_stride < 1:
            errors.append("cocycle_samples, cocycle_levels and cocycle_tau_stride must be >= 1")
        if self.window not in ("positive", "symmetric"):
            errors.append("window must be 'positive' or 'symmetric'")
        if self.dim < 1:
            errors.append("dim must be >= 1")
        if any(not 0 < h < 1 for h in self.hurst):
            errors.append("every hurst value must lie in (0, 1)")
        if self.xi_deltas and len(self.xi_deltas) != len(self.deltas):
            errors.append("xi_deltas needs one vector per delta")
        if any(len(v) != len(self.xi) for v in self.xi_deltas):
            errors.append("every xi_deltas vector must have the length of xi")
        if not 2 <= self.variation_points <= 10:
            errors.append("variation_points must lie in 2..10")
        if any(not s < t for s, t in self.variation_windows):
            errors.append("variation windows need s < t")
        if self.moment_scales < 2:
            errors.append("moment_scales must be >= 2")
        if errors:
            raise ConfigError("; ".join(errors))

    def beta_interval(self):
        if self.kolmogorov:
            return 1.0 / 3.0, 1.0 / (2 * self.rho) - 1.0 / (2 * self.q)
        return 1.0 / 3.0, 0.5

    def xi_for(self, i: int) -> np.ndarray:
        return np.array(self.xi_deltas[i] if self.xi_deltas else self.xi, dtype=float)


# --------------------------------------------------------------------------- config I/O

def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _vectors(text):
    return tuple(_floats(part) for part in text.split(";") if part.strip())


def _windows(text):
    out = []
    for part in text.split(","):
        if part.strip():
            s, t = part.split(":")
            out.append((float(s), float(t)))
    return tuple(out)


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "master_seed": lambda s: int(s, 0),
    "T": float,
    "mesh_exponent": int,
    "deltas": _floats,
    "beta": float,
    "rho": float,
    "q": int,
    "n_samples": int,
    "out_dir": str,
    "field": str,
    "dim": int,
    "xi": _floats,
    "xi_deltas": _vectors,
    "kolmogorov": _bool,
    "window": str,
    "hurst": _floats,
    "lags": _floats,
    "mesh_allowance": float,
    "rho_list": _floats,
    "variation_points": int,
    "variation_windows": _windows,
    "cocycle_samples": int,
    "cocycle_delta": float,
    "cocycle_levels": int,
    "cocycle_tau_stride": int,
    "moment_scales": int,
}


def _format_key(name, v):
    if name == "xi_deltas":
        return "; ".join(", ".join(repr(float(x)) for x in vec) for vec in v)
    if name == "variation_windows":
        return ", ".join(f"{s!r}:{t!r}" for s, t in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _PARSERS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            problems.append(f"line {lineno}: bad value for {key!r} ({exc})")
    missing = [k for k in MANDATORY if k not in values]
    if missing:
        problems.append("missing mandatory keys: " + ", ".join(missing))
    if problems:
        raise ConfigError("\n".join(problems))
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {_format_key(f.name, getattr(cfg, f.name))}\n" for f in fields(cfg))


def default_config(**overrides) -> ExperimentConfig:
    base = dict(
        master_seed=20240601,
        T=1.0,
        mesh_exponent=10,
        deltas=(0.25, 0.125, 0.0625),
        beta=0.335,
        rho=1.25,
        q=8,
        n_samples=200,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# --------------------------------------------------------------------------- CSV

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(rows, path, header) -> Path:
    """Rows are dicts keyed by the header; missing keys and None become empty cells."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(row.get(h)) for h in header])
    return path


@dataclass
class Report:
    name: str
    files: list = field(default_factory=list)
    all_pass: bool = True
    summary: str = ""


def _passes(rows, key="pass"):
    flags = [r[key] for r in rows if r.get(key) is not None]
    return bool(all(flags))


# --------------------------------------------------------------------------- grids

def commensurate_cells(values, min_cells: int) -> int:
    """Smallest c >= min_cells with v*c an integer for every v (values with small denominators)."""
    denom = 1
    for v in values:
        fr = Fraction(float(v)).limit_denominator(10**4)
        if abs(float(fr) - v) > 1e-12 * max(1.0, abs(v)):
            raise ConfigError(f"{v} has no small rational form; choose a grid-friendly value")
        denom = denom * fr.denominator // math.gcd(denom, fr.denominator)
    return -(-min_cells // denom) * denom


def _cells_per_unit(cfg: ExperimentConfig, extra=()):
    return commensurate_cells([cfg.T, *cfg.deltas, *extra], 2**cfg.mesh_exponent)


def _guard(delta, mesh):
    if delta < GUARD_CELLS * mesh * (1 - 1e-12):
        raise ConfigError(f"delta = {delta} is below {GUARD_CELLS} mesh cells ({GUARD_CELLS * mesh}); the metric would be biased")


def _fit_slope(x, y):
    if len(x) < 2:
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _mean_se(a):
    a = np.asarray(a, dtype=float)
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0


# --------------------------------------------------------------------------- covariance check

def _trapezoid_weights(n_points, k, delta, mesh, j):
    """Linear weights a with w_delta(t_j) = a . w(grid) for the trapezoid construction (j >= 0)."""
    a = np.zeros(n_points)
    if j == 0:
        return a
    for r in range(j + 1):
        wgt = mesh * (0.5 if r in (0, j) else 1.0) / delta
        a[r + k] += wgt
        a[r] -= wgt
    return a


def cmd_covariance_check(cfg: ExperimentConfig) -> Report:
    """MC estimates of Var w_delta(u), E w_delta(u) w(u) and Var X_delta(u) against I, J, K."""
    lags = sorted(abs(u) for u in cfg.lags)
    c = commensurate_cells([*cfg.deltas, *lags], 2**cfg.mesh_exponent)
    mesh = 1.0 / c
    n = round((max(lags) + max(cfg.deltas)) * c)
    grid = TimeGrid(0.0, n, mesh)
    allowance = cfg.mesh_allowance * mesh
    rows = []
    for H in cfg.hurst:
        bm = abs(H - 0.5) < 1e-15
        if not bm and n > 4096:
            raise ConfigError(f"fBm rows need at most 4096 cells, the lattice needs {n}")
        R = fbm_covariance(grid.times[:, None], grid.times[None, :], H)
        samples = np.empty((cfg.n_samples, n + 1))
        for i in range(cfg.n_samples):
            rng = RngStream(cfg.master_seed, i)
            samples[i] = bm_values(grid, 1, rng)[:, 0] if bm else fbm_values(grid, HurstModel(H), rng)[:, 0]
        for delta in cfg.deltas:
            k = round(delta * c)
            wd = smooth_values(samples[:, :, None], k, delta, mesh, 0, n - k, 0)[:, :, 0]
            for u in lags:
                j = round(u * c)
                if j > n - k:
                    continue
                a = _trapezoid_weights(n + 1, k, delta, mesh, j)
                e = np.zeros(n + 1)
                e[j] = 1.0
                x_wd, x_w = wd[:, j], samples[:, j]
                checks = [
                    ("I", x_wd * x_wd, cov_I(u, delta, H), a @ R @ a),
                    ("J", x_wd * x_w, cov_J(u, delta, H), a @ R @ e),
                    ("K", (x_wd - x_w) ** 2, cov_K(u, delta, H), (a - e) @ R @ (a - e)),
                ]
                for name, vals, formula, exact_disc in checks:
                    mc, se = _mean_se(vals)
                    rows.append(
                        dict(H=H, delta=delta, u=u, quantity=name, mc=mc, formula=formula, se=se,
                             allowance=allowance, discretization_bias=exact_disc - formula,
                             sigma2=sigma2_X_delta(u, delta) if bm and name == "K" else None,
                             **{"pass": abs(mc - formula) <= 3 * se + allowance})
                    )
    header = ["H", "delta", "u", "quantity", "mc", "formula", "se", "allowance", "discretization_bias", "sigma2", "pass"]
    f = write_csv(rows, Path(cfg.out_dir) / "covariance_check.csv", header)
    ok = _passes(rows)
    return Report("covariance-check", [f], ok, f"{sum(r['pass'] for r in rows)}/{len(rows)} rows within 3 SE + allowance")


def cmd_covariance_table(cfg: ExperimentConfig) -> Report:
    rows = []
    for H in cfg.hurst:
        for delta in cfg.deltas:
            for u in cfg.lags:
                bm = abs(H - 0.5) < 1e-15
                rows.append(dict(u=u, delta=delta, H=H, I=cov_I(u, delta, H), J=cov_J(u, delta, H),
                                 K=cov_K(u, delta, H), sigma2=sigma2_X_delta(abs(u), delta) if bm else None))
    f = write_csv(rows, Path(cfg.out_dir) / "covariance_table.csv", ["u", "delta", "H", "I", "J", "K", "sigma2"])
    return Report("covariance-table", [f], True, f"{len(rows)} rows")


# --------------------------------------------------------------------------- variation check

def cmd_variation_check(cfg: ExperimentConfig) -> Report:
    rows = []
    for s, t in cfg.variation_windows:
        pts = np.linspace(s, t, cfg.variation_points)
        label = f"{s!r}:{t!r}"
        bm_cov = rect_cov_from_sigma2(bm_model(t - s))
        for rho in cfg.rho_list:
            bf = rho_variation_bruteforce(bm_cov, pts, rho)
            # the largest lag inside the window is t - s, so L = (t - s)^(1 - 1/rho) covers it
            bound = bound_rho_var_bm(t - s, rho, s, t)
            rows.append(dict(model="bm", rho=rho, window=label, bruteforce=bf, bound=bound, **{"pass": bf <= bound}))
            for delta in cfg.deltas:
                bf = rho_variation_bruteforce(rect_cov_from_sigma2(x_delta_model(delta)), pts, rho)
                bound = bound_rho_var_X_delta(delta, rho, s, t)
                rows.append(dict(model=f"x_delta({delta!r})", rho=rho, window=label, bruteforce=bf, bound=bound,
                                 **{"pass": bf <= bound}))
        bf = rho_variation_bruteforce(bm_cov, pts, 1.0)
        rows.append(dict(model="bm_exact", rho=1.0, window=label, bruteforce=bf, bound=t - s,
                         **{"pass": abs(bf - (t - s)) <= 1e-12}))
    rows.append(dict(model="constant_M", rho=1.0, window="", bruteforce=constant_M(1.0), bound=5.0,
                     **{"pass": constant_M(1.0) == 5.0}))
    f = write_csv(rows, Path(cfg.out_dir) / "variation_check.csv", ["model", "rho", "window", "bruteforce", "bound", "pass"])
    return Report("variation-check", [f], _passes(rows), f"{sum(r['pass'] for r in rows)}/{len(rows)} rows pass")


# --------------------------------------------------------------------------- shared path setup

@dataclass(frozen=True)
class _Layout:
    cells_per_unit: int
    mesh: float
    grid: TimeGrid
    window: tuple


def _layout(cfg: ExperimentConfig, extra_right: float) -> _Layout:
    c = _cells_per_unit(cfg, (extra_right,))
    mesh = 1.0 / c
    nT = round(cfg.T * c)
    kmax = round(extra_right * c)
    if cfg.window == "symmetric":
        grid = TimeGrid(-cfg.T, 2 * nT + kmax, mesh)
        window = (0, 2 * nT)
    else:
        grid = TimeGrid(0.0, nT + kmax, mesh)
        window = (0, nT)
    return _Layout(c, mesh, grid, window)


def _sample(cfg, layout, i):
    return bm_values(layout.grid, cfg.dim, RngStream(cfg.master_seed, i))


# --------------------------------------------------------------------------- path convergence

def cmd_path_convergence(cfg: ExperimentConfig) -> Report:
    """E rho_beta(w_delta, w)^2 across the delta ladder on coupled samples."""
    lay = _layout(cfg, max(cfg.deltas))
    for d in cfg.deltas:
        _guard(d, lay.mesh)
    i0, i1 = lay.window
    params = [SmoothingParams(d, lay.mesh) for d in cfg.deltas]
    dist = np.empty((cfg.n_samples, len(cfg.deltas)))
    per_sample = []
    for i in range(cfg.n_samples):
        w = VectorPath(lay.grid, _sample(cfg, lay, i))
        ref = lift_smooth(w.restrict(i0, i1))
        for j, p in enumerate(params):
            total, path_term, area_term = metric_terms(smooth_lift(w, p, lay.window), ref, cfg.beta)
            dist[i, j] = total
            per_sample.append(dict(sample=i, delta=cfg.deltas[j], metric=total, path_term=path_term, area_term=area_term))
    sq = dist**2
    means = sq.mean(axis=0)
    slope = _fit_slope(np.array(cfg.deltas), means)
    threshold = 0.9 * (1 - 1 / cfg.rho)
    monotone = bool(np.all(np.diff(means) < 0))
    ok = monotone and (slope is None or slope >= threshold)
    rows = []
    for j, d in enumerate(cfg.deltas):
        m2, se2 = _mean_se(sq[:, j])
        mq, seq = _mean_se(dist[:, j] ** (2 * cfg.q))
        rows.append(dict(delta=d, n=cfg.n_samples, mean_sq=m2, se_sq=se2, mean_2q=mq, se_2q=seq, slope=slope,
                         slope_threshold=threshold, monotone=monotone, **{"pass": ok}))
    out = Path(cfg.out_dir)
    f1 = write_csv(rows, out / "path_convergence.csv",
                   ["delta", "n", "mean_sq", "se_sq", "mean_2q", "se_2q", "slope", "slope_threshold", "monotone", "pass"])
    f2 = write_csv(per_sample, out / "path_convergence_samples.csv", ["sample", "delta", "metric", "path_term", "area_term"])
    s = "none" if slope is None else f"{slope:.4f}"
    return Report("path-convergence", [f1, f2], ok, f"slope {s} (threshold {threshold:.4f}), monotone={monotone}")


# --------------------------------------------------------------------------- RDS convergence

def cmd_rds_convergence(cfg: ExperimentConfig) -> Report:
    """Solutions driven by w_delta (RK4) against the rough solution driven by the reference lift."""
    fieldv = get_field(cfg.field)
    if fieldv.m != cfg.dim:
        raise ConfigError(f"field {cfg.field!r} needs dim = {fieldv.m}")
    if len(cfg.xi) != fieldv.d:
        raise ConfigError(f"xi must have {fieldv.d} entries for field {cfg.field!r}")
    lay = _layout(cfg, max(cfg.deltas))
    for d in cfg.deltas:
        _guard(d, lay.mesh)
    i0, i1 = lay.window
    W = np.stack([_sample(cfg, lay, i) for i in range(cfg.n_samples)])
    dx = np.diff(W[:, i0 : i1 + 1], axis=1)
    cells = 0.5 * dx[..., :, None] * dx[..., None, :]
    xi = np.array(cfg.xi, dtype=float)
    Y = _solve_rough_batch(fieldv, dx, cells, xi)
    sub = lay.grid.sub(i0, i1)
    per_sample = []
    agg = []
    for j, d in enumerate(cfg.deltas):
        k = round(d * lay.cells_per_unit)
        xd = cfg.xi_for(j)
        g = slopes(W, k, d, i0, i1)
        Yd = _solve_rk4_batch(fieldv, g, lay.mesh, xd)
        gap = float(np.linalg.norm(xd - xi))
        dists, ratios, diverged = [], [], 0
        for i in range(cfg.n_samples):
            if Y[i] is None or Yd[i] is None:
                diverged += 1
                per_sample.append(dict(sample=i, delta=d, xi_gap=gap, metric=None, sol_dist=None, ratio=None, diverged=True))
                continue
            wd, A = smooth_lift_values(W[i], k, d, lay.mesh, i0, i1, lay.grid.zero_index)
            lift_d = RoughPathLift(VectorPath(sub, wd), AreaField(sub, A))
            ref = RoughPathLift(VectorPath(sub, W[i, i0 : i1 + 1]), AreaField(sub, cumulative_from_cells(W[i, i0 : i1 + 1], cells[i])))
            metric = metric_terms(lift_d, ref, cfg.beta)[0]
            sol = holder_seminorm(VectorPath(sub, Yd[i] - Y[i]), cfg.beta)
            ratio = sol / (gap + metric)
            dists.append(sol)
            ratios.append(ratio)
            per_sample.append(dict(sample=i, delta=d, xi_gap=gap, metric=metric, sol_dist=sol, ratio=ratio, diverged=False))
        md, sed = _mean_se(dists)
        mr, ser = _mean_se(ratios)
        agg.append(dict(delta=d, n_ok=len(dists), n_diverged=diverged, mean_dist=md, se_dist=sed, mean_ratio=mr, se_ratio=ser))
    means = np.array([a["mean_dist"] for a in agg])
    monotone = bool(np.all(np.diff(means) < 0))
    if len(agg) > 1:
        tau = float(kendalltau(-np.log(cfg.deltas), [a["mean_ratio"] for a in agg]).statistic)
    else:
        tau = None
    ok = monotone and (tau is None or tau <= KENDALL_MAX)
    for a in agg:
        a.update(monotone=monotone, kendall_tau=tau, tau_threshold=KENDALL_MAX, **{"pass": ok})
    out = Path(cfg.out_dir)
    f1 = write_csv(agg, out / "rds_convergence.csv",
                   ["delta", "n_ok", "n_diverged", "mean_dist", "se_dist", "mean_ratio", "se_ratio", "monotone",
                    "kendall_tau", "tau_threshold", "pass"])
    f2 = write_csv(per_sample, out / "rds_convergence_samples.csv",
                   ["sample", "delta", "xi_gap", "metric", "sol_dist", "ratio", "diverged"])
    t = "none" if tau is None else f"{tau:.3f}"
    return Report("rds-convergence", [f1, f2], ok, f"monotone={monotone}, kendall tau {t} (max {KENDALL_MAX})")


def _solve_rough_batch(fieldv, dx, cells, xi):
    try:
        return list(davie_steps(fieldv, dx, cells, xi))
    except SolverDivergence:
        out = []
        for a, b in zip(dx, cells):
            try:
                out.append(davie_steps(fieldv, a, b, xi))
            except SolverDivergence:
                out.append(None)
        return out


def _solve_rk4_batch(fieldv, g, mesh, xi):
    try:
        return list(rk4_steps(fieldv, g, mesh, xi))
    except SolverDivergence:
        out = []
        for gi in g:
            try:
                out.append(rk4_steps(fieldv, gi, mesh, xi))
            except SolverDivergence:
                out.append(None)
        return out


# --------------------------------------------------------------------------- cocycle check

def _rough_cocycle_defects(fieldv, lift, xi, taus):
    """Per tau: max_t |phi(t + tau, w) - phi(t, theta_tau w, phi(tau, w))| for the rough solver.

    ``taus`` must start with 0. The direct solution is row 0 of a first pass over
    the same batch, so the tau = 0 row repeats it bit for bit (vectorised ufuncs
    may round differently with the batch layout).
    """
    n = lift.grid.n_cells
    DX = np.zeros((len(taus), n, lift.dim))
    DA = np.zeros((len(taus), n, lift.dim, lift.dim))
    for r, tau in enumerate(taus):
        # theta_0 is the identity; skipping the round trip keeps that row exact
        sh = lift if tau == 0 else shift_lift(lift, tau)
        DX[r, : n - tau] = sh.path.increments
        DA[r, : n - tau] = sh.cell_areas()
    direct = davie_steps(fieldv, DX, DA, xi)[0]
    chained = davie_steps(fieldv, DX, DA, direct[list(taus)])
    return _defects(direct, chained, taus, n)


def _rk4_cocycle_defects(fieldv, w, params, n, xi):
    """Same for the RK4 solver of the smoothed equation; ``w`` extends delta beyond [0, n]."""
    k = params.cells
    taus = list(range(n + 1))
    G = np.zeros((len(taus), n + 1, w.dim))
    for r, tau in enumerate(taus):
        ws = wiener_shift(w, tau)
        G[r, : n - tau + 1] = slopes(ws.values, k, params.delta, 0, n - tau)
    direct = rk4_steps(fieldv, G, params.mesh, xi)[0]
    chained = rk4_steps(fieldv, G, params.mesh, direct[taus])
    return _defects(direct, chained, taus, n)


def _defects(direct, chained, taus, n):
    out = np.empty(len(taus))
    for r, tau in enumerate(taus):
        m = n - tau
        out[r] = np.max(np.abs(direct[tau : tau + m + 1] - chained[r, : m + 1])) if m >= 0 else 0.0
    return out


def cmd_cocycle_check(cfg: ExperimentConfig) -> Report:
    fieldv = get_field(cfg.field)
    if fieldv.m != cfg.dim:
        raise ConfigError(f"field {cfg.field!r} needs dim = {fieldv.m}")
    xi = np.array(cfg.xi, dtype=float)
    delta = cfg.cocycle_delta
    base = commensurate_cells([cfg.T, delta], 2**cfg.mesh_exponent)
    top = base * 2 ** (cfg.cocycle_levels - 1)
    nT_top = round(cfg.T * top)
    fine_grid = TimeGrid(0.0, nT_top + round(delta * top), 1.0 / top)
    rows, levels = [], []
    worst = {("rough", lv): np.zeros(0) for lv in range(cfg.cocycle_levels)}
    worst.update({("rk4", lv): np.zeros(0) for lv in range(cfg.cocycle_levels)})
    for i in range(cfg.cocycle_samples):
        wf = bm_values(fine_grid, cfg.dim, RngStream(cfg.master_seed, i))
        for lv in range(cfg.cocycle_levels):
            factor = 2 ** (cfg.cocycle_levels - 1 - lv)
            c = base * 2**lv
            mesh = 1.0 / c
            nT = round(cfg.T * c)
            grid = TimeGrid(0.0, fine_grid.n_cells // factor, mesh)
            w = VectorPath(grid, wf[::factor])
            taus = list(range(0, nT, cfg.cocycle_tau_stride * (2**lv)))
            lift = lift_smooth(w.restrict(0, nT))
            d_rough = _rough_cocycle_defects(fieldv, lift, xi, taus)
            d_rk4 = _rk4_cocycle_defects(fieldv, w, SmoothingParams(delta, mesh), nT, xi)[taus]
            for solver, d in (("rough", d_rough), ("rk4", d_rk4)):
                key = (solver, lv)
                worst[key] = d if worst[key].size == 0 else np.maximum(worst[key], d)
    for lv in range(cfg.cocycle_levels):
        c = base * 2**lv
        mesh = 1.0 / c
        taus = list(range(0, round(cfg.T * c), cfg.cocycle_tau_stride * (2**lv)))
        for solver in ("rough", "rk4"):
            thr = 1e-10 if solver == "rough" else 10 * mesh
            for tau, d in zip(taus, worst[(solver, lv)]):
                rows.append(dict(solver=solver, mesh=mesh, tau=tau * mesh, max_defect=float(d), threshold=thr,
                                 **{"pass": bool(d <= thr)}))
            levels.append(dict(solver=solver, mesh=mesh, max_defect=float(np.max(worst[(solver, lv)])), threshold=thr))
    for solver in ("rough", "rk4"):
        seq = [r for r in levels if r["solver"] == solver]
        for a, b in zip([None] + seq[:-1], seq):
            within = b["max_defect"] <= b["threshold"]
            if a is None or solver == "rough":
                b.update(ratio=None, refinement_ok=None, **{"pass": within})
            else:
                ratio = b["max_defect"] / a["max_defect"] if a["max_defect"] > 0 else None
                shrink = (a["max_defect"] < 1e-12 and b["max_defect"] < 1e-12) or b["max_defect"] <= 0.75 * a["max_defect"]
                b.update(ratio=ratio, refinement_ok=shrink, **{"pass": within and shrink})
    out = Path(cfg.out_dir)
    f1 = write_csv(rows, out / "cocycle_check.csv", ["solver", "mesh", "tau", "max_defect", "threshold", "pass"])
    f2 = write_csv(levels, out / "cocycle_levels.csv", ["solver", "mesh", "max_defect", "threshold", "ratio", "refinement_ok", "pass"])
    ok = _passes(rows) and _passes(levels)
    summ = ", ".join(f"{r['solver']}@{r['mesh']:.3g}: {r['max_defect']:.2e}" for r in levels)
    return Report("cocycle-check", [f1, f2], ok, summ)


# --------------------------------------------------------------------------- moment scaling

def _scale_norms(x, A, L, p_inc, p_area):
    """L_p norms over all disjoint windows of L cells: Euclidean increments, max-entry areas."""
    n = x.shape[-2] - 1
    s = np.arange(0, n - L + 1, L)
    inc = np.take(x, s + L, axis=-2) - np.take(x, s, axis=-2)
    X = areas_between(x, A, s, s + L)
    a = np.linalg.norm(inc, axis=-1).ravel()
    b = np.max(np.abs(X), axis=(-2, -1)).ravel()
    return float(np.mean(a**p_inc) ** (1 / p_inc)), float(np.mean(b**p_area) ** (1 / p_area)), float(np.sqrt(np.mean(b**2)))


def cmd_moment_scaling(cfg: ExperimentConfig) -> Report:
    lay = _layout(cfg, max(cfg.deltas))
    i0, i1 = lay.window
    n = i1 - i0
    scales = [n // 2**j for j in range(1, cfg.moment_scales + 1)]
    if scales[-1] < 1:
        raise ConfigError("too many moment scales for this mesh")
    W = np.stack([_sample(cfg, lay, i) for i in range(cfg.n_samples)])
    q = cfg.q
    inc_thr = 1 / (2 * cfg.rho) - 0.05
    area_thr = 1 / cfg.rho - 0.05
    rows = []
    xw = W[:, i0 : i1 + 1]
    dxw = np.diff(xw, axis=1)
    Aw = cumulative_from_cells(xw, 0.5 * dxw[..., :, None] * dxw[..., None, :])
    series = [("bm", None, xw, Aw)]
    for d in cfg.deltas:
        k = round(d * lay.cells_per_unit)
        wd, Ad = smooth_lift_values(W, k, d, lay.mesh, i0, i1, lay.grid.zero_index)
        series.append(("smooth", d, wd, Ad))
    for label, d, x, A in series:
        norms = [_scale_norms(x, A, L, 2 * q, q) for L in scales]
        r = np.array(scales) * lay.mesh
        e_inc = _fit_slope(r, [v[0] for v in norms])
        e_area = _fit_slope(r, [v[1] for v in norms])
        for L, (ni, na, _) in zip(scales, norms):
            rows.append(dict(kind=f"{label}_increment", delta=d, scale=L * lay.mesh, norm=ni, bound=None,
                             exponent=e_inc, threshold=inc_thr, **{"pass": e_inc >= inc_thr}))
            rows.append(dict(kind=f"{label}_area", delta=d, scale=L * lay.mesh, norm=na, bound=None,
                             exponent=e_area, threshold=area_thr, **{"pass": e_area >= area_thr}))
    for d in cfg.deltas:
        k = round(d * lay.cells_per_unit)
        wd = smooth_values(W, k, d, lay.mesh, i0, i1, lay.grid.zero_index)
        X = wd - xw
        dX = np.diff(X, axis=1)
        AX = cumulative_from_cells(X, 0.5 * dX[..., :, None] * dX[..., None, :])
        eps = d ** ((1 - 1 / cfg.rho) / 2)
        for L in scales:
            r = L * lay.mesh
            ni, _, l2 = _scale_norms(X, AX, L, 2 * q, q)
            bound = AREA_BOUND_C * d ** (1 - 1 / cfg.rho) * r ** (1 / cfg.rho)
            rows.append(dict(kind="xdelta_area_l2", delta=d, scale=r, norm=l2, bound=bound, exponent=None,
                             threshold=None, **{"pass": l2 <= bound}))
            rows.append(dict(kind="xdelta_increment_ratio", delta=d, scale=r, norm=ni / (eps * r ** (1 / (2 * cfg.rho))),
                             bound=None, exponent=None, threshold=None, **{"pass": None}))
    f = write_csv(rows, Path(cfg.out_dir) / "moment_scaling.csv",
                  ["kind", "delta", "scale", "norm", "bound", "exponent", "threshold", "pass"])
    ok = _passes(rows)
    bm_rows = [r for r in rows if r["kind"].startswith("bm_")]
    return Report("moment-scaling", [f], ok,
                  f"bm exponents {bm_rows[0]['exponent']:.3f} (increments), {bm_rows[1]['exponent']:.3f} (areas)")


# --------------------------------------------------------------------------- simulate / solve

def _tag(d):
    return format(float(d), ".17g")


def cmd_simulate(cfg: ExperimentConfig) -> Report:
    lay = _layout(cfg, max(cfg.deltas))
    w = VectorPath(lay.grid, _sample(cfg, lay, 0))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "omega.csv"]
    write_path_csv(w, files[0])
    for d in cfg.deltas:
        lift = smooth_lift(w, SmoothingParams(d, lay.mesh), lay.window)
        wd = lift.path
        X = VectorPath(wd.grid, wd.values - w.values[lay.window[0] : lay.window[1] + 1])
        for name, p in ((f"omega_delta_{_tag(d)}.csv", wd), (f"x_delta_{_tag(d)}.csv", X)):
            write_path_csv(p, out / name)
            files.append(out / name)
    return Report("simulate", files, True, f"{len(files)} files")


def cmd_solve(cfg: ExperimentConfig, field_name=None, driver="bm", delta=None, xi=None) -> Report:
    fieldv = get_field(field_name or cfg.field)
    lay = _layout(cfg, max(cfg.deltas))
    w = VectorPath(lay.grid, bm_values(lay.grid, fieldv.m, RngStream(cfg.master_seed, 0)))
    xi = np.array(cfg.xi if xi is None else xi, dtype=float)
    if driver == "bm":
        i0, i1 = lay.window
        path = VectorPath(lay.grid.sub(i0, i1), solve_rde(fieldv, lift_smooth(w.restrict(i0, i1)), xi).Y)
    elif driver == "smooth":
        d = cfg.deltas[0] if delta is None else float(delta)
        if abs(d * lay.cells_per_unit - round(d * lay.cells_per_unit)) > 1e-9 or d > max(cfg.deltas):
            raise ConfigError(f"delta = {d} must be a mesh multiple no larger than the largest configured delta")
        path = solve_ode_rk4(fieldv, w, SmoothingParams(d, lay.mesh), xi, lay.window)
    else:
        raise ConfigError(f"unknown driver {driver!r}")
    f = Path(cfg.out_dir) / "solve.csv"
    f.parent.mkdir(parents=True, exist_ok=True)
    write_path_csv(path, f, prefix="y")
    return Report("solve", [f], True, f"{path.grid.n_points} rows")


COMMANDS = {
    "simulate": cmd_simulate,
    "covariance-check": cmd_covariance_check,
    "covariance-table": cmd_covariance_table,
    "variation-check": cmd_variation_check,
    "path-convergence": cmd_path_convergence,
    "rds-convergence": cmd_rds_convergence,
    "cocycle-check": cmd_cocycle_check,
    "moment-scaling": cmd_moment_scaling,
    "solve": cmd_solve,
}


def run(name: str, cfg: ExperimentConfig, **kwargs) -> Report:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return COMMANDS[name](cfg, **kwargs)
