import numpy as np
import pytest

from roughcocycle.analytic_cov import (
    CovarianceModel,
    bm_model,
    bound_rho_var_bm,
    bound_rho_var_X_delta,
    growth_constant_bm,
    growth_constant_x_delta,
    omega_delta_model,
    x_delta_model,
)
from roughcocycle.gaussian_driver import bm_batch
from roughcocycle.grid_path import make_grid
from roughcocycle.smoothing import SmoothingParams, smooth_values
from roughcocycle.variation import (
    check_th109_hypotheses,
    rect_cov_from_samples,
    rect_cov_from_sigma2,
    rho_variation_bruteforce,
)


def test_diagonal_and_symmetry():
    rng = np.random.default_rng(0)
    R = rect_cov_from_sigma2(x_delta_model(0.3))
    for _ in range(100):
        s, t, s2, t2 = rng.uniform(-1, 1, 4)
        s, t = min(s, t), max(s, t)
        assert R(s, t, s, t) == pytest.approx(x_delta_model(0.3)(t - s), abs=1e-14)
        assert R(s, t, s2, t2) == pytest.approx(R(s2, t2, s, t), abs=1e-14)


def test_bm_disjoint_intervals_vanish():
    R = rect_cov_from_sigma2(bm_model())
    assert R(0.0, 0.3, 0.5, 0.9) == pytest.approx(0.0, abs=1e-15)
    assert R(-0.4, -0.1, 0.0, 0.7) == pytest.approx(0.0, abs=1e-15)
    assert R(0.0, 0.5, 0.25, 1.0) == pytest.approx(0.25)


def test_x_delta_rect_cov_matches_monte_carlo():
    delta, mesh = 0.25, 1 / 64
    g = make_grid(0, 1.25, 80)
    p = SmoothingParams(delta, mesh)
    N = 100_000
    w = bm_batch(g, 1, 77, range(N))
    k = p.cells
    wd = smooth_values(w, k, delta, mesh, 0, 64, 0)
    X = (wd - w[:, :65, :])[:, :, 0]
    times = g.times[:65]
    emp = rect_cov_from_samples(times, X)
    R = rect_cov_from_sigma2(x_delta_model(delta))
    for s, t, s2, t2 in [(0, 0.125, 0.5, 0.625), (0, 0.25, 0.125, 0.5), (0.25, 0.75, 0.5, 1.0), (0, 1, 0, 1)]:
        a = X[:, round(t * 64)] - X[:, round(s * 64)]
        b = X[:, round(t2 * 64)] - X[:, round(s2 * 64)]
        se = np.std(a * b) / np.sqrt(N)
        assert abs(emp(s, t, s2, t2) - R(s, t, s2, t2)) <= 3 * se
    with pytest.raises(ValueError):
        emp(0, 0.3, 0, 1)


def test_bruteforce_bm_rho_one():
    R = rect_cov_from_sigma2(bm_model())
    assert rho_variation_bruteforce(R, [0, 0.25, 0.5, 0.75, 1], 1.0) == pytest.approx(1.0, abs=1e-14)
    for pts in ([0.1, 0.2, 0.7], [0, 0.3, 0.31, 0.9, 1.4, 2.0]):
        assert rho_variation_bruteforce(R, pts, 1.0) == pytest.approx(max(pts) - min(pts), abs=1e-13)


def test_bruteforce_single_interval():
    m = x_delta_model(0.25)
    R = rect_cov_from_sigma2(m)
    assert rho_variation_bruteforce(R, [0.1, 0.4], 1.3) == pytest.approx(m(0.3), rel=1e-13)


def test_bruteforce_x_delta_below_bound():
    R = rect_cov_from_sigma2(x_delta_model(0.25))
    pts = np.linspace(0, 1, 8)
    assert rho_variation_bruteforce(R, pts, 1.25) <= bound_rho_var_X_delta(0.25, 1.25, 0, 1)


def test_bruteforce_errors():
    R = rect_cov_from_sigma2(bm_model())
    with pytest.raises(ValueError):
        rho_variation_bruteforce(R, [0.0], 1.0)
    with pytest.raises(ValueError):
        rho_variation_bruteforce(R, np.linspace(0, 1, 11), 1.0)
    with pytest.raises(ValueError):
        rho_variation_bruteforce(R, [0, 1], 0.5)


def test_bruteforce_monotone_in_points():
    rng = np.random.default_rng(1)
    R = rect_cov_from_sigma2(x_delta_model(0.2))
    for _ in range(5):
        pts = list(np.sort(rng.uniform(0, 1, 7)))
        base = rho_variation_bruteforce(R, pts, 1.25)
        extra = pts + [float(rng.uniform(pts[0], pts[-1]))]
        assert rho_variation_bruteforce(R, extra, 1.25) >= base - 1e-14


@pytest.mark.parametrize("rho", [1.0, 1.25, 1.5])
@pytest.mark.parametrize("window", [(0.0, 1.0), (0.0, 0.3), (-0.5, 0.5)])
def test_shipped_models_below_bounds(rho, window):
    pts = np.linspace(*window, 7)
    s, t = window
    for d in (0.1, 0.25, 1.0):
        v = rho_variation_bruteforce(rect_cov_from_sigma2(x_delta_model(d)), pts, rho)
        assert v <= bound_rho_var_X_delta(d, rho, s, t) + 1e-12
    T = max(abs(s), abs(t))
    v = rho_variation_bruteforce(rect_cov_from_sigma2(bm_model(T)), pts, rho)
    assert v <= bound_rho_var_bm(T, rho, s, t) + 1e-12


def test_th109_reports():
    for d in (0.1, 0.5):
        rep = check_th109_hypotheses(x_delta_model(d), 2.0, 1.25, growth_constant_x_delta(d, 1.25))
        assert rep.all_pass
        assert rep.bound(0, 1) == pytest.approx(bound_rho_var_X_delta(d, 1.25, 0, 1))
    T = 2.0
    assert check_th109_hypotheses(bm_model(T), T, 1.5, growth_constant_bm(T, 1.5)).all_pass
    sq = CovarianceModel(lambda u: u * u, "square")
    rep = check_th109_hypotheses(sq, 1.0, 1.0, 1.0)
    assert not rep.concave and rep.monotone and not rep.all_pass
    rep = check_th109_hypotheses(omega_delta_model(0.3), 1.0, 1.0, 1.0)
    assert rep.monotone
