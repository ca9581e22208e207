import numpy as np
import pytest

from roughcocycle.gaussian_driver import RngStream, bm_reference_lift, sample_bm
from roughcocycle.grid_path import VectorPath, holder_seminorm, make_grid, wiener_shift
from roughcocycle.rde import (
    ControlledPath,
    SolverDivergence,
    cocycle_phi,
    compose_controlled,
    constant_field,
    get_field,
    linear_field,
    rough_integral,
    sin_field,
    sincos_field,
    solve_ode_rk4,
    solve_rde,
)
from roughcocycle.rough_core import area_lookup, lift_smooth, shift_lift
from roughcocycle.smoothing import SmoothingParams, smooth_lift, smooth_path


def bm_lift(n, m, seed, t0=0.0, t1=1.0):
    g = make_grid(t0, t1, n)
    return bm_reference_lift(sample_bm(g, m, RngStream(seed)))


def identity_cp(lift):
    n1, m = lift.path.values.shape
    return ControlledPath(lift.grid, lift.path.values.copy(), np.broadcast_to(np.eye(m), (n1, m, m)).copy(), lift)


@pytest.mark.parametrize("name", ["sincos", "sin", "constant", "linear"])
def test_fields_derivatives(name):
    f = get_field(name)
    pts = np.random.default_rng(0).uniform(-3, 3, (100, f.d))
    assert f.derivative_error(pts) <= 1e-5
    assert f.f(pts).shape == (100, f.d, f.m)
    assert f.Df(pts).shape == (100, f.d, f.m, f.d)


def test_unknown_field():
    with pytest.raises(ValueError):
        get_field("nope")


def test_sincos_is_bounded():
    f = sincos_field()
    y = np.random.default_rng(1).uniform(-50, 50, (1000, 2))
    assert np.max(np.abs(f.f(y))) <= f.bounds["f"]
    assert np.max(np.abs(f.Df(y))) <= f.bounds["Df"]


def test_controlled_path_validation():
    lift = bm_lift(8, 1, 0)
    with pytest.raises(ValueError):
        ControlledPath(lift.grid, np.zeros((8, 1)), np.zeros((8, 1, 1)), lift)
    with pytest.raises(ValueError):
        ControlledPath(lift.grid, np.zeros((9, 1)), np.zeros((9, 1, 2)), lift)


def test_compose_constant_and_identity():
    lift = bm_lift(16, 2, 1)
    cp = identity_cp(lift)
    c = compose_controlled(constant_field([[1.0, 2.0], [3.0, 4.0]]), cp)
    assert np.all(c.Yp == 0)
    lift1 = bm_lift(16, 1, 2)
    cp1 = identity_cp(lift1)
    same = compose_controlled(linear_field(1.0), cp1)
    # the composite is matrix valued, shape (n+1, d, m)
    np.testing.assert_array_equal(same.Y[:, :, 0], cp1.Y)
    np.testing.assert_array_equal(same.Yp[:, :, 0, :], cp1.Yp)
    with pytest.raises(ValueError):
        compose_controlled(sincos_field(), cp1)


def test_compose_sin_taylor():
    lift = bm_lift(512, 1, 3)
    c = compose_controlled(sin_field(), identity_cp(lift))
    w = lift.path.values[:, 0]
    np.testing.assert_allclose(c.Yp[:, 0, 0, 0], np.cos(w), atol=1e-15)
    # R(s,t) = sin(w_t) - sin(w_s) - cos(w_s) dw = -sin(w_s) dw^2 / 2 + O(dw^3)
    for s, t in [(0, 1), (10, 13), (100, 164), (0, 512)]:
        dw = w[t] - w[s]
        r = c.remainder(s, t)[0, 0]
        assert abs(r + 0.5 * np.sin(w[s]) * dw**2) <= abs(dw) ** 3 / 6 + 1e-15
    # |R| <= dw^2 / 2 caps the 2beta seminorm by half the squared beta seminorm at every level,
    # while the per-cell Taylor defect beyond second order shrinks with the mesh
    fine = bm_lift(2048, 1, 3)
    defects = []
    for n in (128, 512, 2048):
        lift_n = fine.coarsen(2048 // n)
        cp = compose_controlled(sin_field(), identity_cp(lift_n))
        assert cp.remainder_seminorm(0.4) <= 0.5 * holder_seminorm(lift_n.path, 0.4) ** 2 + 1e-12
        wn = lift_n.path.values[:, 0]
        dw = np.diff(wn)
        r = np.array([cp.remainder(k, k + 1)[0, 0] for k in range(n)])
        defects.append(np.max(np.abs(r + 0.5 * np.sin(wn[:-1]) * dw**2)))
    assert defects[0] > defects[1] > defects[2]


def test_rough_integral_constant_and_linear():
    lift = bm_lift(64, 2, 4)
    C = np.array([[1.0, -2.0], [0.5, 0.25]])
    cp = identity_cp(lift)
    x = lift.path.values
    np.testing.assert_allclose(rough_integral(constant_field(C), cp, lift, 5, 40), C @ (x[40] - x[5]), atol=1e-13)
    assert np.all(rough_integral(constant_field(C), cp, lift, 7, 7) == 0)
    lift1 = bm_lift(64, 1, 5)
    w = lift1.path.values[:, 0]
    val = rough_integral(linear_field(1.0), identity_cp(lift1), lift1, 3, 50)[0]
    assert val == pytest.approx(area_lookup(lift1, 3, 50)[0, 0] + w[3] * (w[50] - w[3]), abs=1e-13)
    with pytest.raises(ValueError):
        rough_integral(linear_field(1.0), identity_cp(lift1), lift1, 10, 3)


def test_rough_integral_additive_and_shift():
    lift = bm_lift(96, 2, 6)
    cp = identity_cp(lift)
    g = get_field("sincos")
    whole = rough_integral(g, cp, lift, 10, 80)
    parts = rough_integral(g, cp, lift, 10, 33) + rough_integral(g, cp, lift, 33, 80)
    np.testing.assert_allclose(whole, parts, atol=1e-13)
    j = 17
    sh = shift_lift(lift, j)
    cp_sh = ControlledPath(sh.grid, cp.Y[j:], cp.Yp[j:], sh)
    np.testing.assert_allclose(rough_integral(g, cp_sh, sh, 0, 50), rough_integral(g, cp, lift, j, j + 50), atol=1e-12)


def test_rough_integral_refinement_order():
    # coarsened lifts keep the exact fine areas, so level differences isolate the scheme error;
    # the cubic local errors carry random signs, so the averaged differences decay like h
    beta = 0.34
    f = sincos_field()
    levels = [2**k for k in range(5, 12)]
    diffs = np.zeros(len(levels) - 1)
    for seed in range(128):
        fine = bm_lift(2**14, 2, 100 + seed)
        vals = []
        for n in levels:
            lift = fine.coarsen(2**14 // n)
            vals.append(rough_integral(f, identity_cp(lift), lift, 0, n))
        diffs += [np.linalg.norm(vals[i + 1] - vals[i]) for i in range(len(vals) - 1)]
    h = 1.0 / np.array(levels[:-1])
    order = np.polyfit(np.log(h), np.log(diffs), 1)[0]
    assert order >= 3 * beta - 0.1


def test_solve_rde_constant_and_derivative():
    lift = bm_lift(64, 2, 7)
    C = np.array([[1.0, 0.5], [-0.3, 0.8]])
    xi = np.array([0.2, -1.0])
    sol = solve_rde(constant_field(C), lift, xi)
    np.testing.assert_allclose(sol.Y, xi + (lift.path.values - lift.path.values[0]) @ C.T, atol=1e-13)
    sol = solve_rde(sincos_field(), lift, xi, (8, 40))
    assert np.all(sol.Y[0] == xi)
    np.testing.assert_array_equal(sol.Yp, sincos_field().f(sol.Y))
    with pytest.raises(ValueError):
        solve_rde(sin_field(), lift, [0.0])


def test_solve_rde_linear_smooth_driver():
    n = 2**12
    g = make_grid(0, 1.25, n + n // 4)
    w = sample_bm(g, 1, RngStream(8))
    p = SmoothingParams(0.25, g.mesh)
    lift = smooth_lift(w, p)
    a = 0.7
    sol = solve_rde(linear_field(a), lift, [1.5])
    exact = 1.5 * np.exp(a * lift.path.values[:, 0])
    assert np.max(np.abs(sol.Y[:, 0] / exact - 1)) <= 1e-3


def test_rk4_constant_and_linear():
    n = 2**12
    g = make_grid(0, 1.25, n + n // 4)
    w = sample_bm(g, 2, RngStream(9))
    p = SmoothingParams(0.25, g.mesh)
    wd = smooth_path(w, p)
    C = np.array([[1.0, 0.5], [-0.3, 0.8]])
    Y = solve_ode_rk4(constant_field(C), w, p, [0.1, 0.2])
    np.testing.assert_allclose(Y.values, np.array([0.1, 0.2]) + wd.values @ C.T, atol=1e-12)
    w1 = VectorPath(g, w.values[:, :1])
    Y = solve_ode_rk4(linear_field(0.8), w1, p, [1.0])
    np.testing.assert_allclose(Y.values[:, 0], np.exp(0.8 * wd.values[:, 0]), rtol=1e-8)


def test_rk4_convergence_order():
    # the same interpolated driver at every level: refine by linear interpolation
    base = sample_bm(make_grid(0, 1.25, 20), 1, RngStream(10))
    errs = []
    for r in (1, 2, 4, 8):
        g = make_grid(0, 1.25, 20 * r)
        vals = np.interp(g.times, base.grid.times, base.values[:, 0])[:, None]
        w = VectorPath(g, vals)
        p = SmoothingParams(0.25, g.mesh)
        wd = smooth_path(w, p)
        Y = solve_ode_rk4(sin_field(), w, p, [0.3])
        # exact flow of y' = sin(y) w_delta': tan(y/2) = tan(y0/2) exp(w_delta)
        exact = 2 * np.arctan(np.tan(0.15) * np.exp(wd.values[:, 0]))
        errs.append(np.max(np.abs(Y.values[:, 0] - exact)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 3.5)


def test_rde_agrees_with_rk4_on_smooth_driver():
    n = 2**10
    g = make_grid(0, 1.25, n + n // 4)
    w = sample_bm(g, 2, RngStream(12))
    p = SmoothingParams(0.25, g.mesh)
    f = sincos_field()
    a = solve_rde(f, smooth_lift(w, p), [0.5, -0.5]).Y
    b = solve_ode_rk4(f, w, p, [0.5, -0.5]).values
    assert np.max(np.abs(a - b)) <= 10 * g.mesh


def test_divergence_reported():
    g = make_grid(0, 1, 400)
    w = VectorPath(g, 3.0 * g.times[:, None])
    with pytest.raises(SolverDivergence) as info:
        solve_rde(linear_field(400.0), lift_smooth(w), [1.0])
    assert 0 < info.value.index <= 400
    with pytest.raises(SolverDivergence):
        solve_ode_rk4(linear_field(400.0), w, SmoothingParams(g.mesh, g.mesh), [1.0], (0, 399))


def test_cocycle_rough():
    lift = bm_lift(400, 2, 13, -1.0, 1.0)
    f = sincos_field()
    xi = np.array([0.3, -0.2])
    np.testing.assert_array_equal(cocycle_phi(0, lift, xi, f), xi)
    z = lift.grid.zero_index
    for j, t in [(1, 50), (37, 100), (120, 80)]:
        direct = cocycle_phi(t + j, lift, xi, f)
        mid = cocycle_phi(j, lift, xi, f)
        chained = cocycle_phi(t, shift_lift(lift, j), mid, f)
        assert np.max(np.abs(direct - chained)) <= 1e-10
        # two chained solves on the same lift
        first = solve_rde(f, lift, xi, (z, z + j)).Y[-1]
        second = solve_rde(f, lift, first, (z + j, z + j + t)).Y[-1]
        assert np.max(np.abs(direct - second)) <= 1e-10


def test_cocycle_rk4():
    g = make_grid(0, 1.5, 192)
    w = sample_bm(g, 2, RngStream(14))
    p = SmoothingParams(0.25, g.mesh)
    f = sincos_field()
    xi = np.array([0.3, -0.2])
    assert np.all(cocycle_phi(0, w, xi, f, "rk4", p) == xi)
    for j, t in [(8, 64), (40, 100)]:
        direct = cocycle_phi(t + j, w, xi, f, "rk4", p)
        chained = cocycle_phi(t, wiener_shift(w, j), cocycle_phi(j, w, xi, f, "rk4", p), f, "rk4", p)
        assert np.max(np.abs(direct - chained)) <= 10 * g.mesh
    with pytest.raises(ValueError):
        cocycle_phi(5, w, xi, f, "rk4")
    with pytest.raises(ValueError):
        cocycle_phi(5, w, xi, f, "euler", p)
