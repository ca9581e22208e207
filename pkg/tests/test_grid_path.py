import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roughcocycle.grid_path import (
    TimeGrid,
    VectorPath,
    holder_seminorm,
    make_grid,
    read_path_csv,
    wiener_shift,
    write_path_csv,
)


def test_make_grid_points():
    g = make_grid(0, 1, 4)
    np.testing.assert_array_equal(g.times, [0, 0.25, 0.5, 0.75, 1])
    assert g.mesh == 0.25


def test_make_grid_symmetric_contains_zero():
    g = make_grid(-1, 1, 2)
    np.testing.assert_array_equal(g.times, [-1, 0, 1])
    assert g.zero_index == 1


@pytest.mark.parametrize("args", [(0, 1, 0), (1, 0, 4), (0, float("inf"), 3), (float("nan"), 1, 2)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_zero_must_be_grid_point():
    with pytest.raises(ValueError):
        make_grid(-0.3, 1.0, 2)


def test_times_have_no_drift():
    g = make_grid(-1.0, 1.25, 9216)
    assert g.times[4096] == 0.0
    assert g.time(9216) == 1.25


def test_path_validation():
    g = make_grid(0, 1, 4)
    with pytest.raises(ValueError):
        VectorPath(g, np.zeros((4, 2)))
    with pytest.raises(ValueError):
        VectorPath(g, np.array([0, 1, np.nan, 2, 3.0]))


def test_holder_zero_path():
    g = make_grid(0, 1, 16)
    assert holder_seminorm(VectorPath(g, np.zeros((17, 3))), 0.4) == 0.0


@pytest.mark.parametrize("beta", [0.2, 0.4, 0.49])
def test_holder_linear_path(beta):
    g = make_grid(0, 1, 64)
    c = np.array([3.0, -4.0])
    p = VectorPath(g, g.times[:, None] * c)
    # |c| (t - s)^(1 - beta) is largest on the full interval
    assert holder_seminorm(p, beta) == pytest.approx(5.0, rel=1e-12)


def test_holder_single_cell():
    g = TimeGrid(0.0, 1, 0.01)
    v = np.array([0.3, 0.4])
    p = VectorPath(g, np.stack([np.zeros(2), v]))
    assert holder_seminorm(p, 0.4) == pytest.approx(0.5 / 0.01**0.4, rel=1e-12)


def test_holder_window_and_errors():
    g = make_grid(0, 1, 8)
    p = VectorPath(g, np.arange(9.0) ** 2)
    full = holder_seminorm(p, 0.5)
    assert holder_seminorm(p, 0.5, (0, 2)) < full
    with pytest.raises(ValueError):
        holder_seminorm(p, 0.5, (3, 3))
    with pytest.raises(ValueError):
        holder_seminorm(p, 0.5, (0, 9))


@given(
    st.integers(0, 2**31),
    st.floats(-5, 5).filter(lambda v: v == 0 or abs(v) > 1e-6),
    st.floats(0.05, 0.95),
)
def test_holder_translation_and_homogeneity(seed, lam, beta):
    rng = np.random.default_rng(seed)
    g = make_grid(0, 1, 32)
    p = VectorPath(g, rng.standard_normal((33, 2)).cumsum(axis=0))
    base = holder_seminorm(p, beta)
    assert holder_seminorm(p + rng.standard_normal(2), beta) == pytest.approx(base, rel=1e-12)
    assert holder_seminorm(lam * p, beta) == pytest.approx(abs(lam) * base, rel=1e-12, abs=1e-300)


def test_wiener_shift_identity_and_linear():
    g = make_grid(0, 1, 16)
    c = np.array([2.0, -1.0])
    p = VectorPath(g, g.times[:, None] * c)
    s0 = wiener_shift(p, 0)
    np.testing.assert_array_equal(s0.values, p.values)
    s = wiener_shift(p, 5)
    assert s.grid.n_cells == 11
    np.testing.assert_allclose(s.values, s.grid.times[:, None] * c, atol=1e-15)
    assert np.all(s.values[0] == 0)


def test_wiener_shift_negative_and_errors():
    g = make_grid(-1, 1, 8)
    p = VectorPath(g, np.arange(9.0)[:, None])
    s = wiener_shift(p, -2)
    # theta_tau w(t) = w(t + tau) - w(tau) with tau = -0.5
    assert s.grid.t_start == pytest.approx(-0.5)
    assert s.values[s.grid.zero_index, 0] == 0.0
    with pytest.raises(ValueError):
        wiener_shift(p, 5)


@given(st.integers(0, 2**31), st.integers(0, 20), st.integers(0, 20))
def test_shift_semigroup(seed, j1, j2):
    rng = np.random.default_rng(seed)
    g = make_grid(0, 1, 48)
    p = VectorPath(g, rng.standard_normal((49, 2)).cumsum(axis=0))
    a = wiener_shift(wiener_shift(p, j1), j2)
    b = wiener_shift(p, j1 + j2)
    assert a.grid.compatible(b.grid)
    scale = np.max(np.abs(p.values))
    np.testing.assert_allclose(a.values, b.values, atol=1e-12 * scale)


def test_csv_round_trip(tmp_path):
    g = make_grid(-0.5, 0.5, 10)
    p = VectorPath(g, np.random.default_rng(1).standard_normal((11, 3)))
    f = tmp_path / "p.csv"
    write_path_csv(p, f)
    assert f.read_text().splitlines()[0] == "t,x1,x2,x3"
    q = read_path_csv(f)
    np.testing.assert_array_equal(q.values, p.values)
