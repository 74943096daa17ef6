import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TWO_PI, random_periodic
from hydrostat.grid import (
    DIRICHLET_ZERO,
    FREE,
    GridError,
    PressureProfile,
    ScalarField,
    constant,
    cumint_y,
    dx,
    dy,
    integral_domain,
    make_grid,
    sample,
    trapz_y_array,
)


def test_spacing_examples():
    g = make_grid(1.0, 16, 16)
    assert g.hx == pytest.approx(0.0625) and g.hy == pytest.approx(0.0625)
    g = make_grid(2.0, 32, 16)
    assert g.hx == pytest.approx(0.0625) and g.hy == pytest.approx(0.0625)
    assert g.shape == (32, 17)
    assert g.x[-1] == pytest.approx(2.0 - g.hx)  # x = L is the image of x = 0
    assert g.y[0] == 0.0 and g.y[-1] == 1.0


@pytest.mark.parametrize("args", [(1.0, 7, 16), (1.0, 6, 16), (1.0, 16, 7), (0.0, 16, 16), (-1.0, 16, 16)])
def test_grid_rejects(args):
    with pytest.raises(GridError):
        make_grid(*args)


def test_sample_examples(g16):
    ones = sample(g16, lambda x, y: 1.0 + 0 * x)
    assert np.all(ones.values == 1.0)
    s = sample(g16, lambda x, y: np.sin(TWO_PI * x) * np.sin(TWO_PI * y), DIRICHLET_ZERO)
    assert np.all(s.values[:, 0] == 0.0) and np.all(s.values[:, -1] == 0.0)
    with pytest.raises(GridError):
        sample(g16, lambda x, y: np.sin(TWO_PI * x) * np.cos(TWO_PI * y), DIRICHLET_ZERO)
    with pytest.raises(GridError):
        sample(g16, lambda x, y: np.log(x))


def test_field_invariants(g16):
    bad = np.zeros(g16.shape)
    bad[0, 0] = np.nan
    with pytest.raises(GridError):
        ScalarField(g16, bad)
    wall = np.zeros(g16.shape)
    wall[3, 0] = 1e-300
    with pytest.raises(GridError):
        ScalarField(g16, wall, DIRICHLET_ZERO)
    with pytest.raises(GridError):
        ScalarField(g16, np.zeros((16, 16)))
    f = constant(g16, 2.0)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0  # stored read-only


def test_dx_examples():
    g = make_grid(1.0, 8, 8)
    f = sample(g, lambda x, y: np.sin(TWO_PI * x) + 0 * y)
    assert dx(f).values[0, 3] == pytest.approx(8 * math.sin(math.pi / 4), abs=1e-12)
    assert np.all(dx(constant(g, 3.0)).values == 0.0)
    assert dx(f).bc_y == FREE


def _order(errors):
    return math.log2(errors[0] / errors[1]), math.log2(errors[1] / errors[2])


def test_dx_dy_cumint_orders():
    ex, ey, ec = [], [], []
    for n in (16, 32, 64):
        g = make_grid(1.0, n, n)
        X, Y = g.mesh()
        fx = sample(g, lambda x, y: np.sin(TWO_PI * x) + 0 * y)
        ex.append(np.max(np.abs(dx(fx).values - TWO_PI * np.cos(TWO_PI * X))))
        fy = sample(g, lambda x, y: np.sin(TWO_PI * y) + 0 * x)
        ey.append(np.max(np.abs(dy(fy).values - TWO_PI * np.cos(TWO_PI * Y))))
        fc = sample(g, lambda x, y: np.cos(TWO_PI * y) + 0 * x)
        ec.append(np.max(np.abs(cumint_y(fc).values - np.sin(TWO_PI * Y) / TWO_PI)))
    for errs in (ex, ey, ec):
        assert min(_order(errs)) >= 1.9


def test_dy_exact_on_quadratics(g16):
    f = sample(g16, lambda x, y: y + 0 * x)
    assert np.max(np.abs(dy(f).values - 1.0)) <= 1e-12
    q = sample(g16, lambda x, y: 3 * y * y - y + 0 * x)
    assert np.max(np.abs(dy(q).values - (6 * g16.mesh()[1] - 1))) <= 1e-11
    assert np.max(np.abs(dy(constant(g16, 4.0)).values)) <= 1e-12


def test_cumint_examples(g16):
    g = cumint_y(constant(g16, 1.0))
    assert np.max(np.abs(g.values - g16.mesh()[1])) <= 1e-12
    assert np.all(g.values[:, 0] == 0.0)
    s = cumint_y(sample(g16, lambda x, y: np.sin(TWO_PI * y) + 0 * x))
    assert np.max(np.abs(s.values[:, -1])) <= 1e-12  # symmetric samples cancel exactly
    c = cumint_y(sample(g16, lambda x, y: np.cos(TWO_PI * y) + 0 * x))
    assert np.max(np.abs(c.values[:, 8])) <= 10 * g16.hy ** 2


def test_integral_examples():
    g = make_grid(1.0, 32, 32)
    assert integral_domain(constant(g, 1.0)) == pytest.approx(1.0, abs=1e-14)
    assert abs(integral_domain(sample(g, lambda x, y: np.sin(TWO_PI * x) + 0 * y))) <= 1e-12
    val = integral_domain(sample(g, lambda x, y: np.sin(TWO_PI * x) ** 2 * np.sin(TWO_PI * y) ** 2))
    assert val == pytest.approx(0.25, abs=g.hy ** 2)
    g2 = make_grid(2.0, 32, 16)
    assert integral_domain(constant(g2, 1.0)) == pytest.approx(2.0, abs=1e-14)


def test_cumint_top_matches_trapezoid(g32):
    rng = np.random.default_rng(1)
    f = ScalarField(g32, rng.normal(size=g32.shape))
    top = cumint_y(f).values[:, -1]
    assert np.max(np.abs(top - trapz_y_array(f.values, g32.hy))) <= 1e-13


def test_x_constant_fields_have_zero_dx(g16):
    rng = np.random.default_rng(2)
    prof = rng.normal(size=g16.Ny + 1)
    f = ScalarField(g16, np.tile(prof, (g16.Nx, 1)))
    assert np.all(dx(f).values == 0.0)
    row = rng.normal(size=(g16.Nx, 1))
    h = ScalarField(g16, np.tile(row, (1, g16.Ny + 1)))
    d = dy(h).values
    assert np.all(d[:, 1:-1] == 0.0) and np.max(np.abs(d)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_and_skew_adjointness(seed, a, b):
    g = make_grid(1.0, 16, 8)
    rng = np.random.default_rng(seed)
    f = ScalarField(g, rng.normal(size=g.shape))
    h = ScalarField(g, rng.normal(size=g.shape))
    for op in (dx, dy):
        lhs = op(f * a + h * b).values
        rhs = a * op(f).values + b * op(h).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))
    ibp = integral_domain(dx(f) * h) + integral_domain(f * dx(h))
    assert abs(ibp) <= 1e-10


def test_pressure_profile(g16):
    p = PressureProfile.project(g16, np.cos(TWO_PI * g16.x) + 5.0)
    assert abs(np.mean(p.values)) <= 1e-12
    with pytest.raises(GridError):
        PressureProfile(g16, np.ones(g16.Nx))
    with pytest.raises(GridError):
        PressureProfile(g16, np.zeros(g16.Nx + 1))
    d = p.derivative()
    assert d.shape == (g16.Nx,)
    assert p.as_field().values.shape == g16.shape


def test_random_periodic_helper_is_smooth(g32):
    f = random_periodic(g32, np.random.default_rng(0), wall_zero=True)
    ScalarField(g32, f, DIRICHLET_ZERO)
