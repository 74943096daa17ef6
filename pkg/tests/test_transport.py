import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TWO_PI, random_periodic
from hydrostat.grid import DIRICHLET_ZERO, ScalarField, constant, make_grid, sample
from hydrostat.norms import sobolev_norm
from hydrostat.presets import transport_velocity
from hydrostat.transport import (
    CFLError,
    TransportParams,
    density_growth_check,
    step_count,
    transport_solve,
    transport_step,
    vertical_velocity,
    vertical_velocity_array,
)

G = make_grid(1.0, 32, 32)


def _zero(grid):
    return np.zeros(grid.shape)


def test_vertical_velocity_examples():
    w = vertical_velocity(ScalarField(G, _zero(G), DIRICHLET_ZERO))
    assert np.all(w.values == 0.0)
    errs = []
    for n in (16, 32, 64):
        g = make_grid(1.0, n, n)
        u = sample(g, lambda x, y: np.sin(TWO_PI * x) * np.sin(TWO_PI * y), DIRICHLET_ZERO)
        w = vertical_velocity(u).values
        X, Y = g.mesh()
        errs.append(np.max(np.abs(w + np.cos(TWO_PI * X) * (1 - np.cos(TWO_PI * Y)))))
        assert np.all(w[:, 0] == 0.0)
        assert np.max(np.abs(w[:, -1])) <= 10 * g.hy ** 2
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5
    prof = sample(G, lambda x, y: np.sin(np.pi * y) + 0 * x, DIRICHLET_ZERO)
    assert np.all(vertical_velocity(prof).values == 0.0)
    with pytest.raises(ValueError):
        vertical_velocity(constant(G, 1.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-4, 4), st.floats(-4, 4))
def test_vertical_velocity_linear_and_antisymmetric(seed, a, b):
    rng = np.random.default_rng(seed)
    u1 = random_periodic(G, rng, wall_zero=True)
    u2 = random_periodic(G, rng, wall_zero=True)
    lhs = vertical_velocity_array(a * u1 + b * u2, G.hx, G.hy)
    rhs = a * vertical_velocity_array(u1, G.hx, G.hy) + b * vertical_velocity_array(u2, G.hx, G.hy)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))
    assert np.all(lhs[:, 0] == 0.0)
    sym = u1 + u1[:, ::-1]
    w = vertical_velocity_array(sym, G.hx, G.hy)
    assert np.max(np.abs(w + w[:, ::-1] - w[:, -1:])) <= 1e-10


def test_params_validation():
    with pytest.raises(ValueError):
        TransportParams(lam=-1.0)
    with pytest.raises(ValueError):
        TransportParams(dt=0.0)
    assert step_count(1.0, 0.3) == (4, 0.25)


def test_cfl_guard_and_negative_density():
    rho = constant(G, 1.0)
    u = np.full(G.shape, 10.0)
    with pytest.raises(CFLError):
        transport_step(rho, u, _zero(G), TransportParams(0.0, 0.01))
    transport_step(rho, u, _zero(G), TransportParams(0.0, 0.01, cfl_guard=False))
    neg = np.ones(G.shape)
    neg[3, 3] = -0.1
    with pytest.raises(ValueError):
        transport_step(ScalarField(G, neg), _zero(G), _zero(G), TransportParams(0.0, 1e-3))


def test_x_independent_density_at_rest_unchanged():
    rho = sample(G, lambda x, y: 1 + 0.5 * np.cos(np.pi * y) + 0 * x)
    out = transport_step(rho, _zero(G), _zero(G), TransportParams(0.3, 1e-4))
    assert np.array_equal(out.values, rho.values)


def test_heat_decay_in_x():
    g = make_grid(1.0, 32, 8)
    lam, T = 0.01, 1.0
    rho0 = sample(g, lambda x, y: 1 + 0.5 * np.sin(TWO_PI * x) + 0 * y)
    traj = transport_solve(rho0, lambda n, t: (_zero(g), _zero(g)), TransportParams(lam, 0.01), T)
    assert np.all(np.diff(traj.maxs) < 0) and np.all(np.diff(traj.mins) > 0)
    final = traj.fields[-1].values[:, 0]
    amp = 2 * np.abs(np.fft.rfft(final)[1]) / g.Nx
    expected = 0.5 * math.exp(-4 * math.pi ** 2 * lam * T)
    assert abs(amp - expected) <= 0.05 * expected


def test_translation_matches_characteristics_first_order():
    errs = []
    for n in (32, 64, 128):
        g = make_grid(1.0, n, 8)
        rho0 = sample(g, lambda x, y: 1 + 0.5 * np.sin(TWO_PI * x) + 0 * y)
        u = np.full(g.shape, 0.3)
        T = 0.5
        traj = transport_solve(rho0, lambda k, t: (u, _zero(g)), TransportParams(0.0, 0.5 * g.hx / 0.3), T)
        X, _ = g.mesh()
        exact = 1 + 0.5 * np.sin(TWO_PI * (X - 0.3 * T))
        errs.append(np.max(np.abs(traj.fields[-1].values - exact)))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 1.6 < r1 < 2.4 and 1.6 < r2 < 2.4


def test_rest_trajectory_constant():
    rho0 = sample(G, lambda x, y: 1 + 0.3 * np.sin(TWO_PI * x) * np.cos(np.pi * y))
    traj = transport_solve(rho0, lambda n, t: (_zero(G), _zero(G)), TransportParams(0.0, 0.01), 0.1)
    for f in traj.fields:
        assert np.array_equal(f.values, rho0.values)
    assert len(traj.times) == 11 and list(traj.rows())[0][0] == 0.0


def test_mass_drift_is_first_order():
    drifts = []
    for n in (32, 64):
        g = make_grid(1.0, n, n)
        rho0 = sample(g, lambda x, y: 1 + 0.5 * np.sin(TWO_PI * x + 0.7) * y * y)
        u, w = transport_velocity("shear", g, 0.5)
        traj = transport_solve(rho0, lambda k, t: (u, w), TransportParams(0.0, 0.25 * g.hx), 0.5)
        drifts.append(abs(traj.masses[-1] - traj.masses[0]))
    assert 0 < drifts[1] <= g.hx * 0.5
    assert 1.7 < drifts[0] / drifts[1] < 2.3


@pytest.mark.parametrize("seed", range(5))
def test_maximum_principle_and_floor(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(1.0, 32, 32)
    rho0 = ScalarField(g, 0.1 + np.abs(random_periodic(g, rng)))
    u = 0.5 * random_periodic(g, rng, wall_zero=True)
    traj = transport_solve(rho0, lambda k, t: (u, None), TransportParams(1e-3, 2e-3), 0.2)
    assert np.all(np.diff(traj.mins) >= -1e-12) and np.all(np.diff(traj.maxs) <= 1e-12)
    assert min(traj.mins) >= 0.1 - 1e-12


def test_vacuum_stays_non_negative():
    rho0 = sample(G, lambda x, y: np.maximum(0.0, np.sin(TWO_PI * x)) ** 2 + 0 * y)
    u, w = transport_velocity("shear", G, 1.0)
    traj = transport_solve(rho0, lambda k, t: (u, w), TransportParams(1e-3, 5e-3), 0.5)
    assert min(traj.mins) >= 0.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 0.05), st.floats(0.1, 5.0))
def test_constant_density_is_fixed_point(seed, lam, c):
    rng = np.random.default_rng(seed)
    u = random_periodic(G, rng, wall_zero=True)
    w = vertical_velocity_array(u, G.hx, G.hy)
    p = TransportParams(lam, 0.2 / (np.max(np.abs(u)) / G.hx + np.max(np.abs(w)) / G.hy + 2 * lam / G.hx ** 2 + 1))
    out = transport_step(constant(G, c), u, w, p)
    assert np.max(np.abs(out.values - c)) <= 1e-14 * c


def test_lambda_vanishing_first_order():
    g = make_grid(1.0, 64, 16)
    rho0 = sample(g, lambda x, y: 1 + 0.5 * np.sin(TWO_PI * x) * np.cos(np.pi * y))
    u, w = transport_velocity("shear", g, 0.5)
    dt = 0.2 * g.hx

    def run(lam):
        return transport_solve(rho0, lambda k, t: (u, w), TransportParams(lam, dt), 0.5).fields[-1].values

    base = run(0.0)
    d = [math.sqrt(np.mean((run(lam) - base) ** 2)) for lam in (4e-3, 2e-3, 1e-3)]
    assert d[0] > d[1] > d[2]
    assert 1.7 < d[0] / d[1] < 2.3 and 1.7 < d[1] / d[2] < 2.3


def test_growth_check_degenerate_at_rest():
    rho0 = sample(G, lambda x, y: 1 + 0.3 * np.sin(TWO_PI * x) + 0 * y)
    traj = transport_solve(rho0, lambda n, t: (_zero(G), _zero(G)), TransportParams(0.0, 0.01), 0.1)
    rep = density_growth_check(traj, [0.0] * 10)
    assert rep.degenerate and math.isnan(rep.max_c_grad)
    assert traj.grad_linf[-1] == traj.grad_linf[0]


def test_growth_constant_stable_under_refinement():
    # first-order upwind smearing dominates the gradient on coarser grids
    finals = []
    for n in (64, 128):
        g = make_grid(1.0, n, n)
        rho0 = sample(g, lambda x, y: 1 + 0.3 * np.sin(TWO_PI * x) * np.cos(np.pi * y))
        uf = sample(g, lambda x, y: np.sin(TWO_PI * x) * np.sin(TWO_PI * y), DIRICHLET_ZERO)
        h3 = sobolev_norm(uf, 3)
        traj = transport_solve(rho0, lambda k, t: (uf, None), TransportParams(0.0, 0.2 * g.hx), 0.3)
        rep = density_growth_check(traj, [h3] * (len(traj.times) - 1))
        assert all(math.isfinite(c) for c in rep.c_grad)
        finals.append(rep.c_grad[-1])
        assert rep.c_third is not None
    assert abs(finals[1] - finals[0]) <= 0.2 * abs(finals[1])
