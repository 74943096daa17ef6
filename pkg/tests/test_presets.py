import math

import numpy as np
import pytest
import sympy

from conftest import TWO_PI
from hydrostat.grid import DIRICHLET_ZERO, dx, make_grid
from hydrostat.hstokes import ViscosityLaw, mms_forcing
from hydrostat.presets import (
    PresetError,
    mms_pressure,
    preset_catalog,
    separable_forcing,
    time_profile,
    transport_velocity,
)
from hydrostat.transport import vertical_velocity


def test_catalog_contents():
    ids = preset_catalog()
    for pid in ("uniform", "stratified", "shear", "vacuum-band", "mms-steady", "gradient-forcing"):
        assert pid in ids
    with pytest.raises(PresetError):
        preset_catalog("nope")
    with pytest.raises(KeyError):
        preset_catalog("nope")


@pytest.mark.parametrize("L", [1.0, 2.0])
def test_shear_satisfies_constraint(L):
    g = make_grid(L, 32, 32)
    u = preset_catalog("shear").velocity(g)
    assert u.bc_y == DIRICHLET_ZERO
    assert np.max(np.abs(vertical_velocity(u).values[:, -1])) <= 1e-12


def test_vacuum_band():
    g = make_grid(1.0, 32, 16)
    rho = preset_catalog("vacuum-band").density(g).values
    assert rho.min() == 0.0 and rho.max() == pytest.approx(1.0)
    # C1: the centered derivative has no jump across the vacuum edge
    d = dx(preset_catalog("vacuum-band").density(g)).values[:, 0]
    assert np.max(np.abs(np.diff(d))) <= 2 * TWO_PI * TWO_PI * g.hx


def test_stratified_and_uniform():
    g = make_grid(1.0, 16, 16)
    s = preset_catalog("stratified").density(g).values
    assert s[:, 0] == pytest.approx(1.5) and s[:, -1] == pytest.approx(0.5)
    assert np.all(preset_catalog("uniform").velocity(g).values == 0.0)
    with pytest.raises(PresetError):
        preset_catalog("shear").density(g)


@pytest.mark.parametrize("L", [1.0, 2.0])
def test_mms_steady_forcing_matches_symbolic(L):
    g = make_grid(L, 32, 32)
    x, y = sympy.symbols("x y", real=True)
    k = 2 * sympy.pi / L
    ref = mms_forcing(sympy.sin(k * x) * sympy.sin(2 * sympy.pi * y), sympy.cos(k * x),
                      ViscosityLaw("constant", (1.0,), 1.0), sympy.Integer(1), g)
    f = preset_catalog("mms-steady").force(g)
    assert np.max(np.abs(f.values - ref.values)) <= 1e-10
    assert np.allclose(mms_pressure(g), np.cos(2 * math.pi / L * g.x))


def test_gradient_forcing_is_minus_dx_q():
    g = make_grid(1.0, 64, 8)
    f = preset_catalog("gradient-forcing").force(g).values
    assert np.allclose(f[:, 0], TWO_PI * np.sin(TWO_PI * g.x))


def test_time_profiles():
    assert time_profile("constant")(3.0) == 1.0
    ramp = time_profile("ramp", ramp=0.5)
    assert ramp(0.25) == 0.5 and ramp(2.0) == 1.0
    assert time_profile("sinusoid", period=2.0)(0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        time_profile("square")
    with pytest.raises(ValueError):
        time_profile("ramp", ramp=0.0)
    g = make_grid(1.0, 16, 16)
    F = preset_catalog("gradient-forcing").force(g)
    f = separable_forcing(F, ramp, 2.0)
    assert np.allclose(f(0.25), F.values)


def test_transport_velocities():
    g = make_grid(1.0, 16, 16)
    u, w = transport_velocity("uniform-x", g, 0.3)
    assert np.all(u == 0.3) and np.all(w == 0.0)
    u, w = transport_velocity("shear", g, 2.0)
    assert w is None and np.max(np.abs(u)) == pytest.approx(2.0, rel=1e-2)
    u, w = transport_velocity("none", g)
    assert not u.any() and not w.any()
    with pytest.raises(ValueError):
        transport_velocity("vortex", g)
