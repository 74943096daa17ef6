"""Named initial data, transport velocities and forcing shapes.

Every preset is written in closed form, independently of the solver code, so
that it can double as a cross-check. Functions take mesh arrays ``(X, Y)`` and
the channel length ``L``; x-periodic shapes use the wavenumber ``2 pi / L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import DIRICHLET_ZERO, FREE, Grid, ScalarField, sample

FieldFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class PresetError(KeyError):
    pass


@dataclass(frozen=True)
class Preset:
    id: str
    description: str
    rho0: FieldFn | None = None
    u0: FieldFn | None = None
    forcing: FieldFn | None = None

    def density(self, grid: Grid) -> ScalarField:
        if self.rho0 is None:
            raise PresetError(f"preset {self.id!r} does not define a density")
        return sample(grid, lambda X, Y: self.rho0(X, Y, grid.L) + 0.0 * X, FREE)

    def velocity(self, grid: Grid) -> ScalarField:
        if self.u0 is None:
            raise PresetError(f"preset {self.id!r} does not define a velocity")
        return sample(grid, lambda X, Y: self.u0(X, Y, grid.L) + 0.0 * X, DIRICHLET_ZERO)

    def force(self, grid: Grid) -> ScalarField:
        if self.forcing is None:
            raise PresetError(f"preset {self.id!r} does not define a forcing")
        return sample(grid, lambda X, Y: self.forcing(X, Y, grid.L) + 0.0 * X, FREE)


def _k(L: float) -> float:
    return 2.0 * math.pi / L


def _shear(X, Y, L):
    return np.sin(_k(L) * X) * np.sin(2.0 * np.pi * Y)


def _mms_forcing(X, Y, L):
    # -lap(u*) + dx P* for u* = sin(kx) sin(2 pi y), P* = cos(kx), mu = 1
    k = _k(L)
    return (k * k + 4.0 * np.pi ** 2) * np.sin(k * X) * np.sin(2.0 * np.pi * Y) - k * np.sin(k * X)


_CATALOG = {
    "uniform": Preset("uniform", "rho0 = 1, u0 = 0, f = 0",
                      rho0=lambda X, Y, L: np.ones_like(X), u0=lambda X, Y, L: np.zeros_like(X),
                      forcing=lambda X, Y, L: np.zeros_like(X)),
    "stratified": Preset("stratified", "rho0 = 1 + cos(pi y)/2",
                         rho0=lambda X, Y, L: 1.0 + 0.5 * np.cos(np.pi * Y)),
    "shear": Preset("shear", "u0 = sin(2 pi x/L) sin(2 pi y)", u0=_shear),
    "vacuum-band": Preset("vacuum-band", "rho0 = max(0, sin(2 pi x/L))^2, vanishing on half the channel",
                          rho0=lambda X, Y, L: np.maximum(0.0, np.sin(_k(L) * X)) ** 2),
    "mms-steady": Preset("mms-steady", "steady manufactured pair with mu = 1 and its Stokes forcing",
                         rho0=lambda X, Y, L: np.ones_like(X), u0=_shear, forcing=_mms_forcing),
    "gradient-forcing": Preset("gradient-forcing", "f = -dx q with q = cos(2 pi x/L)",
                               forcing=lambda X, Y, L: _k(L) * np.sin(_k(L) * X)),
}


def preset_catalog(id: str | None = None):
    """Look up one preset, or return the sorted list of ids when ``id`` is None."""
    if id is None:
        return sorted(_CATALOG)
    try:
        return _CATALOG[id]
    except KeyError:
        raise PresetError(f"unknown preset {id!r}; known: {', '.join(sorted(_CATALOG))}") from None


def mms_pressure(grid: Grid) -> np.ndarray:
    """Pressure of the ``mms-steady`` pair on the grid nodes."""
    return np.cos(_k(grid.L) * grid.x)


# -- time dependence of separable forcing ------------------------------------------

TIME_PROFILES = ("constant", "ramp", "sinusoid")


def time_profile(kind: str, *, ramp: float = 1.0, period: float = 1.0) -> Callable[[float], float]:
    """``g(t)`` for ``f(t, x, y) = g(t) F(x, y)``."""
    if kind == "constant":
        return lambda t: 1.0
    if kind == "ramp":
        if not ramp > 0:
            raise ValueError("ramp time must be positive")
        return lambda t: min(t / ramp, 1.0)
    if kind == "sinusoid":
        if not period > 0:
            raise ValueError("period must be positive")
        return lambda t: math.sin(2.0 * math.pi * t / period)
    raise ValueError(f"unknown time profile {kind!r}; expected one of {TIME_PROFILES}")


def separable_forcing(F: ScalarField, g: Callable[[float], float], amplitude: float = 1.0):
    """Callable ``t -> amplitude * g(t) * F`` as a plain array."""
    base = np.array(F.values)

    def f(t: float) -> np.ndarray:
        return (amplitude * g(t)) * base

    return f


# -- transport velocities ----------------------------------------------------------

TRANSPORT_VELOCITIES = ("none", "uniform-x", "shear")


def transport_velocity(kind: str, grid: Grid, speed: float = 1.0):
    """Frozen velocity pair ``(u, w)`` for standalone transport runs.

    ``uniform-x`` is the rigid translation ``u = speed, w = 0`` (not zero at
    the walls, which transport does not require); ``shear`` uses the
    ``shear`` preset scaled by ``speed`` with ``w`` recovered from it.
    """
    if kind == "none":
        return np.zeros(grid.shape), np.zeros(grid.shape)
    if kind == "uniform-x":
        return np.full(grid.shape, float(speed)), np.zeros(grid.shape)
    if kind == "shear":
        return speed * preset_catalog("shear").velocity(grid).values, None
    raise ValueError(f"unknown transport velocity {kind!r}; expected one of {TRANSPORT_VELOCITIES}")
