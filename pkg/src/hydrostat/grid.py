"""Uniform periodic-in-x channel grid, grid fields and finite-difference calculus.

Storage convention: x is periodic with ``Nx`` stored nodes ``x_i = i*L/Nx``
(``x = L`` is identified with ``x = 0`` and not stored); y runs over the
closed interval [0, 1] with ``Ny + 1`` nodes including both walls.
Arrays are indexed ``values[i, j]`` with ``i`` the x index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

DIRICHLET_ZERO = "dirichlet_zero"
FREE = "free"
BC_TAGS = (DIRICHLET_ZERO, FREE)


class GridError(ValueError):
    """Raised for invalid grids or fields."""


@dataclass(frozen=True)
class Grid:
    L: float
    Nx: int
    Ny: int

    @property
    def hx(self) -> float:
        return self.L / self.Nx

    @property
    def hy(self) -> float:
        return 1.0 / self.Ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny + 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.hx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny + 1) * self.hy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def refined(self, factor: int = 2) -> "Grid":
        return make_grid(self.L, self.Nx * factor, self.Ny * factor)


def make_grid(L: float, Nx: int, Ny: int) -> Grid:
    """Build a :class:`Grid` on ``[0, L] x [0, 1]``.

    ``Nx`` must be even and at least 8, ``Ny`` at least 8.
    """
    if not np.isfinite(L) or L <= 0:
        raise GridError(f"domain length must be positive, got {L!r}")
    if int(Nx) != Nx or Nx < 8 or Nx % 2:
        raise GridError(f"Nx must be an even integer >= 8, got {Nx!r}")
    if int(Ny) != Ny or Ny < 8:
        raise GridError(f"Ny must be an integer >= 8, got {Ny!r}")
    return Grid(float(L), int(Nx), int(Ny))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray
    bc_y: str = FREE

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("field contains non-finite values")
        if self.bc_y not in BC_TAGS:
            raise GridError(f"unknown bc tag {self.bc_y!r}")
        if self.bc_y == DIRICHLET_ZERO and (np.any(values[:, 0] != 0.0) or np.any(values[:, -1] != 0.0)):
            raise GridError("dirichlet_zero field must vanish exactly at y = 0 and y = 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, bc_y: str | None = None) -> "ScalarField":
        return ScalarField(self.grid, values, self.bc_y if bc_y is None else bc_y)

    def __add__(self, other):
        return _combine(self, other, np.add)

    def __sub__(self, other):
        return _combine(self, other, np.subtract)

    def __mul__(self, other):
        return _combine(self, other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values, self.bc_y)


def _combine(a: ScalarField, b, op) -> ScalarField:
    if isinstance(b, ScalarField):
        if b.grid != a.grid:
            raise GridError("fields live on different grids")
        vals = op(a.values, b.values)
        bc = DIRICHLET_ZERO if (a.bc_y == b.bc_y == DIRICHLET_ZERO) else FREE
        if op is np.multiply and DIRICHLET_ZERO in (a.bc_y, b.bc_y):
            bc = DIRICHLET_ZERO
    else:
        vals = op(a.values, b)
        bc = a.bc_y if op is np.multiply else FREE
    if bc == DIRICHLET_ZERO:
        vals = np.array(vals)
        vals[:, 0] = 0.0
        vals[:, -1] = 0.0
    return ScalarField(a.grid, vals, bc)


def zeros(grid: Grid, bc_y: str = FREE) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape), bc_y)


def constant(grid: Grid, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)), FREE)


def sample(grid: Grid, fn: Callable, bc_y: str = FREE, boundary_tol: float = 1e-12) -> ScalarField:
    """Evaluate ``fn(x, y)`` at every node.

    With ``bc_y="dirichlet_zero"`` the wall samples must be within
    ``boundary_tol`` of zero; they are then set to exactly zero.
    """
    if bc_y not in BC_TAGS:
        raise GridError(f"unknown bc tag {bc_y!r}")
    X, Y = grid.mesh()
    vals = np.broadcast_to(np.asarray(fn(X, Y), dtype=float), grid.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise GridError("sampled function is not finite on the grid")
    if bc_y == DIRICHLET_ZERO:
        wall = max(np.max(np.abs(vals[:, 0])), np.max(np.abs(vals[:, -1])))
        if wall > boundary_tol:
            raise GridError(f"function does not vanish at the walls (max |f| = {wall:.3e})")
        vals[:, 0] = 0.0
        vals[:, -1] = 0.0
    return ScalarField(grid, vals, bc_y)


# -- array-level stencils (used by the solvers on raw arrays) -----------------

def dx_array(a: np.ndarray, hx: float) -> np.ndarray:
    return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * hx)


def dy_array(a: np.ndarray, hy: float) -> np.ndarray:
    out = np.empty_like(a, dtype=float)
    out[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * hy)
    out[:, 0] = (-3.0 * a[:, 0] + 4.0 * a[:, 1] - a[:, 2]) / (2.0 * hy)
    out[:, -1] = (3.0 * a[:, -1] - 4.0 * a[:, -2] + a[:, -3]) / (2.0 * hy)
    return out


def cumint_y_array(a: np.ndarray, hy: float) -> np.ndarray:
    out = np.zeros_like(a, dtype=float)
    out[:, 1:] = np.cumsum(0.5 * hy * (a[:, 1:] + a[:, :-1]), axis=1)
    return out


def trapz_y_array(a: np.ndarray, hy: float) -> np.ndarray:
    """Full-interval trapezoid in y, one value per x node."""
    return hy * (a[:, 1:-1].sum(axis=1) + 0.5 * (a[:, 0] + a[:, -1]))


def integral_array(a: np.ndarray, grid: Grid) -> float:
    return float(grid.hx * trapz_y_array(a, grid.hy).sum())


# -- field-level operations --------------------------------------------------

def dx(f: ScalarField) -> ScalarField:
    """Centered periodic x-derivative."""
    return ScalarField(f.grid, dx_array(f.values, f.grid.hx), FREE)


def dy(f: ScalarField) -> ScalarField:
    """Centered y-derivative with second-order one-sided stencils at the walls."""
    return ScalarField(f.grid, dy_array(f.values, f.grid.hy), FREE)


def cumint_y(f: ScalarField) -> ScalarField:
    """Running trapezoid integral ``int_0^y f(x, s) ds``."""
    return ScalarField(f.grid, cumint_y_array(f.values, f.grid.hy), FREE)


def integral_domain(f: ScalarField) -> float:
    """Rectangle rule in x composed with the trapezoid rule in y."""
    return integral_array(f.values, f.grid)


@dataclass(frozen=True, eq=False)
class PressureProfile:
    """x-only pressure with discrete mean zero."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.Nx,):
            raise GridError(f"pressure shape {values.shape} does not match Nx = {self.grid.Nx}")
        if not np.all(np.isfinite(values)):
            raise GridError("pressure contains non-finite values")
        mean = self.grid.hx / self.grid.L * values.sum()
        if abs(mean) > 1e-12 * max(1.0, np.max(np.abs(values))):
            raise GridError(f"pressure mean is {mean:.3e}, expected zero")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def project(cls, grid: Grid, values) -> "PressureProfile":
        """Subtract the discrete mean from ``values``."""
        values = np.asarray(values, dtype=float)
        return cls(grid, values - values.mean())

    @classmethod
    def zero(cls, grid: Grid) -> "PressureProfile":
        return cls(grid, np.zeros(grid.Nx))

    def derivative(self) -> np.ndarray:
        v = self.values
        return (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * self.grid.hx)

    def as_field(self) -> ScalarField:
        """Broadcast to a y-constant :class:`ScalarField`."""
        return ScalarField(self.grid, np.repeat(self.values[:, None], self.grid.Ny + 1, axis=1))
