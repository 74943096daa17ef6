"""Discrete Lebesgue, mixed and Sobolev norms plus the diagnostic functionals.

All derivatives are built from the stencils in :mod:`hydrostat.grid`, so the
norms are consistent with what the solvers compute. Sobolev norms are full
norms: the square root of the sum of squared L2 norms of every derivative
``dx^a dy^b f`` with ``a + b <= k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .grid import (
    Grid,
    PressureProfile,
    ScalarField,
    dx_array,
    dy_array,
    integral_array,
    trapz_y_array,
)


class NormError(ValueError):
    pass


def lp_norm(f: ScalarField, p: float = 2.0) -> float:
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise NormError(f"p must be >= 1, got {p}")
    return _lp_array(f.values, f.grid, p)


def _lp_array(a: np.ndarray, grid: Grid, p: float = 2.0) -> float:
    if p == math.inf:
        return float(np.max(np.abs(a)))
    return integral_array(np.abs(a) ** p, grid) ** (1.0 / p)


def _l2(a: np.ndarray, grid: Grid) -> float:
    return math.sqrt(integral_array(a * a, grid))


_ANISO_PAIRS = {(2, math.inf), (math.inf, 2), (math.inf, math.inf), (2, 2)}


def aniso_norm(f: ScalarField, p_y: float, q_x: float) -> float:
    """Mixed norm: inner ``L^q`` in x on each y row, then outer ``L^p`` in y."""
    if (p_y, q_x) not in _ANISO_PAIRS:
        raise NormError(f"unsupported mixed norm (p_y, q_x) = ({p_y}, {q_x})")
    g = f.grid
    a = np.abs(f.values)
    if q_x == math.inf:
        inner = a.max(axis=0)
    else:
        inner = np.sqrt(g.hx * (a * a).sum(axis=0))
    if p_y == math.inf:
        return float(inner.max())
    row = inner[None, :] ** 2
    return math.sqrt(float(trapz_y_array(row, g.hy)[0]))


def derivative_array(a: np.ndarray, grid: Grid, nx: int, ny: int) -> np.ndarray:
    out = a
    for _ in range(ny):
        out = dy_array(out, grid.hy)
    for _ in range(nx):
        out = dx_array(out, grid.hx)
    return out


def sobolev_norm(f: ScalarField, k: int) -> float:
    if k < 0 or k > 3:
        raise NormError(f"Sobolev order must be in 0..3, got {k}")
    return _sobolev_array(f.values, f.grid, k)


def _sobolev_array(a: np.ndarray, grid: Grid, k: int) -> float:
    total = 0.0
    # fixed loop order keeps the sum reproducible
    for order in range(k + 1):
        for nx in range(order, -1, -1):
            d = derivative_array(a, grid, nx, order - nx)
            total += integral_array(d * d, grid)
    return math.sqrt(total)


def pressure_sobolev_norm(P: PressureProfile, k: int) -> float:
    """Full ``H^k`` norm of an x-only profile over the unit-height domain."""
    g = P.grid
    total = 0.0
    d = P.values
    for _ in range(k + 1):
        total += g.hx * float(np.sum(d * d))
        d = (np.roll(d, -1) - np.roll(d, 1)) / (2.0 * g.hx)
    return math.sqrt(total)


def grad_linf(a: np.ndarray, grid: Grid) -> float:
    gx = dx_array(a, grid.hx)
    gy = dy_array(a, grid.hy)
    return float(np.max(np.sqrt(gx * gx + gy * gy)))


def grad_l2(a: np.ndarray, grid: Grid) -> float:
    gx = dx_array(a, grid.hx)
    gy = dy_array(a, grid.hy)
    return math.sqrt(integral_array(gx * gx + gy * gy, grid))


def hessian_l2(a: np.ndarray, grid: Grid) -> float:
    """L2 norm of the Frobenius norm of the discrete Hessian."""
    gx = dx_array(a, grid.hx)
    gy = dy_array(a, grid.hy)
    axx = dx_array(gx, grid.hx)
    ayy = dy_array(gy, grid.hy)
    axy = dx_array(gy, grid.hx)
    return math.sqrt(integral_array(axx * axx + 2.0 * axy * axy + ayy * ayy, grid))


def hessian_linf(a: np.ndarray, grid: Grid) -> float:
    gx = dx_array(a, grid.hx)
    gy = dy_array(a, grid.hy)
    axx = dx_array(gx, grid.hx)
    ayy = dy_array(gy, grid.hy)
    axy = dx_array(gy, grid.hx)
    return float(np.max(np.sqrt(axx * axx + 2.0 * axy * axy + ayy * ayy)))


def third_derivative_l2(a: np.ndarray, grid: Grid) -> float:
    """L2 norm of the full third-derivative tensor (multiplicities included)."""
    total = 0.0
    for nx, mult in ((3, 1), (2, 3), (1, 3), (0, 1)):
        d = derivative_array(a, grid, nx, 3 - nx)
        total += mult * integral_array(d * d, grid)
    return math.sqrt(total)


def w1inf(a: np.ndarray, grid: Grid) -> float:
    return float(np.max(np.abs(a))) + grad_linf(a, grid)


# -- diagnostic functionals ---------------------------------------------------

@dataclass
class NormSnapshot:
    """Norm ingredients of the functionals at one time level."""

    t: float
    l2_u: float = 0.0
    h1_u: float = 0.0
    h2_u: float = 0.0
    h3_u: float = 0.0
    linf_grad_rho: float = 0.0
    l2_hess_rho: float = 0.0
    w1inf_rho: float = 0.0
    w22_rho: float = 0.0
    l2_sqrt_rho_ut: float = 0.0
    h1_ut: float = 0.0
    h1_P: float = 0.0
    h2_P: float = 0.0
    l2_grad_u: float = 0.0
    energy_residual: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "t":
                continue
            if not (math.isfinite(v) and v >= 0.0):
                raise NormError(f"snapshot entry {f.name} = {v!r} is not finite and non-negative")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[float]:
        return [getattr(self, name) for name in self.columns()]

    @property
    def phi(self) -> float:
        return 1.0 + self.linf_grad_rho + self.l2_hess_rho + self.l2_grad_u

    @property
    def integrand(self) -> float:
        """Time-integrated part of J at this level."""
        return self.h1_ut ** 2 + self.h3_u ** 2 + self.h2_P ** 2


def snapshot(t, rho: ScalarField, u: ScalarField, P: PressureProfile | None = None,
             ut: np.ndarray | None = None, energy_residual: float = 0.0) -> NormSnapshot:
    """Evaluate every norm ingredient of the blow-up functionals."""
    g = rho.grid
    r, v = rho.values, u.values
    ut = np.zeros(g.shape) if ut is None else ut
    return NormSnapshot(
        t=float(t),
        l2_u=_sobolev_array(v, g, 0),
        h1_u=_sobolev_array(v, g, 1),
        h2_u=_sobolev_array(v, g, 2),
        h3_u=_sobolev_array(v, g, 3),
        linf_grad_rho=grad_linf(r, g),
        l2_hess_rho=hessian_l2(r, g),
        w1inf_rho=w1inf(r, g),
        w22_rho=_sobolev_array(r, g, 2),
        l2_sqrt_rho_ut=_l2(np.sqrt(np.maximum(r, 0.0)) * ut, g),
        h1_ut=_sobolev_array(ut, g, 1),
        h1_P=0.0 if P is None else pressure_sobolev_norm(P, 1),
        h2_P=0.0 if P is None else pressure_sobolev_norm(P, 2),
        l2_grad_u=grad_l2(v, g),
        energy_residual=abs(energy_residual),
    )


def phi_functional(rho: ScalarField, u: ScalarField) -> float:
    """``1 + |grad rho|_inf + |Hess rho|_2 + |grad u|_2``."""
    g = rho.grid
    return 1.0 + grad_linf(rho.values, g) + hessian_l2(rho.values, g) + grad_l2(u.values, g)


def j_functional(snap: NormSnapshot, accumulated: float) -> float:
    if accumulated < 0:
        raise NormError("accumulated time integral must be non-negative")
    return (1.0 + snap.h2_u + snap.h1_P + snap.l2_sqrt_rho_ut + snap.w1inf_rho
            + snap.w22_rho + accumulated)


@dataclass
class PhiSeries:
    times: list[float] = field(default_factory=list)
    phi: list[float] = field(default_factory=list)
    j: list[float] = field(default_factory=list)

    def append(self, t: float, phi: float, j: float) -> None:
        if self.times and t <= self.times[-1]:
            raise NormError("PhiSeries times must be increasing")
        if phi < 1.0:
            raise NormError(f"Phi must be >= 1, got {phi}")
        self.times.append(float(t))
        self.phi.append(float(phi))
        self.j.append(float(j))

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class Breach:
    index: int
    t: float
    phi: float
    threshold: float


def blowup_monitor(series: PhiSeries, threshold: float) -> Breach | None:
    """First index where ``Phi >= threshold``, or ``None``."""
    if not threshold > 1.0:
        raise NormError(f"blow-up threshold must exceed 1, got {threshold}")
    for k, value in enumerate(series.phi):
        if value >= threshold or not math.isfinite(value):
            return Breach(k, series.times[k], value, threshold)
    return None


# -- Gagliardo-Nirenberg spot checks -----------------------------------------

@dataclass(frozen=True)
class GNInstance:
    name: str
    lhs: float
    rhs: float
    interp: float
    degenerate: bool

    @property
    def ratio(self) -> float:
        return math.nan if self.degenerate else self.lhs / self.rhs

    @property
    def interp_ratio(self) -> float:
        """LHS over the pure interpolation term alone (scale invariant)."""
        if self.degenerate or self.interp == 0.0:
            return math.nan
        return self.lhs / self.interp


def gn_check(f: ScalarField) -> dict[str, GNInstance]:
    """Evaluate both sides of two interpolation inequalities with unit constants.

    ``L6``:    |f|_6 <= |grad f|_2^(2/3) |f|_2^(1/3) + |f|_2
    ``L2yLinfx``: |f|_{L2_y Linf_x} <= |dx f|_2^(1/2) |f|_2^(1/2) + |f|_2
    """
    g = f.grid
    a = f.values
    l2 = _l2(a, g)
    l6 = _lp_array(a, g, 6.0)
    grad = grad_l2(a, g)
    fx = _l2(dx_array(a, g.hx), g)
    mixed = aniso_norm(f, 2, math.inf)
    out = {}
    interp = grad ** (2.0 / 3.0) * l2 ** (1.0 / 3.0)
    out["L6"] = GNInstance("L6", l6, interp + l2, interp, l2 == 0.0)
    interp = math.sqrt(fx * l2)
    out["L2yLinfx"] = GNInstance("L2yLinfx", mixed, interp + l2, interp, l2 == 0.0)
    return out
