"""Regularized density transport and vertical-velocity recovery.

The density equation is advanced in advective form::

    rho_t + u rho_x + w rho_y - lam rho_xx = 0,    w = -int_0^y u_x ds

with forward Euler, first-order upwinding of both advection terms and
explicit centered x-diffusion. Under the step restriction enforced by
:class:`TransportParams` every update is a convex combination of old nodal
values, so the discrete minimum and maximum cannot spread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import DIRICHLET_ZERO, FREE, ScalarField, cumint_y_array, dx_array, integral_array
from .norms import grad_linf, hessian_l2, third_derivative_l2


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class TransportParams:
    lam: float = 0.0
    dt: float = 1e-3
    cfl_guard: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def courant(self, u: np.ndarray, w: np.ndarray, hx: float, hy: float) -> float:
        """Sum of the coefficients that multiply the centre node's neighbours."""
        adv = self.dt * (np.max(np.abs(u)) / hx + np.max(np.abs(w)) / hy)
        return float(adv + 2.0 * self.lam * self.dt / hx ** 2)


def vertical_velocity_array(u: np.ndarray, hx: float, hy: float) -> np.ndarray:
    return -cumint_y_array(dx_array(u, hx), hy)


def vertical_velocity(u: ScalarField) -> ScalarField:
    """``w = -int_0^y dx u``; ``w(., 0) = 0`` exactly.

    ``w(., 1)`` is not forced to zero: it equals minus the x-derivative of the
    column integral of ``u`` and so measures the divergence-constraint residual.
    """
    if u.bc_y != DIRICHLET_ZERO:
        raise ValueError("vertical velocity needs a horizontal velocity vanishing at the walls")
    return ScalarField(u.grid, vertical_velocity_array(u.values, u.grid.hx, u.grid.hy), FREE)


def _step_array(rho: np.ndarray, u: np.ndarray, w: np.ndarray, lam: float, dt: float,
                hx: float, hy: float) -> np.ndarray:
    back_x = (rho - np.roll(rho, 1, axis=0)) / hx
    fwd_x = (np.roll(rho, -1, axis=0) - rho) / hx
    # zero ghost differences at the walls; w vanishes there up to the constraint residual
    back_y = np.zeros_like(rho)
    fwd_y = np.zeros_like(rho)
    back_y[:, 1:] = np.diff(rho, axis=1) / hy
    fwd_y[:, :-1] = back_y[:, 1:]
    adv = (np.maximum(u, 0.0) * back_x + np.minimum(u, 0.0) * fwd_x
           + np.maximum(w, 0.0) * back_y + np.minimum(w, 0.0) * fwd_y)
    out = rho - dt * adv
    if lam:
        out = out + lam * dt * (np.roll(rho, -1, axis=0) - 2.0 * rho + np.roll(rho, 1, axis=0)) / hx ** 2
    return out


def transport_step(rho: ScalarField, u: ScalarField, w: ScalarField, params: TransportParams) -> ScalarField:
    """One monotone forward-Euler step of the regularized density equation."""
    g = rho.grid
    if np.min(rho.values) < 0:
        raise ValueError("density must be non-negative")
    uv = np.asarray(getattr(u, "values", u))
    wv = np.asarray(getattr(w, "values", w))
    if params.cfl_guard:
        c = params.courant(uv, wv, g.hx, g.hy)
        if c > 1.0 + 1e-12:
            raise CFLError(f"transport step restriction violated (courant sum {c:.4f} > 1)")
    return ScalarField(g, _step_array(rho.values, uv, wv, params.lam, params.dt, g.hx, g.hy))


def step_count(T: float, dt: float) -> tuple[int, float]:
    """Number of steps reaching ``T`` and the matching uniform step."""
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    return n, T / n


@dataclass
class TransportTrajectory:
    times: list[float] = field(default_factory=list)
    fields: list[ScalarField] = field(default_factory=list)
    mins: list[float] = field(default_factory=list)
    maxs: list[float] = field(default_factory=list)
    masses: list[float] = field(default_factory=list)
    grad_linf: list[float] = field(default_factory=list)

    def record(self, t: float, rho: ScalarField) -> None:
        self.times.append(float(t))
        self.fields.append(rho)
        self.mins.append(float(np.min(rho.values)))
        self.maxs.append(float(np.max(rho.values)))
        self.masses.append(integral_array(rho.values, rho.grid))
        self.grad_linf.append(grad_linf(rho.values, rho.grid))

    def rows(self):
        for k, t in enumerate(self.times):
            yield [t, self.mins[k], self.maxs[k], self.masses[k], self.grad_linf[k]]

    COLUMNS = ["t", "min_rho", "max_rho", "mass", "linf_grad_rho"]



def _velocity(provider, n: int, t: float, grid):
    if callable(provider):
        pair = provider(n, t)
    else:
        pair = provider[n]
    if isinstance(pair, ScalarField):
        return pair.values, vertical_velocity_array(pair.values, grid.hx, grid.hy)
    u, w = pair
    u = np.asarray(getattr(u, "values", u))
    w = vertical_velocity_array(u, grid.hx, grid.hy) if w is None else np.asarray(getattr(w, "values", w))
    return u, w


def transport_solve(rho0: ScalarField, velocity_provider, params: TransportParams, T: float) -> TransportTrajectory:
    """Advance ``rho0`` to time ``T``.

    ``velocity_provider`` is either a sequence indexed by step or a callable
    ``(n, t) -> (u, w)``; a bare ``u`` field (or ``w = None``) has its
    vertical velocity recovered. The step in ``params`` is shrunk so that an
    integer number of steps lands on ``T``.
    """
    n_steps, dt = step_count(T, params.dt)
    p = TransportParams(params.lam, dt, params.cfl_guard)
    traj = TransportTrajectory()
    rho = rho0
    traj.record(0.0, rho)
    for n in range(n_steps):
        t = n * dt
        u, w = _velocity(velocity_provider, n, t, rho0.grid)
        rho = transport_step(rho, u, w, p)
        traj.record((n + 1) * dt, rho)
    return traj


@dataclass
class GrowthReport:
    times: list[float]
    c_grad: list[float]
    c_hess: list[float]
    c_third: list[float] | None
    degenerate: bool

    @property
    def max_c_grad(self) -> float:
        vals = [c for c in self.c_grad if math.isfinite(c)]
        return max(vals) if vals else math.nan


def density_growth_check(traj: TransportTrajectory, velocity_h3: Sequence[float]) -> GrowthReport:
    """Empirical exponential-growth constants of the density gradient norms.

    ``velocity_h3[n]`` is the ``H^3`` norm of the velocity used for step
    ``n -> n+1``; the time integral is the matching left-rectangle sum.
    Entries are NaN where the integral is below ``1e-12``.
    """
    g = traj.fields[0].grid
    r0 = traj.fields[0].values
    g0 = grad_linf(r0, g)
    h0 = hessian_l2(r0, g)
    third = g.Ny >= 64
    t0 = third_derivative_l2(r0, g) if third else 0.0
    times, cg, ch, ct = [], [], [], []
    integral = 0.0
    for n in range(1, len(traj.times)):
        integral += (traj.times[n] - traj.times[n - 1]) * float(velocity_h3[n - 1])
        rho = traj.fields[n].values
        times.append(traj.times[n])
        if integral < 1e-12:
            cg.append(math.nan)
            ch.append(math.nan)
            ct.append(math.nan)
            continue
        cg.append(_log_ratio(grad_linf(rho, g), g0) / integral)
        ch.append(_log_ratio(hessian_l2(rho, g), h0) / integral)
        if third:
            ct.append(_log_ratio(third_derivative_l2(rho, g), t0) / integral)
    degenerate = all(not math.isfinite(c) for c in cg)
    return GrowthReport(times, cg, ch, ct if third else None, degenerate)


def _log_ratio(a: float, b: float) -> float:
    if a <= 0.0 or b <= 0.0:
        return math.nan
    return math.log(a / b)
