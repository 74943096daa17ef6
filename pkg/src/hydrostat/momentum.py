"""Linearized momentum time stepping, compatibility data and the energy ledger.

One step of the linearized momentum equation with known transport velocity
``v`` treats diffusion and pressure implicitly and the lagged advection
explicitly::

    (rho/dt) u_new - div(mu(rho) grad u_new) + dx P_new
        = rho f + (rho/dt) u_old - rho (v dx u_old + w_v dy u_old)

subject to ``dx int_0^1 u_new dy = 0``; ``w_v`` is the vertical velocity of
``v``. Each step is a shifted hydrostatic Stokes solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import (
    DIRICHLET_ZERO,
    PressureProfile,
    ScalarField,
    dx_array,
    dy_array,
    integral_array,
    trapz_y_array,
)
from .hstokes import (
    HStokesOperator,
    SolverError,
    ViscosityLaw,
    assemble,
    constraint_residual,
    dirichlet_energy,
    solve_hstokes,
)
from .norms import _l2, grad_l2
from .transport import CFLError, step_count, vertical_velocity_array

EPS_RHO = 1e-10


class CompatibilityError(ValueError):
    pass


def _bracket(rho0: np.ndarray, u0: np.ndarray, f0: np.ndarray, mu0: ScalarField, grid) -> np.ndarray:
    """Compatibility bracket without the pressure term, on interior nodes."""
    op = assemble(mu0, grid)
    div_flux = -op.apply_momentum(u0, np.zeros(grid.Nx))
    ux = dx_array(u0, grid.hx)
    uy = dy_array(u0, grid.hy)
    w = vertical_velocity_array(u0, grid.hx, grid.hy)
    G = -rho0 * u0 * ux - rho0 * w * uy + div_flux + rho0 * f0
    G[:, 0] = 0.0
    G[:, -1] = 0.0
    return G


def _solve_centered_gradient(q: np.ndarray, h: float) -> np.ndarray:
    """Solve ``(P[i+1] - P[i-1]) / (2h) = q[i]`` on an even periodic grid.

    ``q`` must be orthogonal to constants and to the checkerboard; the
    solution has zero mean on each sublattice.
    """
    n = q.size
    P = np.zeros(n)
    for start in (0, 1):
        # q at nodes of one parity links the nodes of the other parity
        src = np.arange(start, n, 2)
        vals = np.concatenate([[0.0], np.cumsum(2.0 * h * q[src[1:]])])
        targets = (src + 1) % n
        P[targets] = vals - vals.mean()
    return P


def compute_initial_pressure(rho0: ScalarField, u0: ScalarField, f0: ScalarField, law: ViscosityLaw,
                             eps_rho: float = EPS_RHO) -> PressureProfile:
    """Initial pressure making the compatibility acceleration admissible.

    With ``G`` the compatibility bracket without the pressure gradient,
    ``V1 = (G - dx P0) / max(rho0, eps)`` must satisfy the discrete
    constraint. Integrating over y gives ``g - a * dx P0 = c + b(-1)**i``
    with ``g = int G/rho``, ``a = int 1/rho``; ``c`` and ``b`` are fixed so
    that ``dx P0`` lies in the range of the centered stencil.
    """
    g = rho0.grid
    if u0.bc_y != DIRICHLET_ZERO:
        raise CompatibilityError("u0 must vanish at the walls")
    cres = constraint_residual(u0.values, g)
    if cres > 1e-8:
        raise CompatibilityError(f"u0 violates dx int u0 dy = 0 (residual {cres:.2e})")
    r = np.maximum(rho0.values, eps_rho)
    G = _bracket(rho0.values, u0.values, f0.values, law.field(rho0), g)
    ginv = trapz_y_array(G / r, g.hy)
    a = trapz_y_array(np.where(np.arange(g.Ny + 1)[None, :] % g.Ny == 0, 0.0, 1.0 / r), g.hy)
    chk = (-1.0) ** np.arange(g.Nx)
    M = np.array([[np.sum(1 / a), np.sum(chk / a)], [np.sum(chk / a), np.sum(1 / a)]])
    rhs = np.array([np.sum(ginv / a), np.sum(chk * ginv / a)])
    c, b = np.linalg.solve(M, rhs)
    q = (ginv - c - b * chk) / a
    return PressureProfile.project(g, _solve_centered_gradient(q, g.hx))


@dataclass
class CompatibilityData:
    P0: PressureProfile
    V1: ScalarField
    residual: float
    constraint: float
    vacuum: np.ndarray = field(repr=False, default=None)

    @property
    def v1_l2(self) -> float:
        return _l2(self.V1.values, self.V1.grid)


def compatibility_v1(rho0: ScalarField, u0: ScalarField, P0: PressureProfile, f0: ScalarField,
                     law: ViscosityLaw, eps_rho: float = EPS_RHO) -> CompatibilityData:
    """Initial acceleration ``V1`` from the compatibility condition.

    Where ``rho0 < eps_rho`` the bracket is divided by ``eps_rho`` and the node
    is flagged in ``vacuum``; ``residual`` is the L2 norm of
    ``rho0*V1 - bracket`` over the whole domain.
    """
    g = rho0.grid
    G = _bracket(rho0.values, u0.values, f0.values, law.field(rho0), g)
    G[:, 1:-1] -= P0.derivative()[:, None]
    vacuum = rho0.values < eps_rho
    V1 = G / np.maximum(rho0.values, eps_rho)
    residual = _l2(rho0.values * V1 - G, g)
    return CompatibilityData(P0, ScalarField(g, V1, DIRICHLET_ZERO), residual,
                             constraint_residual(V1, g), vacuum)


# -- time stepping -------------------------------------------------------------------

@dataclass
class MomentumStepReport:
    t: float
    energy_lhs: float
    energy_rhs: float
    sqrt_rho_ut_l2: float
    constraint_residual: float

    @property
    def energy_gap(self) -> float:
        return abs(self.energy_lhs - self.energy_rhs)


def advection_array(u: np.ndarray, v: np.ndarray, grid) -> np.ndarray:
    """``v dx u + w_v dy u`` with ``w_v = -int_0^y dx v``."""
    w = vertical_velocity_array(v, grid.hx, grid.hy)
    return v * dx_array(u, grid.hx) + w * dy_array(u, grid.hy)


def momentum_cfl(v: np.ndarray, dt: float, grid) -> float:
    w = vertical_velocity_array(v, grid.hx, grid.hy)
    return dt * (float(np.max(np.abs(v))) / grid.hx + float(np.max(np.abs(w))) / grid.hy)


def momentum_step(rho: ScalarField, v: ScalarField, u_old: ScalarField, f: ScalarField | np.ndarray,
                  law: ViscosityLaw, dt: float, *, t: float = 0.0, rho_prev: ScalarField | None = None,
                  cfl_guard: bool = True, face: str = "arithmetic", method: str = "direct"):
    """Advance the velocity by one step.

    ``rho`` is the density at the new level and ``rho_prev`` (default
    ``rho``) the one at the old level. ``rho_prev`` enters the viscosity rate
    term of the energy ledger and the reported ``|sqrt(rho) u_t|``.
    Returns ``(u_new, P_new, report)``.

    The ledger compares
    ``int rho u_t^2 + (int mu_new|grad u_new|^2 - int mu_old|grad u_old|^2)/(2 dt)``
    with ``int rho f u_t - int rho adv u_t + (int (mu_new - mu_old)|grad u_old|^2)/(2 dt)``;
    the two differ by the backward-Euler dissipation ``dt/2 int mu|grad u_t|^2``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    g = rho.grid
    if v.bc_y != DIRICHLET_ZERO:
        raise ValueError("transport velocity must vanish at the walls")
    if cfl_guard:
        c = momentum_cfl(v.values, dt, g)
        if c > 1.0 + 1e-12:
            raise CFLError(f"momentum advection step restriction violated ({c:.4f} > 1)")
    r = rho.values
    r_old = r if rho_prev is None else rho_prev.values
    mu_new = law.field(rho)
    fv = np.asarray(getattr(f, "values", f), dtype=float)
    uo = u_old.values
    adv = advection_array(uo, v.values, g)
    rhs = r * fv + (r / dt) * uo - r * adv
    op = assemble(mu_new, g, r / dt, floor=law.floor, face=face, method=method)
    sol = solve_hstokes(op, rhs)
    un = sol.u.values
    ut = (un - uo) / dt

    mu_prev = mu_new.values if rho_prev is None else law.field(rho_prev).values
    a_new = dirichlet_energy(mu_new.values, un, g, face)
    a_old_prev = dirichlet_energy(mu_prev, uo, g, face)
    a_old_new = dirichlet_energy(mu_new.values, uo, g, face)
    kinetic = integral_array(r * ut * ut, g)
    lhs = kinetic + (a_new - a_old_prev) / (2.0 * dt)
    rhs_e = (integral_array(r * fv * ut, g) - integral_array(r * adv * ut, g)
             + (a_old_new - a_old_prev) / (2.0 * dt))
    reported = math.sqrt(max(integral_array(np.maximum(r_old, 0.0) * ut * ut, g), 0.0))
    report = MomentumStepReport(t + dt, lhs, rhs_e, reported, sol.constraint_residual)
    return sol.u, sol.P, report


def _forcing_at(f, t: float, grid) -> np.ndarray:
    if callable(f):
        f = f(t)
    return np.broadcast_to(np.asarray(getattr(f, "values", f), dtype=float), grid.shape)


@dataclass
class MomentumTrajectory:
    times: list[float] = field(default_factory=list)
    u: list[ScalarField] = field(default_factory=list)
    P: list[PressureProfile] = field(default_factory=list)
    reports: list[MomentumStepReport] = field(default_factory=list)
    int_rho_ut2: list[float] = field(default_factory=list)
    grad_u_l2: list[float] = field(default_factory=list)

    @property
    def lemma_series(self) -> list[float]:
        """``int_0^t |sqrt(rho) u_t|^2 ds + |grad u(t)|^2`` at every level."""
        return [a + b * b for a, b in zip(self.int_rho_ut2, self.grad_u_l2)]

    @property
    def sup_grad_u(self) -> float:
        return max(self.grad_u_l2)


def momentum_solve(rho_traj: Sequence[ScalarField], v_traj: Sequence[ScalarField], u0: ScalarField,
                   f, law: ViscosityLaw, dt: float, T: float, *, P0: PressureProfile | None = None,
                   cfl_guard: bool = True, face: str = "arithmetic",
                   method: str = "direct") -> MomentumTrajectory:
    """Sequential momentum steps along a prescribed density/velocity history.

    ``rho_traj[n]`` is the density at level ``n`` (``n = 0..N``) and
    ``v_traj[n]`` the transport velocity used for the step ``n -> n+1``.
    ``f`` is a field or a callable of time evaluated at the new level.
    """
    n_steps, dt = step_count(T, dt)
    if len(rho_traj) < n_steps + 1 or len(v_traj) < n_steps:
        raise ValueError("trajectories are shorter than the number of steps")
    g = u0.grid
    traj = MomentumTrajectory()
    u = u0
    traj.times.append(0.0)
    traj.u.append(u0)
    traj.P.append(PressureProfile.zero(g) if P0 is None else P0)
    traj.int_rho_ut2.append(0.0)
    traj.grad_u_l2.append(grad_l2(u0.values, g))
    acc = 0.0
    for n in range(n_steps):
        t = n * dt
        u, P, rep = momentum_step(rho_traj[n + 1], v_traj[n], u, _forcing_at(f, t + dt, g), law, dt,
                                  t=t, rho_prev=rho_traj[n], cfl_guard=cfl_guard, face=face,
                                  method=method)
        acc += dt * rep.sqrt_rho_ut_l2 ** 2
        traj.times.append(t + dt)
        traj.u.append(u)
        traj.P.append(P)
        traj.reports.append(rep)
        traj.int_rho_ut2.append(acc)
        traj.grad_u_l2.append(grad_l2(u.values, g))
    return traj


__all__ = [
    "CompatibilityData",
    "CompatibilityError",
    "EPS_RHO",
    "HStokesOperator",
    "MomentumStepReport",
    "MomentumTrajectory",
    "SolverError",
    "compatibility_v1",
    "compute_initial_pressure",
    "momentum_solve",
    "momentum_step",
]
