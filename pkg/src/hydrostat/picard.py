"""Linearization iteration, contraction diagnostics, continuation and stability runs.

Iterate ``k`` transports the initial density with the previous velocity
iterate and then solves the linearized momentum equation with the new density
and the previous velocity as transport field::

    rho^k = transport(rho0; u^{k-1}),   u^k = momentum(rho^k; v = u^{k-1}),   u^0 = 0.

Both steps are explicit in the transport field, so level ``n`` of iterate
``k`` only depends on levels ``< n`` of iterate ``k - 1``. The iteration is
therefore exact after ``N + 1`` sweeps on an ``N``-step grid, and its fixed
point is the lagged coupled march implemented by :func:`march`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .grid import DIRICHLET_ZERO, Grid, PressureProfile, ScalarField, zeros
from .hstokes import ViscosityLaw
from .momentum import (
    EPS_RHO,
    CompatibilityData,
    compatibility_v1,
    compute_initial_pressure,
    momentum_step,
    momentum_solve,
)
from .norms import (
    NormSnapshot,
    PhiSeries,
    _l2,
    _sobolev_array,
    aniso_norm,
    blowup_monitor,
    grad_l2,
    grad_linf,
    hessian_l2,
    hessian_linf,
    j_functional,
    phi_functional,
    snapshot,
    third_derivative_l2,
)
from .transport import TransportParams, step_count, transport_solve, transport_step, vertical_velocity_array
from .grid import dx_array, dy_array, integral_array


@dataclass(frozen=True)
class PicardConfig:
    T: float
    dt: float
    tol: float = 1e-8
    max_iters: int = 30
    lam: float = 1e-3
    delta: float = 0.0
    law: ViscosityLaw = field(default_factory=ViscosityLaw)
    smoothing_sweeps: int = 3
    face: str = "arithmetic"
    cfl_guard: bool = True
    eps_rho: float = EPS_RHO
    method: str = "direct"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 2:
            raise ValueError("max_iters must be at least 2")
        if self.delta < 0 or self.lam < 0:
            raise ValueError("delta and lambda must be non-negative")
        if not (self.T > 0 and self.dt > 0):
            raise ValueError("T and dt must be positive")
        if not self.eps_rho > 0:
            raise ValueError("eps_rho must be positive")

    @property
    def steps(self) -> tuple[int, float]:
        return step_count(self.T, self.dt)


def _forcing(f, t: float, grid: Grid) -> np.ndarray:
    if callable(f):
        f = f(t)
    return np.broadcast_to(np.asarray(getattr(f, "values", f), dtype=float), grid.shape)


@dataclass
class Trajectory:
    """Coupled solution history on the uniform time levels."""

    times: list[float]
    rho: list[ScalarField]
    u: list[ScalarField]
    P: list[PressureProfile]

    def ut(self, n: int) -> np.ndarray:
        """Backward difference at level ``n`` (forward at ``n = 0``)."""
        if len(self.times) < 2:
            return np.zeros(self.u[0].grid.shape)
        if n == 0:
            return (self.u[1].values - self.u[0].values) / (self.times[1] - self.times[0])
        return (self.u[n].values - self.u[n - 1].values) / (self.times[n] - self.times[n - 1])


# -- per-iterate diagnostics ----------------------------------------------------------

@dataclass
class IterateDiagnostics:
    k: int
    eta_l2: float
    sigma_l2: float
    eta_weighted: float
    eta_grad_l2_int: float
    bk_integral: float
    ratio: float
    phi_k: float
    lambda_rho_xx: float
    eta_series: list[float] = field(default_factory=list, repr=False)
    eta_weighted_series: list[float] = field(default_factory=list, repr=False)
    sigma_series: list[float] = field(default_factory=list, repr=False)
    phi_k_series: list[float] = field(default_factory=list, repr=False)
    times: list[float] = field(default_factory=list, repr=False)

    COLUMNS = ["k", "eta_l2", "sigma_l2", "eta_weighted", "eta_grad_l2_int", "bk_integral", "ratio",
               "phi_k", "lambda_rho_xx"]

    def row(self) -> list[float]:
        return [getattr(self, c) for c in self.COLUMNS]


def _b_k(traj: Trajectory, f, n: int) -> float:
    g = traj.u[0].grid
    u = traj.u[n].values
    w = vertical_velocity_array(u, g.hx, g.hy)
    resid = _forcing(f, traj.times[n], g) - traj.ut(n) - u * dx_array(u, g.hx) - w * dy_array(u, g.hy)
    grad = np.sqrt(dx_array(u, g.hx) ** 2 + dy_array(u, g.hy) ** 2)
    return aniso_norm(ScalarField(g, resid), math.inf, 2) ** 2 + float(np.max(grad)) ** 2


def _phi_k_ingredients(traj: Trajectory, n: int) -> float:
    """``1 + |grad rho|_{W1inf} + |grad u_t|_2 + |Hess rho|_{W12} + |grad u|_2``."""
    g = traj.u[0].grid
    r = traj.rho[n].values
    hess = hessian_l2(r, g)
    third = third_derivative_l2(r, g)
    return (1.0 + grad_linf(r, g) + hessian_linf(r, g) + grad_l2(traj.ut(n), g)
            + math.sqrt(hess * hess + third * third) + grad_l2(traj.u[n].values, g))


def _trapezoid(times: Sequence[float], vals: Sequence[float]) -> float:
    return float(np.trapezoid(np.asarray(vals, dtype=float), np.asarray(times, dtype=float)))


def _iterate_diagnostics(k: int, cur: Trajectory, prev: Trajectory, f, lam: float,
                         prev_eta_weighted: float | None) -> IterateDiagnostics:
    g = cur.u[0].grid
    eta, eta_w, sig, grad_eta, bk, phik = [], [], [], [], [], []
    lam_rxx = 0.0
    for n in range(len(cur.times)):
        d = cur.u[n].values - prev.u[n].values
        s = cur.rho[n].values - prev.rho[n].values
        eta.append(_l2(d, g))
        eta_w.append(_l2(np.sqrt(np.maximum(cur.rho[n].values, 0.0)) * d, g))
        sig.append(_l2(s, g))
        grad_eta.append(grad_l2(d, g) ** 2)
        bk.append(_b_k(cur, f, n))
        phik.append(_phi_k_ingredients(cur, n))
        rxx = dx_array(dx_array(cur.rho[n].values, g.hx), g.hx)
        lam_rxx = max(lam_rxx, lam * float(np.max(np.abs(rxx))))
    ew = max(eta_w)
    ratio = math.nan
    if prev_eta_weighted is not None and k >= 2 and prev_eta_weighted > 0:
        ratio = ew / prev_eta_weighted
    return IterateDiagnostics(
        k=k, eta_l2=max(eta), sigma_l2=max(sig), eta_weighted=ew,
        eta_grad_l2_int=_trapezoid(cur.times, grad_eta), bk_integral=_trapezoid(cur.times, bk),
        ratio=ratio, phi_k=max(phik), lambda_rho_xx=lam_rxx,
        eta_series=eta, eta_weighted_series=eta_w, sigma_series=sig, phi_k_series=phik,
        times=list(cur.times),
    )


# -- the iteration --------------------------------------------------------------------

@dataclass
class PicardResult:
    solution: Trajectory
    diagnostics: list[IterateDiagnostics]
    converged: bool
    compat: CompatibilityData

    @property
    def iterations(self) -> int:
        return len(self.diagnostics)

    @property
    def ratios(self) -> list[float]:
        return [d.ratio for d in self.diagnostics]

    def phi_K(self) -> list[list[float]]:
        """``Phi_K(t)`` for ``K = 1..iterations`` (running max over iterates)."""
        out, running = [], None
        for d in self.diagnostics:
            s = np.asarray(d.phi_k_series)
            running = s if running is None else np.maximum(running, s)
            out.append(running.tolist())
        return out


def _check_initial(rho0: ScalarField, u0: ScalarField, delta: float):
    if np.min(rho0.values) < delta - 1e-14:
        raise ValueError(f"initial density {np.min(rho0.values):.3g} below the floor delta = {delta}")
    if u0.bc_y != DIRICHLET_ZERO:
        raise ValueError("u0 must vanish at the walls")


def initial_compatibility(rho0: ScalarField, u0: ScalarField, f, cfg: PicardConfig) -> CompatibilityData:
    g = rho0.grid
    f0 = ScalarField(g, _forcing(f, 0.0, g))
    P0 = compute_initial_pressure(rho0, u0, f0, cfg.law, cfg.eps_rho)
    return compatibility_v1(rho0, u0, P0, f0, cfg.law, cfg.eps_rho)


def picard_iterate(rho0: ScalarField, u0: ScalarField, f, cfg: PicardConfig,
                   warm_start: Trajectory | None = None) -> PicardResult:
    """Run the linearization iteration until ``sup_t |u^k - u^{k-1}|_2 < tol``.

    Non-convergence within ``cfg.max_iters`` is reported through
    ``converged=False``; the last iterate is returned either way.
    """
    _check_initial(rho0, u0, cfg.delta)
    g = rho0.grid
    compat = initial_compatibility(rho0, u0, f, cfg)
    n_steps, dt = cfg.steps
    times = [n * dt for n in range(n_steps + 1)]
    if warm_start is None:
        prev = Trajectory(times, [rho0] * (n_steps + 1), [zeros(g, DIRICHLET_ZERO)] * (n_steps + 1),
                          [PressureProfile.zero(g)] * (n_steps + 1))
    else:
        prev = warm_start
    params = TransportParams(cfg.lam, dt, cfg.cfl_guard)
    diags: list[IterateDiagnostics] = []
    converged = False
    cur = prev
    for k in range(1, cfg.max_iters + 1):
        rho_traj = transport_solve(rho0, prev.u, params, cfg.T)
        mom = momentum_solve(rho_traj.fields, prev.u, u0, f, cfg.law, dt, cfg.T, P0=compat.P0,
                             cfl_guard=cfg.cfl_guard, face=cfg.face, method=cfg.method)
        cur = Trajectory(times, rho_traj.fields, mom.u, mom.P)
        last = diags[-1].eta_weighted if diags else None
        d = _iterate_diagnostics(k, cur, prev, f, cfg.lam, last)
        diags.append(d)
        prev = cur
        if d.eta_l2 < cfg.tol:
            converged = True
            break
    return PicardResult(cur, diags, converged, compat)


# -- coupled march (fixed point of the iteration) -----------------------------------------

@dataclass
class RunRecord:
    trajectory: Trajectory
    snapshots: list[NormSnapshot]
    series: PhiSeries
    compat: CompatibilityData
    breach: object = None
    reports: list = field(default_factory=list)

    @property
    def energy_gaps(self) -> list[float]:
        return [r.energy_gap for r in self.reports]


def march(rho0: ScalarField, u0: ScalarField, f, cfg: PicardConfig, *,
          threshold: float | None = None, diagnostics: bool = True,
          on_step: Callable | None = None) -> RunRecord:
    """Advance the lagged coupled scheme, logging norms, Phi and J every step.

    With ``threshold`` set the run stops at the first level where Phi reaches
    it and the breach is stored on the record.
    """
    _check_initial(rho0, u0, cfg.delta)
    g = rho0.grid
    compat = initial_compatibility(rho0, u0, f, cfg)
    n_steps, dt = cfg.steps
    params = TransportParams(cfg.lam, dt, cfg.cfl_guard)
    traj = Trajectory([0.0], [rho0], [u0], [compat.P0])
    series = PhiSeries()
    snaps: list[NormSnapshot] = []
    reports = []
    accumulated = 0.0
    breach = None

    def log(n, ut, gap):
        nonlocal accumulated, breach
        snap = snapshot(traj.times[n], traj.rho[n], traj.u[n], traj.P[n], ut, gap)
        if n > 0:
            accumulated += dt * snaps[-1].integrand
        snaps.append(snap)
        series.append(snap.t, snap.phi, j_functional(snap, accumulated))
        if threshold is not None and breach is None:
            hit = blowup_monitor(series, threshold)
            if hit is not None:
                breach = hit

    if diagnostics:
        log(0, compat.V1.values, 0.0)
    rho, u = rho0, u0
    for n in range(n_steps):
        if breach is not None:
            break
        t = n * dt
        w = vertical_velocity_array(u.values, g.hx, g.hy)
        rho_new = transport_step(rho, u.values, w, params)
        u_new, P_new, rep = momentum_step(rho_new, u, u, _forcing(f, t + dt, g), cfg.law, dt, t=t,
                                          rho_prev=rho, cfl_guard=cfg.cfl_guard, face=cfg.face,
                                          method=cfg.method)
        traj.times.append(t + dt)
        traj.rho.append(rho_new)
        traj.u.append(u_new)
        traj.P.append(P_new)
        reports.append(rep)
        rho, u = rho_new, u_new
        if diagnostics:
            log(n + 1, (u_new.values - traj.u[n].values) / dt, rep.energy_gap)
        if on_step is not None:
            on_step(n + 1, traj, rep)
    return RunRecord(traj, snaps, series, compat, breach, reports)


# -- reports -------------------------------------------------------------------------------

@dataclass
class ContractionReport:
    ratios: list[float]
    r: float
    geometric: bool
    verdict: str
    fit_C: float
    fit_T0: float
    fit_residual: float


def contraction_report(diags, burn_in: int = 3) -> ContractionReport:
    """Decay classification of the weighted increments ``e_k``.

    ``diags`` is a list of :class:`IterateDiagnostics` or plain values
    ``e_1, e_2, ...``. The envelope ``log C + (k-1) log T0 - log (k-1)!`` is
    fitted to ``log e_k`` by least squares; ``r`` is the largest ratio
    ``e_k / e_{k-1}`` for ``k >= burn_in``.
    """
    vals = [d.eta_weighted if isinstance(d, IterateDiagnostics) else float(d) for d in diags]
    if len(vals) < 4:
        raise ValueError("contraction report needs at least four iterates")
    e = np.asarray(vals, dtype=float)
    ratios = [math.nan] + [e[i] / e[i - 1] if e[i - 1] > 0 else math.nan for i in range(1, len(e))]
    tail = [r for k, r in enumerate(ratios, start=1) if k >= burn_in and math.isfinite(r)]
    r = max(tail) if tail else math.nan
    geometric = bool(tail) and r < 1.0
    decreasing = len(tail) >= 2 and all(b < a for a, b in zip(tail, tail[1:]))
    if geometric and decreasing and tail[-1] < 0.9 * tail[0]:
        verdict = "super-geometric"
    elif geometric:
        verdict = "geometric"
    else:
        verdict = "none"
    k = np.arange(1, len(e) + 1)
    mask = e > 0
    y = np.log(e[mask]) + np.array([math.lgamma(kk) for kk in k[mask]])
    A = np.column_stack([np.ones(mask.sum()), k[mask] - 1.0])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return ContractionReport(ratios, r, geometric, verdict, float(np.exp(coef[0])), float(np.exp(coef[1])), resid)


@dataclass
class SigmaReport:
    k: list[int]
    c_sigma: list[float]
    degenerate: list[bool]

    @property
    def variation(self) -> float:
        vals = [c for c, d in zip(self.c_sigma, self.degenerate) if not d]
        return max(vals) / min(vals) if vals else math.nan


def sigma_bound_check(diags: Sequence[IterateDiagnostics], floor: float = 1e-30) -> SigmaReport:
    """``c(k) = sup_t |sigma^{k+1}(t)|^2 / int_0^t |sqrt(rho^k) eta^k|^2 ds``."""
    ks, cs, deg = [], [], []
    for a, b in zip(diags, diags[1:]):
        times = np.asarray(a.times)
        w2 = np.asarray(a.eta_weighted_series) ** 2
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (w2[1:] + w2[:-1]))])
        s2 = np.asarray(b.sigma_series) ** 2
        ok = cum > floor
        ks.append(a.k)
        if not np.any(ok) or cum[-1] < 1e-24:
            cs.append(math.nan)
            deg.append(True)
        else:
            cs.append(float(np.max(s2[ok] / cum[ok])))
            deg.append(False)
    return SigmaReport(ks, cs, deg)


def mollify(rho0_raw: ScalarField, delta: float, sweeps: int = 3) -> ScalarField:
    """Floor at ``delta`` then apply ``sweeps`` damped-Jacobi smoothings in x."""
    r = np.maximum(rho0_raw.values, delta)
    for _ in range(sweeps):
        r = 0.25 * np.roll(r, 1, axis=0) + 0.5 * r + 0.25 * np.roll(r, -1, axis=0)
    return ScalarField(rho0_raw.grid, r)


@dataclass
class ContinuationLevel:
    delta: float
    lam: float
    converged: bool
    iterations: int
    diff_to_previous: float
    phi: list[float]
    times: list[float]


def _sup_l2_diff(a: Trajectory, b: Trajectory) -> float:
    g = a.u[0].grid
    return max(_l2(x.values - y.values, g) for x, y in zip(a.u, b.u))


def two_level_continuation(rho0_raw: ScalarField, u0: ScalarField, f, cfg: PicardConfig,
                           delta_list: Sequence[float], lambda_list: Sequence[float]) -> list[ContinuationLevel]:
    """Solve along decreasing ``(delta, lambda)`` levels and tabulate differences.

    The lists are paired level by level; a single-element list is repeated.
    Each level starts the iteration from the previous level's solution.
    """
    n = max(len(delta_list), len(lambda_list))
    deltas = list(delta_list) * n if len(delta_list) == 1 else list(delta_list)
    lams = list(lambda_list) * n if len(lambda_list) == 1 else list(lambda_list)
    if len(deltas) != n or len(lams) != n:
        raise ValueError("delta and lambda lists must have equal length or length one")
    if any(b > a for a, b in zip(deltas, deltas[1:])) or any(b > a for a, b in zip(lams, lams[1:])):
        raise ValueError("continuation parameters must be non-increasing")
    if np.min(rho0_raw.values) < 0:
        raise ValueError("raw initial density must be non-negative")
    table: list[ContinuationLevel] = []
    previous = None
    for delta, lam in zip(deltas, lams):
        level_cfg = replace(cfg, lam=lam, delta=delta)
        rho0 = mollify(rho0_raw, delta, cfg.smoothing_sweeps)
        res = picard_iterate(rho0, u0, f, level_cfg, warm_start=previous)
        sol = res.solution
        phi = [phi_functional(r, u) for r, u in zip(sol.rho, sol.u)]
        diff = math.nan if previous is None else _sup_l2_diff(sol, previous)
        table.append(ContinuationLevel(delta, lam, res.converged, res.iterations, diff, phi, list(sol.times)))
        previous = sol
    return table


@dataclass
class StabilityReport:
    times: list[float]
    E: list[float]
    integral: list[float]
    epsilon: float
    rate: float
    degenerate: bool


def stability_experiment(rho0_a: ScalarField, u0_a: ScalarField, rho0_b: ScalarField, u0_b: ScalarField,
                         f, cfg: PicardConfig) -> StabilityReport:
    """Two-run Gronwall experiment on the coupled scheme.

    ``E(t) = |rho_a - rho_b|^2 + |sqrt(rho_a)(u_a - u_b)|^2``; the fitted rate
    is ``max_t log(E(t)/E(0)) / int_0^t (1 + |grad f - grad u_t|^2 + |u|_{H3}^2)``
    evaluated along run ``a``.
    """
    g = rho0_a.grid
    eps = _l2(u0_a.values - u0_b.values, g) + _l2(rho0_a.values - rho0_b.values, g)
    ra = march(rho0_a, u0_a, f, cfg, diagnostics=False).trajectory
    rb = march(rho0_b, u0_b, f, cfg, diagnostics=False).trajectory
    E, integrand = [], []
    for n, t in enumerate(ra.times):
        dr = ra.rho[n].values - rb.rho[n].values
        du = ra.u[n].values - rb.u[n].values
        E.append(integral_array(dr * dr, g) + integral_array(np.maximum(ra.rho[n].values, 0.0) * du * du, g))
        gf = _forcing(f, t, g) - ra.ut(n)
        integrand.append(1.0 + grad_l2(gf, g) ** 2 + _sobolev_array(ra.u[n].values, g, 3) ** 2)
    integral = [0.0]
    for n in range(1, len(ra.times)):
        integral.append(integral[-1] + 0.5 * (ra.times[n] - ra.times[n - 1]) * (integrand[n] + integrand[n - 1]))
    degenerate = E[0] <= 0.0
    rate = math.nan
    if not degenerate:
        rate = max(math.log(E[n] / E[0]) / integral[n] for n in range(1, len(E)) if E[n] > 0)
    return StabilityReport(list(ra.times), E, integral, eps, rate, degenerate)
