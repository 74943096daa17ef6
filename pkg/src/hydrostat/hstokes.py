"""Variable-viscosity hydrostatic Stokes solver.

Solves, for u vanishing at y = 0, 1 and periodic in x, and an x-only
pressure P with zero mean::

    shift*u - dx(mu dx u) - dy(mu dy u) + dx P = f
    dx( int_0^1 u dy ) = 0

on the collocated grid of :mod:`hydrostat.grid`. Diffusion uses a conservative
five-point flux form with face-averaged viscosity. The pressure gradient and
the constraint both use the centered periodic stencil, so the constraint block
is (up to the factor ``-hy``) the transpose of the gradient block and the
pressure does no work against admissible velocities.

The centered stencil has a two-dimensional kernel on an even periodic grid
(constants and the checkerboard ``(-1)**i``). Both pressure modes are pinned
by two extra rows, and the two constraint rows at ``i = 0, 1`` are dropped:
they are implied by the others through the telescoping identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from .grid import (
    DIRICHLET_ZERO,
    Grid,
    PressureProfile,
    ScalarField,
    dx_array,
    integral_array,
    sample,
    trapz_y_array,
)
from .norms import _l2, _sobolev_array, grad_linf, hessian_l2, pressure_sobolev_norm


class SolverError(RuntimeError):
    pass


class ViscosityError(ValueError):
    pass


# -- viscosity laws ------------------------------------------------------------

@dataclass(frozen=True)
class ViscosityLaw:
    """Density-dependent viscosity ``mu(rho)`` with a positive floor.

    kinds: ``constant`` (c0), ``affine`` (c0 + c1*rho), ``quadratic``
    (c0 + c1*rho + c2*rho**2) and ``table`` (C2 cubic spline through
    ``(rho_k, mu_k)`` pairs, clamped outside the table range).
    """

    kind: str = "constant"
    coefficients: tuple = (1.0,)
    floor: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if not self.floor > 0:
            raise ViscosityError("viscosity floor must be positive")
        ncoef = {"constant": 1, "affine": 2, "quadratic": 3}
        if self.kind in ncoef:
            if len(self.coefficients) != ncoef[self.kind]:
                raise ViscosityError(f"{self.kind} law needs {ncoef[self.kind]} coefficients")
        elif self.kind == "table":
            rho_k, mu_k = self._table_arrays()
            if len(rho_k) < 4 or np.any(np.diff(rho_k) <= 0):
                raise ViscosityError("table law needs >= 4 strictly increasing densities")
            if np.min(mu_k) < self.floor:
                raise ViscosityError("table values fall below the viscosity floor")
            object.__setattr__(self, "_spline", CubicSpline(rho_k, mu_k, bc_type="natural"))
        else:
            raise ViscosityError(f"unknown viscosity law kind {self.kind!r}")

    def _table_arrays(self):
        arr = np.asarray(self.table, dtype=float).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    def __call__(self, rho):
        if self.kind == "table":
            rho_k, _ = self._table_arrays()
            return self._spline(np.clip(rho, rho_k[0], rho_k[-1]))
        c = self.coefficients
        out = c[0] + 0 * rho
        if self.kind in ("affine", "quadratic"):
            out = out + c[1] * rho
        if self.kind == "quadratic":
            out = out + c[2] * rho * rho
        return out

    def derivative(self, rho, order: int = 1):
        if self.kind == "table":
            rho_k, _ = self._table_arrays()
            inside = (rho >= rho_k[0]) & (rho <= rho_k[-1])
            return np.where(inside, self._spline(np.clip(rho, rho_k[0], rho_k[-1]), order), 0.0)
        c = list(self.coefficients) + [0.0] * (3 - len(self.coefficients))
        if order == 1:
            return c[1] + 2.0 * c[2] * rho
        if order == 2:
            return 2.0 * c[2] + 0.0 * rho
        return 0.0 * rho

    def field(self, rho: ScalarField) -> ScalarField:
        """Evaluate on a density field, enforcing the floor."""
        mu = np.asarray(self(rho.values), dtype=float)
        low = float(np.min(mu))
        if low < self.floor * (1.0 - 1e-12):
            raise ViscosityError(f"viscosity {low:.6g} below floor {self.floor:.6g}")
        return ScalarField(rho.grid, mu)


# -- assembly -------------------------------------------------------------------

def _face_average(a: np.ndarray, b: np.ndarray, kind: str) -> np.ndarray:
    if kind == "arithmetic":
        return 0.5 * (a + b)
    if kind == "harmonic":
        return 2.0 * a * b / (a + b)
    raise ValueError(f"unknown face average {kind!r}")


def _diffusion_coo(mu: np.ndarray, grid: Grid, face: str):
    """COO triplets of ``-div(mu grad u)`` on interior unknowns."""
    Nx, Ny = grid.Nx, grid.Ny
    m = Ny - 1
    cx, cy = 1.0 / grid.hx ** 2, 1.0 / grid.hy ** 2
    I, J = np.meshgrid(np.arange(Nx), np.arange(1, Ny), indexing="ij")
    row = (I * m + (J - 1)).ravel()
    mu_e = _face_average(mu, np.roll(mu, -1, axis=0), face)[:, 1:Ny].ravel()
    mu_w = _face_average(mu, np.roll(mu, 1, axis=0), face)[:, 1:Ny].ravel()
    mu_n = _face_average(mu[:, 1:Ny], mu[:, 2:], face).ravel()
    mu_s = _face_average(mu[:, 1:Ny], mu[:, :Ny - 1], face).ravel()
    rows = [row, row, row]
    cols = [row, (((I + 1) % Nx) * m + (J - 1)).ravel(), (((I - 1) % Nx) * m + (J - 1)).ravel()]
    vals = [cx * (mu_e + mu_w) + cy * (mu_n + mu_s), -cx * mu_e, -cx * mu_w]
    north = (J < Ny - 1).ravel()
    south = (J > 1).ravel()
    rows += [row[north], row[south]]
    cols += [row[north] + 1, row[south] - 1]
    vals += [-cy * mu_n[north], -cy * mu_s[south]]
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def dirichlet_energy(mu: np.ndarray, u: np.ndarray, grid: Grid, face: str = "arithmetic") -> float:
    """Discrete ``int mu |grad u|^2`` matching the assembled diffusion stencil.

    Sums ``mu_face * (jump/h)**2`` over every x-face and every y-face
    (wall faces included), weighted by the cell area.
    """
    ex = (np.roll(u, -1, axis=0) - u) / grid.hx
    mx = _face_average(mu, np.roll(mu, -1, axis=0), face)
    ey = np.diff(u, axis=1) / grid.hy
    my = _face_average(mu[:, 1:], mu[:, :-1], face)
    # x-faces on the walls carry u = 0 and drop out
    return grid.hx * grid.hy * float(np.sum(mx[:, 1:-1] * ex[:, 1:-1] ** 2) + np.sum(my * ey ** 2))


@dataclass(eq=False)
class HStokesOperator:
    """Assembled and factorized saddle-point operator."""

    grid: Grid
    mu: np.ndarray
    shift: np.ndarray
    matrix: sp.csc_matrix
    face: str = "arithmetic"
    method: str = "direct"
    _lu: object = field(default=None, repr=False)
    _uu: object = field(default=None, repr=False)

    @property
    def n_u(self) -> int:
        return self.grid.Nx * (self.grid.Ny - 1)

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:
                raise SolverError(f"singular hydrostatic Stokes system: {exc}") from exc
        return self._lu

    def velocity_block_lu(self):
        if self._uu is None:
            n = self.n_u
            self._uu = spla.splu(self.matrix[:n, :n].tocsc())
        return self._uu

    def apply_momentum(self, u: np.ndarray, P: np.ndarray) -> np.ndarray:
        """Momentum rows ``shift*u - div(mu grad u) + dx P`` on the full grid."""
        g = self.grid
        x = np.concatenate([u[:, 1:-1].ravel(), P])
        r = self.matrix[: self.n_u] @ x
        out = np.zeros(g.shape)
        out[:, 1:-1] = r.reshape(g.Nx, g.Ny - 1)
        return out


def assemble(mu: ScalarField, grid: Grid | None = None, shift: ScalarField | np.ndarray | float = 0.0,
             *, floor: float | None = None, face: str = "arithmetic",
             method: str = "direct") -> HStokesOperator:
    """Assemble the hydrostatic Stokes operator for viscosity ``mu``.

    ``shift`` is a non-negative reaction coefficient (``rho/dt`` in time
    stepping). ``floor`` defaults to any positive lower bound.
    """
    grid = mu.grid if grid is None else grid
    mu_v = np.asarray(mu.values, dtype=float)
    lo = float(np.min(mu_v))
    if (floor is not None and lo < floor * (1 - 1e-12)) or lo <= 0:
        raise ViscosityError(f"viscosity {lo:.6g} violates floor {floor if floor is not None else 0.0}")
    shift_v = np.broadcast_to(np.asarray(getattr(shift, "values", shift), dtype=float), grid.shape)
    if np.min(shift_v) < 0 or not np.all(np.isfinite(shift_v)):
        raise ValueError("shift must be finite and non-negative")
    if method not in ("direct", "iterative"):
        raise ValueError(f"unknown solve method {method!r}")

    Nx, Ny = grid.Nx, grid.Ny
    m = Ny - 1
    n_u = Nx * m
    r, c, v = _diffusion_coo(mu_v, grid, face)
    rows, cols, vals = [r], [c], [v]
    diag = np.arange(n_u)
    rows.append(diag)
    cols.append(diag)
    vals.append(shift_v[:, 1:Ny].ravel())

    # pressure gradient in each momentum row
    I, J = np.meshgrid(np.arange(Nx), np.arange(1, Ny), indexing="ij")
    urow = (I * m + (J - 1)).ravel()
    ii = I.ravel()
    rows += [urow, urow]
    cols += [n_u + (ii + 1) % Nx, n_u + (ii - 1) % Nx]
    half = 0.5 / grid.hx
    vals += [np.full(n_u, half), np.full(n_u, -half)]

    # constraint rows dx(hy * sum_j u) = 0 for i = 2..Nx-1, placed in rows n_u + i
    ci = np.arange(2, Nx)
    for offset, sign in ((1, 1.0), (-1, -1.0)):
        src = (ci + offset) % Nx
        cc = (src[:, None] * m + np.arange(m)[None, :]).ravel()
        rows.append(np.repeat(n_u + ci, m))
        cols.append(cc)
        vals.append(np.full(cc.size, sign * grid.hy * half))

    # rows n_u + 0, n_u + 1: zero mean and zero checkerboard pressure
    pidx = n_u + np.arange(Nx)
    rows += [np.full(Nx, n_u), np.full(Nx, n_u + 1)]
    cols += [pidx, pidx]
    vals += [np.full(Nx, 1.0 / Nx), (-1.0) ** np.arange(Nx) / Nx]

    N = n_u + Nx
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    A.sum_duplicates()
    return HStokesOperator(grid, mu_v, np.array(shift_v), A, face, method)


# -- solves -----------------------------------------------------------------------

@dataclass
class HStokesSolution:
    u: ScalarField
    P: PressureProfile
    constraint_residual: float
    linsolve_residual: float
    iterations: int = 1
    converged: bool = True
    info: dict = field(default_factory=dict)


def constraint_residual(u: np.ndarray, grid: Grid) -> float:
    """``max_x |dx int_0^1 u dy|``."""
    return float(np.max(np.abs(dx_array(trapz_y_array(u, grid.hy), grid.hx))))


def _rhs_vector(op: HStokesOperator, f: np.ndarray) -> np.ndarray:
    b = np.zeros(op.matrix.shape[0])
    b[: op.n_u] = f[:, 1:-1].ravel()
    return b


def _unpack(op: HStokesOperator, x: np.ndarray):
    g = op.grid
    u = np.zeros(g.shape)
    u[:, 1:-1] = x[: op.n_u].reshape(g.Nx, g.Ny - 1)
    return u, x[op.n_u:]


def _iterative_solve(op: HStokesOperator, b: np.ndarray, rtol: float = 1e-12, maxiter: int = 500):
    """GMRES on the full system with a block-diagonal preconditioner.

    The velocity block is inverted exactly; the pressure block is scaled by
    the pressure mass matrix over the mean viscosity.
    """
    n = op.n_u
    lu_uu = op.velocity_block_lu()
    pscale = float(np.mean(op.mu)) / op.grid.hx

    def prec(r):
        out = np.empty_like(r)
        out[:n] = lu_uu.solve(r[:n])
        out[n:] = pscale * r[n:]
        return out

    M = spla.LinearOperator(op.matrix.shape, matvec=prec)
    x, info = spla.gmres(op.matrix, b, M=M, rtol=rtol, atol=0.0, restart=200, maxiter=maxiter)
    return x, info


def solve_hstokes(op: HStokesOperator, f: ScalarField | np.ndarray, *, check: bool = True) -> HStokesSolution:
    """Solve for ``(u, P)`` given forcing ``f``.

    Raises :class:`SolverError` when either residual invariant fails and
    ``check`` is set.
    """
    g = op.grid
    fv = np.asarray(getattr(f, "values", f), dtype=float)
    if fv.shape != g.shape or not np.all(np.isfinite(fv)):
        raise SolverError("forcing must be a finite field on the operator grid")
    b = _rhs_vector(op, fv)
    iterations = 1
    if op.method == "direct":
        x = op.factorize().solve(b)
    else:
        x, info = _iterative_solve(op, b)
        if info != 0:
            raise SolverError(f"GMRES did not converge (info={info})")
        iterations = max(info, 1)
    res = op.matrix @ x - b
    bnorm = np.linalg.norm(b)
    rel = float(np.linalg.norm(res) / bnorm) if bnorm > 0 else float(np.linalg.norm(res))
    u, P = _unpack(op, x)
    cres = constraint_residual(u, g)
    if check and (rel > 1e-9 or cres > 1e-9):
        raise SolverError(f"solve residuals too large: linsolve {rel:.3e}, constraint {cres:.3e}")
    return HStokesSolution(
        ScalarField(g, u, DIRICHLET_ZERO), PressureProfile.project(g, P), cres, rel, iterations
    )


def ptilde_fixed_point(mu: ScalarField, f: ScalarField, tol: float = 1e-10, max_iter: int = 100,
                       *, face: str = "arithmetic") -> HStokesSolution:
    """Solve the variable-viscosity problem through constant-viscosity solves.

    Dividing the momentum equation by ``mu`` and writing the pressure as
    ``mu * Ptilde`` gives a unit-viscosity hydrostatic Stokes problem whose
    right side carries ``grad(mu).grad(u)/mu`` and the pressure-viscosity
    coupling. Those terms are lagged: each sweep solves the unit problem for
    the correction driven by ``mu**-1`` times the current residual of the full
    operator, and maps the correction of ``Ptilde`` back to pressure with the
    y-averaged viscosity. A fixed point is an exact solution of the full
    problem, so the result is comparable with :func:`solve_hstokes`.

    Non-convergence is reported through ``converged=False`` rather than raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = mu.grid
    full = assemble(mu, g, face=face)
    unit = assemble(ScalarField(g, np.ones(g.shape)), g)
    mu_v = full.mu
    mu_bar = trapz_y_array(mu_v, g.hy)
    fv = np.asarray(f.values, dtype=float)
    u = np.zeros(g.shape)
    P = np.zeros(g.Nx)
    history = []
    iterations = 0
    converged = False
    for _ in range(max_iter):
        r = fv - full.apply_momentum(u, P)
        corr = solve_hstokes(unit, r / mu_v, check=False)
        du = corr.u.values
        u = u + du
        P = P + mu_bar * corr.P.values
        P -= P.mean()
        step = _l2(du, g)
        history.append(step)
        if step < tol:
            converged = True
            break
        iterations += 1
        if len(history) > 3 and step > 1e6 * max(history[0], 1e-300):
            break
    res = fv - full.apply_momentum(u, P)
    fnorm = _l2(fv, g)
    rel = _l2(res, g) / fnorm if fnorm > 0 else _l2(res, g)
    ptilde = P / mu_bar
    discrepancy = _l2((mu_v - mu_bar[:, None]) * ptilde[:, None], g)
    return HStokesSolution(
        ScalarField(g, u, DIRICHLET_ZERO),
        PressureProfile.project(g, P),
        constraint_residual(u, g),
        float(rel),
        iterations,
        converged,
        {"increments": history, "reconstruction_discrepancy": discrepancy},
    )


# -- diagnostics --------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    c_h2: float
    c_h3: float
    degenerate: bool


def regularity_check(sol: HStokesSolution, rho: ScalarField, f: ScalarField) -> RegularityReport:
    """Empirical constants of the H2/H1 and H3/H2 elliptic bounds."""
    g = rho.grid
    fl2 = _l2(f.values, g)
    if fl2 == 0.0:
        return RegularityReport(math.nan, math.nan, True)
    gr = grad_linf(rho.values, g)
    hess = hessian_l2(rho.values, g)
    u = sol.u.values
    lhs2 = _sobolev_array(u, g, 2) + pressure_sobolev_norm(sol.P, 1)
    lhs3 = _sobolev_array(u, g, 3) + pressure_sobolev_norm(sol.P, 2)
    c2 = lhs2 / ((1.0 + gr) * fl2)
    c3 = lhs3 / ((1.0 + gr + gr * gr) * (1.0 + hess) * _sobolev_array(f.values, g, 1))
    return RegularityReport(c2, c3, False)


def energy_balance(op: HStokesOperator, sol: HStokesSolution, f: ScalarField) -> tuple[float, float]:
    """Return ``(int mu|grad u|^2 + int shift u^2, int f u)``."""
    g = op.grid
    u = sol.u.values
    lhs = dirichlet_energy(op.mu, u, g, op.face) + integral_array(op.shift * u * u, g)
    return lhs, integral_array(np.asarray(f.values) * u, g)


# -- manufactured solutions -----------------------------------------------------------

def _is_sympy(obj) -> bool:
    return type(obj).__module__.startswith("sympy")


def _fd(fn: Callable, X, Y, h: float, axis: int, order: int) -> np.ndarray:
    """Sixth-order central difference of ``fn`` along one axis."""
    if order == 1:
        w = {1: 45.0, 2: -9.0, 3: 1.0}
        den = 60.0 * h
        out = 0.0
        for k, c in w.items():
            if axis == 0:
                out = out + c * (fn(X + k * h, Y) - fn(X - k * h, Y))
            else:
                out = out + c * (fn(X, Y + k * h) - fn(X, Y - k * h))
        return out / den
    w = {0: -490.0, 1: 270.0, 2: -27.0, 3: 2.0}
    den = 180.0 * h * h
    out = w[0] * fn(X, Y)
    for k in (1, 2, 3):
        if axis == 0:
            out = out + w[k] * (fn(X + k * h, Y) + fn(X - k * h, Y))
        else:
            out = out + w[k] * (fn(X, Y + k * h) + fn(X, Y - k * h))
    return out / den


def _check_mms_constraint(u_fn: Callable, grid: Grid, tol: float = 1e-8):
    xs = np.linspace(0.0, grid.L, 4 * grid.Nx, endpoint=False)
    for yw in (0.0, 1.0):
        wall = np.max(np.abs(u_fn(xs, np.full_like(xs, yw))))
        if wall > 1e-10:
            raise ValueError(f"manufactured velocity does not vanish at y = {yw} (|u| = {wall:.2e})")
    nodes, weights = np.polynomial.legendre.leggauss(40)
    ys = 0.5 * (nodes + 1.0)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    col = 0.5 * (u_fn(X, Y) * weights[None, :]).sum(axis=1)
    spread = float(np.max(col) - np.min(col))
    if spread > tol:
        raise ValueError(f"int_0^1 u dy depends on x (spread {spread:.2e}); constraint violated")


def mms_forcing(u_exact, P_exact, law: ViscosityLaw, rho_exact, grid: Grid) -> ScalarField:
    """Forcing ``-div(mu(rho*) grad u*) + dx P*`` for a manufactured pair.

    ``u_exact(x, y)``, ``rho_exact(x, y)`` and ``P_exact(x)`` are either sympy
    expressions in symbols named ``x`` and ``y`` (differentiated symbolically)
    or numpy callables (differentiated with sixth-order central differences
    at a quarter of the grid spacing).
    """
    if _is_sympy(u_exact):
        return _mms_symbolic(u_exact, P_exact, law, rho_exact, grid)
    _check_mms_constraint(u_exact, grid)
    X, Y = grid.mesh()
    hx, hy = grid.hx / 4.0, grid.hy / 4.0

    def mu_fn(x, y):
        return law(rho_exact(x, y))

    mu = mu_fn(X, Y)
    ux = _fd(u_exact, X, Y, hx, 0, 1)
    uy = _fd(u_exact, X, Y, hy, 1, 1)
    uxx = _fd(u_exact, X, Y, hx, 0, 2)
    uyy = _fd(u_exact, X, Y, hy, 1, 2)
    mux = _fd(mu_fn, X, Y, hx, 0, 1)
    muy = _fd(mu_fn, X, Y, hy, 1, 1)

    def p2(x, y):
        return P_exact(x) + 0.0 * y

    px = _fd(p2, X, Y, hx, 0, 1)
    f = -(mu * (uxx + uyy) + mux * ux + muy * uy) + px
    return ScalarField(grid, f)


def _mms_symbolic(u_exact, P_exact, law, rho_exact, grid):
    import sympy

    x, y = sympy.symbols("x y", real=True)
    subs = {s: (x if s.name == "x" else y) for s in u_exact.free_symbols | sympy.sympify(rho_exact).free_symbols
            | sympy.sympify(P_exact).free_symbols}
    u = sympy.sympify(u_exact).xreplace(subs)
    rho = sympy.sympify(rho_exact).xreplace(subs)
    P = sympy.sympify(P_exact).xreplace(subs)
    if y in P.free_symbols:
        raise ValueError("manufactured pressure must depend on x only")
    if law.kind == "table":
        raise ValueError("symbolic forcing needs a polynomial viscosity law")
    mu = law(rho)
    expr = -(sympy.diff(mu * sympy.diff(u, x), x) + sympy.diff(mu * sympy.diff(u, y), y)) + sympy.diff(P, x)
    u_fn = sympy.lambdify((x, y), u, "numpy")
    _check_mms_constraint(lambda a, b: u_fn(a, b) + 0.0 * a, grid)
    f_fn = sympy.lambdify((x, y), expr, "numpy")
    X, Y = grid.mesh()
    return ScalarField(grid, np.broadcast_to(f_fn(X, Y), grid.shape) + 0.0)


@dataclass(frozen=True)
class MMSCase:
    """Manufactured pair as sympy expressions in ``x`` and ``y``."""

    name: str
    u: object
    P: object
    rho: object
    law: ViscosityLaw

    def callables(self):
        import sympy

        x, y = sympy.symbols("x y", real=True)
        fu = sympy.lambdify((x, y), self.u, "numpy")
        fr = sympy.lambdify((x, y), self.rho, "numpy")
        fp = sympy.lambdify((x,), self.P, "numpy")
        return (lambda a, b: fu(a, b) + 0.0 * a, lambda a: fp(a) + 0.0 * a, lambda a, b: fr(a, b) + 0.0 * a)


def mms_case(name: str) -> MMSCase:
    """Built-in manufactured cases on the unit-length channel.

    ``constant-mu``: u = sin(2 pi x) sin(2 pi y), P = cos(2 pi x), mu = 1.
    ``variable-mu``: same pair with mu = rho/2 + 1/2 and
    rho = 1 + sin(2 pi x)(1 - cos(2 pi y))/4, so that
    mu = 1 + sin(2 pi x)(1 - cos(2 pi y))/8.
    ``zero``: u = 0, P = 0.
    """
    import sympy

    x, y = sympy.symbols("x y", real=True)
    s = 2 * sympy.pi
    if name == "constant-mu":
        return MMSCase(name, sympy.sin(s * x) * sympy.sin(s * y), sympy.cos(s * x), sympy.Integer(1),
                       ViscosityLaw("constant", (1.0,), 1.0))
    if name == "variable-mu":
        rho = 1 + sympy.sin(s * x) * (1 - sympy.cos(s * y)) / 4
        return MMSCase(name, sympy.sin(s * x) * sympy.sin(s * y), sympy.cos(s * x), rho,
                       ViscosityLaw("affine", (0.5, 0.5), 0.5))
    if name == "zero":
        return MMSCase(name, sympy.Integer(0) * x, sympy.Integer(0) * x, sympy.Integer(1),
                       ViscosityLaw("constant", (1.0,), 1.0))
    raise KeyError(f"unknown MMS case {name!r}")


@dataclass
class OrderReport:
    case: str
    h: list[float]
    u_l2: list[float]
    u_h1: list[float]
    p_l2: list[float]
    order_u_l2: float
    order_u_h1: float
    order_p_l2: float
    degenerate: bool


def _slope(h, e) -> float:
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any(e <= 1e-12):
        return math.nan
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def solve_mms(case: MMSCase, grid: Grid, method: str = "direct"):
    """Solve one manufactured case; return ``(solution, u*, P*, rho*, f)``."""
    u_fn, p_fn, r_fn = case.callables()
    f = mms_forcing(case.u, case.P, case.law, case.rho, grid)
    rho = sample(grid, r_fn)
    mu = case.law.field(rho)
    op = assemble(mu, grid, floor=case.law.floor, method=method)
    sol = solve_hstokes(op, f)
    return sol, sample(grid, u_fn, DIRICHLET_ZERO, 1e-10), PressureProfile.project(grid, p_fn(grid.x)), rho, f


def convergence_study(case: MMSCase | str, levels: list[Grid]) -> OrderReport:
    """Errors and least-squares observed orders over a sequence of doubled grids."""
    if isinstance(case, str):
        case = mms_case(case)
    if len(levels) < 3:
        raise ValueError("convergence study needs at least three levels")
    for a, b in zip(levels, levels[1:]):
        if b.Nx != 2 * a.Nx or b.Ny != 2 * a.Ny:
            raise ValueError("each level must double Nx and Ny")
    hs, eu, eh1, ep = [], [], [], []
    for grid in levels:
        sol, u_star, p_star, _, _ = solve_mms(case, grid)
        err = sol.u.values - u_star.values
        hs.append(grid.hx)
        eu.append(_l2(err, grid))
        eh1.append(_sobolev_array(err, grid, 1))
        ep.append(math.sqrt(grid.hx * float(np.sum((sol.P.values - p_star.values) ** 2))))
    degenerate = max(eu + ep) <= 1e-12
    return OrderReport(case.name, hs, eu, eh1, ep, _slope(hs, eu), _slope(hs, eh1), _slope(hs, ep), degenerate)
