"""Command line entry point ``hydrostat``.

    hydrostat solve|stokes|transport|picard-diagnose|sweep|mms --config PATH [--out DIR] [--seed U64]

Exit codes: 0 success, 2 configuration error, 3 solver failure or
non-convergence, 4 blow-up threshold reached (partial outputs are written).
All numerical work is deterministic; ``--seed`` is only recorded in the run
header because no subcommand draws random numbers.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, resolve_dt
from .grid import DIRICHLET_ZERO, Grid, ScalarField
from .hstokes import SolverError, ViscosityError, convergence_study, mms_case, ptilde_fixed_point, solve_mms
from .io import SnapshotError, emit_csv, emit_norm_csv, read_snapshot, write_snapshot
from .norms import NormSnapshot, PhiSeries, _l2, blowup_monitor
from .picard import (
    IterateDiagnostics,
    PicardConfig,
    contraction_report,
    march,
    mollify,
    picard_iterate,
    sigma_bound_check,
    two_level_continuation,
)
from .presets import preset_catalog, separable_forcing, time_profile, transport_velocity
from .transport import CFLError, TransportParams, TransportTrajectory, transport_solve, vertical_velocity_array

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4

SUBCOMMANDS = ("solve", "stokes", "transport", "picard-diagnose", "sweep", "mms")


# -- data assembly --------------------------------------------------------------------

def _snapshot_field(path: str, name: str, grid: Grid, key: str) -> ScalarField:
    try:
        snap = read_snapshot(path)
    except (OSError, SnapshotError) as exc:
        raise ConfigError(key, f"cannot read snapshot {path!r}: {exc}") from None
    if (snap.grid.Nx, snap.grid.Ny, snap.grid.L) != (grid.Nx, grid.Ny, grid.L):
        raise ConfigError(key, "snapshot grid does not match [grid]")
    if name not in snap.fields:
        raise ConfigError(key, f"snapshot {path!r} has no field {name!r}")
    return snap.fields[name]


def initial_data(cfg: RunConfig, grid: Grid, *, raw: bool = False):
    """``(rho0, u0)``; with ``params.delta > 0`` the density is mollified unless ``raw``."""
    if cfg.initial.snapshot:
        rho0 = _snapshot_field(cfg.initial.snapshot, "rho", grid, "initial.snapshot")
        u0 = _snapshot_field(cfg.initial.snapshot, "u", grid, "initial.snapshot")
        if u0.bc_y != DIRICHLET_ZERO:
            u0 = ScalarField(grid, u0.values, DIRICHLET_ZERO)
    else:
        rho0 = preset_catalog(cfg.initial.density).density(grid)
        u0 = preset_catalog(cfg.initial.velocity).velocity(grid)
    delta = float(cfg.params.delta)
    if delta > 0 and not raw:
        rho0 = mollify(rho0, delta, cfg.params.smoothing_sweeps)
    return rho0, u0


def forcing(cfg: RunConfig, grid: Grid):
    """Forcing as a callable of time, or the scalar 0 when absent."""
    fc = cfg.forcing
    if fc.snapshot:
        F = _snapshot_field(fc.snapshot, "f", grid, "forcing.snapshot")
    elif fc.preset != "none":
        F = preset_catalog(fc.preset).force(grid)
    else:
        return 0.0
    return separable_forcing(F, time_profile(fc.time, ramp=fc.ramp, period=fc.period), fc.amplitude)


def picard_config(cfg: RunConfig, dt: float, *, lam=None, delta=None) -> PicardConfig:
    p = cfg.params
    return PicardConfig(
        T=float(cfg.time.T), dt=dt, tol=float(cfg.solver.tol), max_iters=cfg.solver.max_iters,
        lam=float(p["lambda"] if lam is None else lam), delta=float(p.delta if delta is None else delta),
        law=cfg.viscosity_law(), smoothing_sweeps=p.smoothing_sweeps, face=cfg.law.face,
        cfl_guard=cfg.solver.cfl_guard, eps_rho=float(p.eps_rho), method=cfg.solver.method,
    )


def _write_json(path: Path, data: dict) -> None:
    def plain(o):
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"cannot serialize {type(o).__name__}")

    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=plain) + "\n", encoding="utf-8")


def monitor_exit_code(series: PhiSeries, threshold: float):
    """``(exit code, breach or None)`` for a Phi series."""
    breach = blowup_monitor(series, threshold)
    return (EXIT_BLOWUP if breach is not None else EXIT_OK), breach


# -- subcommands ----------------------------------------------------------------------

NORM_COLUMNS = NormSnapshot.columns() + ["phi", "J"]
STEP_COLUMNS = ["t", "energy_lhs", "energy_rhs", "energy_gap", "sqrt_rho_ut_l2", "constraint_residual"]


def run_solve(cfg: RunConfig, out: Path, header: dict) -> int:
    grid = cfg.make_grid()
    rho0, u0 = initial_data(cfg, grid)
    f = forcing(cfg, grid)
    dt = resolve_dt(cfg, u0.values, grid)
    pc = picard_config(cfg, dt)
    cadence = cfg.output.cadence

    def on_step(n, traj, rep):
        if cadence and n % cadence == 0:
            write_snapshot(out / f"snap_{n:06d}.hpe", {"rho": traj.rho[n], "u": traj.u[n], "P": traj.P[n]},
                           traj.times[n])

    failure = None
    rec = None
    try:
        rec = march(rho0, u0, f, pc, threshold=float(cfg.monitor.threshold), on_step=on_step)
    except (CFLError, SolverError) as exc:
        failure = str(exc)
    if rec is not None:
        traj = rec.trajectory
        write_snapshot(out / f"snap_{0:06d}.hpe", {"rho": traj.rho[0], "u": traj.u[0], "P": traj.P[0]}, 0.0)
        last = len(traj.times) - 1
        write_snapshot(out / "final.hpe", {"rho": traj.rho[last], "u": traj.u[last], "P": traj.P[last]},
                       traj.times[last])
        rows = [s.row() + [p, j] for s, p, j in zip(rec.snapshots, rec.series.phi, rec.series.j)]
        emit_csv(out / "norms.csv", NORM_COLUMNS, rows)
        emit_csv(out / "steps.csv", STEP_COLUMNS,
                 ([r.t, r.energy_lhs, r.energy_rhs, r.energy_gap, r.sqrt_rho_ut_l2, r.constraint_residual]
                  for r in rec.reports))
        header.update(dt=dt, steps=last, v1_l2=rec.compat.v1_l2, compat_residual=rec.compat.residual)
    header["failure"] = failure
    code = EXIT_OK if failure is None else EXIT_SOLVER
    if rec is not None and rec.breach is not None:
        b = rec.breach
        header["breach"] = {"index": b.index, "t": b.t, "phi": b.phi, "threshold": b.threshold}
        code = EXIT_BLOWUP
    _write_json(out / "run.json", header)
    return code


def run_stokes(cfg: RunConfig, out: Path, header: dict) -> int:
    grid = cfg.make_grid()
    case = mms_case(cfg.stokes.case)
    sol, u_star, p_star, rho, f = solve_mms(case, grid, cfg.solver.method)
    err_u = _l2(sol.u.values - u_star.values, grid)
    err_p = float(np.sqrt(grid.hx * np.sum((sol.P.values - p_star.values) ** 2)))
    w_top = float(np.max(np.abs(vertical_velocity_array(sol.u.values, grid.hx, grid.hy)[:, -1])))
    # cross-check through the constant-viscosity defect-correction path
    alt = ptilde_fixed_point(case.law.field(rho), f, float(cfg.solver.ptilde_tol), cfg.solver.max_iters,
                             face=cfg.law.face)
    alt_diff = _l2(alt.u.values - sol.u.values, grid)
    write_snapshot(out / "stokes.hpe", {"u": sol.u, "P": sol.P, "rho": rho, "f": f}, 0.0)
    emit_csv(out / "stokes_report.csv",
             ["case", "Nx", "Ny", "u_l2_error", "P_l2_error", "constraint_residual", "linsolve_residual", "w_top_max",
              "ptilde_converged", "ptilde_iterations", "ptilde_u_l2_diff"],
             [[case.name, grid.Nx, grid.Ny, err_u, err_p, sol.constraint_residual, sol.linsolve_residual, w_top,
               alt.converged, alt.iterations, alt_diff]])
    _write_json(out / "run.json", header)
    return EXIT_OK


def run_transport(cfg: RunConfig, out: Path, header: dict) -> int:
    grid = cfg.make_grid()
    rho0, _ = initial_data(cfg, grid)
    u, w = transport_velocity(cfg.transport.velocity, grid, cfg.transport.speed)
    dt = resolve_dt(cfg, u, grid)
    params = TransportParams(float(cfg.params["lambda"]), dt, cfg.solver.cfl_guard)
    traj = TransportTrajectory()
    failure = None
    try:
        traj = transport_solve(rho0, lambda n, t: (u, w), params, float(cfg.time.T))
    except CFLError as exc:
        failure = str(exc)
    emit_csv(out / "transport.csv", TransportTrajectory.COLUMNS, traj.rows())
    if traj.fields:
        write_snapshot(out / "final.hpe", {"rho": traj.fields[-1]}, traj.times[-1])
    header.update(dt=dt, failure=failure)
    _write_json(out / "run.json", header)
    return EXIT_OK if failure is None else EXIT_SOLVER


def run_picard(cfg: RunConfig, out: Path, header: dict) -> int:
    grid = cfg.make_grid()
    rho0, u0 = initial_data(cfg, grid)
    f = forcing(cfg, grid)
    dt = resolve_dt(cfg, u0.values, grid)
    try:
        res = picard_iterate(rho0, u0, f, picard_config(cfg, dt))
    except (CFLError, SolverError) as exc:
        header.update(dt=dt, failure=str(exc))
        _write_json(out / "run.json", header)
        return EXIT_SOLVER
    emit_norm_csv(out / "picard.csv", res.diagnostics, IterateDiagnostics)
    summary = {"converged": res.converged, "iterations": res.iterations, "dt": dt}
    if res.iterations >= 4:
        cr = contraction_report(res.diagnostics)
        summary.update(verdict=cr.verdict, r=cr.r, geometric=cr.geometric, fit_C=cr.fit_C, fit_T0=cr.fit_T0,
                       fit_residual=cr.fit_residual)
    sr = sigma_bound_check(res.diagnostics)
    emit_csv(out / "sigma.csv", ["k", "c_sigma", "degenerate"], zip(sr.k, sr.c_sigma, sr.degenerate))
    header.update(summary)
    _write_json(out / "run.json", header)
    return EXIT_OK if res.converged else EXIT_SOLVER


def run_sweep(cfg: RunConfig, out: Path, header: dict) -> int:
    grid = cfg.make_grid()
    raw, u0 = initial_data(cfg, grid, raw=True)
    f = forcing(cfg, grid)
    dt = resolve_dt(cfg, u0.values, grid)
    try:
        table = two_level_continuation(raw, u0, f, picard_config(cfg, dt), cfg.sweep.deltas, cfg.sweep.lambdas)
    except (CFLError, SolverError) as exc:
        header.update(dt=dt, failure=str(exc))
        _write_json(out / "run.json", header)
        return EXIT_SOLVER
    emit_csv(out / "sweep.csv", ["delta", "lambda", "converged", "iterations", "diff_to_previous", "phi_max"],
             ([lv.delta, lv.lam, lv.converged, lv.iterations, lv.diff_to_previous, max(lv.phi)] for lv in table))
    header.update(dt=dt)
    _write_json(out / "run.json", header)
    return EXIT_OK if all(lv.converged for lv in table) else EXIT_SOLVER


def run_mms(cfg: RunConfig, out: Path, header: dict) -> int:
    from .grid import make_grid

    levels = [make_grid(1.0, n, n) for n in cfg.stokes.levels]
    rep = convergence_study(cfg.stokes.case, levels)
    emit_csv(out / "mms.csv", ["N", "h", "u_l2_error", "u_h1_error", "P_l2_error"],
             zip(cfg.stokes.levels, rep.h, rep.u_l2, rep.u_h1, rep.p_l2))
    emit_csv(out / "mms_orders.csv", ["case", "order_u_l2", "order_u_h1", "order_P_l2", "degenerate"],
             [[rep.case, rep.order_u_l2, rep.order_u_h1, rep.order_p_l2, rep.degenerate]])
    _write_json(out / "run.json", header)
    return EXIT_OK


_RUNNERS = {
    "solve": run_solve,
    "stokes": run_stokes,
    "transport": run_transport,
    "picard-diagnose": run_picard,
    "sweep": run_sweep,
    "mms": run_mms,
}


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hydrostat", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=_seed, default=0, help="recorded in run.json; no randomness is used")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"hydrostat: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"hydrostat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out if args.out is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"command": args.command, "seed": args.seed, "config": str(args.config)}
    try:
        code = _RUNNERS[args.command](cfg, out, header)
    except (ConfigError, ViscosityError) as exc:
        print(f"hydrostat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, CFLError) as exc:
        print(f"hydrostat: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if code == EXIT_BLOWUP:
        print("hydrostat: blow-up threshold reached; partial outputs written", file=sys.stderr)
    elif code == EXIT_SOLVER:
        print("hydrostat: solver did not converge; see run.json", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
