import json

import pytest

from hydrostat.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main, monitor_exit_code
from hydrostat.io import read_csv, read_snapshot, write_snapshot
from hydrostat.norms import PhiSeries

SOLVE = """
[grid]
Nx = 16
Ny = 16
[time]
T = 0.05
dt = 0.005
[law]
kind = "affine"
coefficients = [0.5, 0.5]
floor = 0.5
[initial]
density = "stratified"
velocity = "shear"
[output]
cadence = 5
"""


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _run(tmp_path, cmd, text, out="out", extra=()):
    cfg = _write(tmp_path, text)
    code = main([cmd, "--config", str(cfg), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def test_solve_outputs(tmp_path):
    code, out = _run(tmp_path, "solve", SOLVE, extra=["--seed", "42"])
    assert code == EXIT_OK
    header, rows = read_csv(out / "norms.csv")
    assert header[-2:] == ["phi", "J"] and len(rows) == 11
    assert all(float(r[-2]) >= 1 and float(r[-1]) >= 1 for r in rows)
    assert sorted(p.name for p in out.glob("snap_*.hpe")) == ["snap_000000.hpe", "snap_000005.hpe",
                                                              "snap_000010.hpe"]
    final = read_snapshot(out / "final.hpe")
    assert final.t == pytest.approx(0.05) and set(final.fields) == {"rho", "u", "P"}
    run = json.loads((out / "run.json").read_text())
    assert run["seed"] == 42 and run["steps"] == 10 and run["failure"] is None and "breach" not in run
    _, steps = read_csv(out / "steps.csv")
    assert len(steps) == 10 and max(float(r[5]) for r in steps) <= 1e-9


def test_solve_is_byte_deterministic(tmp_path):
    _run(tmp_path, "solve", SOLVE, out="a")
    _run(tmp_path, "solve", SOLVE, out="b")
    for name in ("norms.csv", "steps.csv", "final.hpe"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


FORCED = SOLVE.replace('velocity = "shear"', 'velocity = "uniform"') + "[forcing]\npreset = \"mms-steady\"\n"


def test_breach_exit_code_and_index(tmp_path):
    # started from rest with forcing, Phi rises; read it unmonitored, then set a threshold
    _, out = _run(tmp_path, "solve", FORCED, out="free")
    header, rows = read_csv(out / "norms.csv")
    phi = [float(r[header.index("phi")]) for r in rows]
    k = 6
    threshold = 0.5 * (phi[k] + max(phi[:k])) if phi[k] > max(phi[:k]) else None
    assert threshold is not None, "fixture Phi must rise over the run"
    expected = next(i for i, p in enumerate(phi) if p >= threshold)
    code, out = _run(tmp_path, "solve", FORCED + f"[monitor]\nthreshold = {threshold!r}\n", out="hit")
    assert code == EXIT_BLOWUP
    run = json.loads((out / "run.json").read_text())
    assert run["breach"]["index"] == expected
    _, rows = read_csv(out / "norms.csv")
    assert len(rows) == expected + 1  # partial output up to the breach


def test_monitor_exit_code_synthetic():
    s = PhiSeries()
    for i, v in enumerate([1.0, 5.0, 12.0, 30.0]):
        s.append(float(i), v, v)
    code, breach = monitor_exit_code(s, 10.0)
    assert code == EXIT_BLOWUP and breach.index == 2
    assert monitor_exit_code(s, 100.0) == (EXIT_OK, None)


@pytest.mark.parametrize("argv_tail,text", [
    (["--config", "/nonexistent/cfg.toml"], None),
    (None, "[grid]\nNx = 16\n[params]\nlamda = 1e-3\n"),
    (None, "[grid]\nNx = 16\n[params]\nlambda = -1\n"),
    (None, "[grid]\nNx = 16\nNy = 16\n[law]\nkind = \"affine\"\ncoefficients = [-1.0, 1.0]\nfloor = 0.5\n"
           "[time]\nT = 0.01\ndt = 0.005\n"),
])
def test_config_exit_codes(tmp_path, argv_tail, text):
    if argv_tail is None:
        argv_tail = ["--config", str(_write(tmp_path, text))]
    assert main(["solve", *argv_tail, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_argparse_errors_are_config_errors(tmp_path):
    cfg = _write(tmp_path, SOLVE)
    assert main(["frobnicate", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["solve"]) == EXIT_CONFIG
    assert main(["solve", "--config", str(cfg), "--seed", "-3"]) == EXIT_CONFIG


def test_cfl_violation_is_solver_failure(tmp_path):
    text = SOLVE.replace("dt = 0.005", "dt = 0.05").replace("T = 0.05", "T = 0.1")
    code, out = _run(tmp_path, "solve", text)
    assert code == EXIT_SOLVER
    assert json.loads((out / "run.json").read_text())["failure"]


def test_picard_nonconvergence_exit(tmp_path):
    text = SOLVE + "[solver]\nmax_iters = 2\ntol = 1e-14\n"
    code, out = _run(tmp_path, "picard-diagnose", text)
    assert code == EXIT_SOLVER
    header, rows = read_csv(out / "picard.csv")
    assert header[0] == "k" and len(rows) == 2
    assert json.loads((out / "run.json").read_text())["converged"] is False


def test_picard_converged(tmp_path):
    code, out = _run(tmp_path, "picard-diagnose", SOLVE)
    assert code == EXIT_OK
    run = json.loads((out / "run.json").read_text())
    assert run["converged"] and run["verdict"] in ("geometric", "super-geometric")
    header, rows = read_csv(out / "sigma.csv")
    assert header == ["k", "c_sigma", "degenerate"] and len(rows) == run["iterations"] - 1


def test_stokes_and_mms(tmp_path):
    text = "[grid]\nNx = 16\nNy = 16\n[stokes]\ncase = \"variable-mu\"\nlevels = [8, 16, 32]\n"
    code, out = _run(tmp_path, "stokes", text, out="s")
    assert code == EXIT_OK
    header, rows = read_csv(out / "stokes_report.csv")
    row = dict(zip(header, rows[0]))
    assert float(row["constraint_residual"]) <= 1e-9 and float(row["w_top_max"]) <= 1e-8
    assert row["ptilde_converged"] == "1" and float(row["ptilde_u_l2_diff"]) <= 1e-6
    code, out = _run(tmp_path, "mms", text, out="m")
    assert code == EXIT_OK
    _, rows = read_csv(out / "mms_orders.csv")
    assert float(rows[0][1]) > 1.8


def test_transport_command(tmp_path):
    text = ("[grid]\nNx = 32\nNy = 16\n[time]\nT = 0.2\n[params]\ndelta = 0.1\n"
            "[initial]\ndensity = \"vacuum-band\"\n[transport]\nvelocity = \"shear\"\nspeed = 0.5\n")
    code, out = _run(tmp_path, "transport", text)
    assert code == EXIT_OK
    header, rows = read_csv(out / "transport.csv")
    assert header == ["t", "min_rho", "max_rho", "mass", "linf_grad_rho"]
    assert min(float(r[1]) for r in rows) >= 0.1 - 1e-12


def test_sweep_command(tmp_path):
    text = (SOLVE.replace("stratified", "vacuum-band")
            + "[sweep]\ndeltas = [0.2, 0.1]\nlambdas = [1e-3]\n")
    code, out = _run(tmp_path, "sweep", text)
    assert code == EXIT_OK
    header, rows = read_csv(out / "sweep.csv")
    assert len(rows) == 2 and rows[0][header.index("diff_to_previous")] == "nan"


def test_snapshot_initial_data(tmp_path):
    from hydrostat.grid import make_grid
    from hydrostat.presets import preset_catalog

    g = make_grid(1.0, 16, 16)
    write_snapshot(tmp_path / "init.hpe", {"rho": preset_catalog("stratified").density(g),
                                           "u": preset_catalog("shear").velocity(g)}, 0.0)
    text = SOLVE.replace('density = "stratified"\nvelocity = "shear"',
                         f'snapshot = "{tmp_path / "init.hpe"}"')
    code, out = _run(tmp_path, "solve", text, out="snap")
    ref_code, ref = _run(tmp_path, "solve", SOLVE, out="ref")
    assert code == ref_code == EXIT_OK
    assert (out / "norms.csv").read_bytes() == (ref / "norms.csv").read_bytes()
    bad = SOLVE.replace('density = "stratified"\nvelocity = "shear"', 'snapshot = "/nonexistent.hpe"')
    assert _run(tmp_path, "solve", bad, out="bad")[0] == EXIT_CONFIG
