"""Run configuration: TOML text to a validated, fully defaulted :class:`RunConfig`.

Grammar: TOML sections with ``key = value`` pairs. Every section and key is
optional except ``[grid]``; unknown sections or keys are errors, and every
error message names the offending ``section.key``. Defaults::

    [grid]      L = 1.0, Nx = 32, Ny = 32
    [time]      T = 0.25, dt = CFL-derived (see resolve_dt)
    [params]    lambda = 1e-3, delta = 0.0, eps_rho = 1e-10, smoothing_sweeps = 3
    [law]       kind = "constant", coefficients = [1.0], floor = 1.0, table = [], face = "arithmetic"
    [initial]   density = "uniform", velocity = "uniform", snapshot = ""
    [forcing]   preset = "none", time = "constant", amplitude = 1.0, ramp = 1.0, period = 1.0, snapshot = ""
    [output]    dir = "out", cadence = 0
    [solver]    tol = 1e-8, max_iters = 30, method = "direct", cfl_guard = true, ptilde_tol = 1e-10
    [monitor]   threshold = 1e6
    [stokes]    case = "constant-mu", levels = [16, 32, 64]
    [transport] velocity = "uniform-x", speed = 0.3
    [sweep]     deltas = [0.1, 0.05, 0.025], lambdas = [1e-3]

``cadence = 0`` writes only the initial and final snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .grid import Grid, make_grid
from .hstokes import ViscosityError, ViscosityLaw
from .presets import TIME_PROFILES, TRANSPORT_VELOCITIES, preset_catalog


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted name at fault."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# section -> key -> (python type check, type name, default, constraint, constraint text)
_SCHEMA: dict[str, dict[str, tuple]] = {
    "grid": {
        "L": (_num, "number", 1.0, _pos, "must be positive"),
        "Nx": (_int, "integer", 32, lambda v: v >= 8 and v % 2 == 0, "must be an even integer >= 8"),
        "Ny": (_int, "integer", 32, lambda v: v >= 8, "must be an integer >= 8"),
    },
    "time": {
        "T": (_num, "number", 0.25, _pos, "must be positive"),
        "dt": (_num, "number", None, _pos, "must be positive"),
    },
    "params": {
        "lambda": (_num, "number", 1e-3, _nonneg, "must be non-negative"),
        "delta": (_num, "number", 0.0, _nonneg, "must be non-negative"),
        "eps_rho": (_num, "number", 1e-10, _pos, "must be positive"),
        "smoothing_sweeps": (_int, "integer", 3, _nonneg, "must be non-negative"),
    },
    "law": {
        "kind": (lambda v: isinstance(v, str), "string", "constant",
                 lambda v: v in ("constant", "affine", "quadratic", "table"),
                 "must be one of constant, affine, quadratic, table"),
        "coefficients": (lambda v: isinstance(v, list) and all(_num(c) for c in v), "list of numbers",
                         [1.0], lambda v: 1 <= len(v) <= 3, "must have 1 to 3 entries"),
        "floor": (_num, "number", 1.0, _pos, "must be positive"),
        "table": (lambda v: isinstance(v, list) and all(isinstance(p, list) and len(p) == 2
                                                        and all(_num(c) for c in p) for p in v),
                  "list of [rho, mu] pairs", [], lambda v: True, ""),
        "face": (lambda v: isinstance(v, str), "string", "arithmetic",
                 lambda v: v in ("arithmetic", "harmonic"), "must be arithmetic or harmonic"),
    },
    "initial": {
        "density": (lambda v: isinstance(v, str), "string", "uniform", None, ""),
        "velocity": (lambda v: isinstance(v, str), "string", "uniform", None, ""),
        "snapshot": (lambda v: isinstance(v, str), "string", "", None, ""),
    },
    "forcing": {
        "preset": (lambda v: isinstance(v, str), "string", "none", None, ""),
        "time": (lambda v: isinstance(v, str), "string", "constant", lambda v: v in TIME_PROFILES,
                 f"must be one of {', '.join(TIME_PROFILES)}"),
        "amplitude": (_num, "number", 1.0, lambda v: math.isfinite(v), "must be finite"),
        "ramp": (_num, "number", 1.0, _pos, "must be positive"),
        "period": (_num, "number", 1.0, _pos, "must be positive"),
        "snapshot": (lambda v: isinstance(v, str), "string", "", None, ""),
    },
    "output": {
        "dir": (lambda v: isinstance(v, str), "string", "out", lambda v: v != "", "must not be empty"),
        "cadence": (_int, "integer", 0, _nonneg, "must be non-negative"),
    },
    "solver": {
        "tol": (_num, "number", 1e-8, _pos, "must be positive"),
        "max_iters": (_int, "integer", 30, lambda v: v >= 2, "must be at least 2"),
        "method": (lambda v: isinstance(v, str), "string", "direct", lambda v: v in ("direct", "iterative"),
                   "must be direct or iterative"),
        "cfl_guard": (lambda v: isinstance(v, bool), "boolean", True, None, ""),
        "ptilde_tol": (_num, "number", 1e-10, _pos, "must be positive"),
    },
    "monitor": {
        "threshold": (_num, "number", 1e6, lambda v: v > 1, "must exceed 1"),
    },
    "stokes": {
        "case": (lambda v: isinstance(v, str), "string", "constant-mu",
                 lambda v: v in ("constant-mu", "variable-mu", "zero"), "must be constant-mu, variable-mu or zero"),
        "levels": (lambda v: isinstance(v, list) and all(_int(c) for c in v), "list of integers", [16, 32, 64],
                   lambda v: len(v) >= 3 and all(b == 2 * a for a, b in zip(v, v[1:])) and v[0] >= 8 and v[0] % 2 == 0,
                   "must list at least three grid sizes, each double the previous, starting at an even size >= 8"),
    },
    "transport": {
        "velocity": (lambda v: isinstance(v, str), "string", "uniform-x", lambda v: v in TRANSPORT_VELOCITIES,
                     f"must be one of {', '.join(TRANSPORT_VELOCITIES)}"),
        "speed": (_num, "number", 0.3, lambda v: math.isfinite(v), "must be finite"),
    },
    "sweep": {
        "deltas": (lambda v: isinstance(v, list) and all(_num(c) for c in v), "list of numbers", [0.1, 0.05, 0.025],
                   lambda v: len(v) >= 1 and all(c >= 0 for c in v) and all(b <= a for a, b in zip(v, v[1:])),
                   "must be a non-empty, non-increasing list of non-negative numbers"),
        "lambdas": (lambda v: isinstance(v, list) and all(_num(c) for c in v), "list of numbers", [1e-3],
                    lambda v: len(v) >= 1 and all(c >= 0 for c in v) and all(b <= a for a, b in zip(v, v[1:])),
                    "must be a non-empty, non-increasing list of non-negative numbers"),
    },
}


@dataclass(frozen=True)
class Section:
    name: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None


@dataclass(frozen=True)
class RunConfig:
    grid: Section
    time: Section
    params: Section
    law: Section
    initial: Section
    forcing: Section
    output: Section
    solver: Section
    monitor: Section
    stokes: Section
    transport: Section
    sweep: Section

    def make_grid(self) -> Grid:
        return make_grid(float(self.grid.L), self.grid.Nx, self.grid.Ny)

    def viscosity_law(self) -> ViscosityLaw:
        law = self.law
        try:
            return ViscosityLaw(law.kind, tuple(float(c) for c in law.coefficients), float(law.floor),
                                tuple(tuple(float(c) for c in p) for p in law.table))
        except ViscosityError as exc:
            raise ConfigError("law", str(exc)) from None

    def get(self, dotted: str):
        section, key = dotted.split(".", 1)
        return getattr(self, section)[key]

    def with_value(self, dotted: str, value) -> "RunConfig":
        """Copy with one key replaced and re-validated."""
        section, key = dotted.split(".", 1)
        data = {f.name: dict(getattr(self, f.name).values) for f in fields(self)}
        data[section][key] = value
        return from_dict(data)


def _check(section: str, key: str, value: Any):
    spec = _SCHEMA[section][key]
    typecheck, tname, _, constraint, text = spec
    name = f"{section}.{key}"
    if not typecheck(value):
        raise ConfigError(name, f"expected {tname}, got {type(value).__name__} {value!r}")
    if _num(value) and not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    if constraint is not None and not constraint(value):
        raise ConfigError(name, f"{text} (got {value!r})")
    if _int(value) and tname == "number":
        value = float(value)
    return value


def from_dict(data: dict) -> RunConfig:
    for section in data:
        if section not in _SCHEMA:
            raise ConfigError(section, f"unknown section [{section}]")
        if not isinstance(data[section], dict):
            raise ConfigError(section, "expected a section table")
    if "grid" not in data:
        raise ConfigError("grid", "missing required section [grid]")
    built = {}
    for section, keys in _SCHEMA.items():
        given = data.get(section, {})
        for key in given:
            if key not in keys:
                raise ConfigError(f"{section}.{key}", "unknown key")
        values = {}
        for key, spec in keys.items():
            if key in given and given[key] is not None:
                values[key] = _check(section, key, given[key])
            else:
                values[key] = spec[2]
        built[section] = Section(section, values)
    cfg = RunConfig(**built)
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: RunConfig):
    for key in ("density", "velocity"):
        pid = cfg.initial[key]
        if cfg.initial.snapshot and pid == "uniform":
            continue
        try:
            p = preset_catalog(pid)
        except KeyError:
            raise ConfigError(f"initial.{key}", f"unknown preset {pid!r}") from None
        if (p.rho0 if key == "density" else p.u0) is None:
            raise ConfigError(f"initial.{key}", f"preset {pid!r} does not define a {key}")
    if cfg.forcing.preset != "none":
        try:
            p = preset_catalog(cfg.forcing.preset)
        except KeyError:
            raise ConfigError("forcing.preset", f"unknown preset {cfg.forcing.preset!r}") from None
        if p.forcing is None:
            raise ConfigError("forcing.preset", f"preset {cfg.forcing.preset!r} does not define a forcing")
    if cfg.forcing.preset != "none" and cfg.forcing.snapshot:
        raise ConfigError("forcing.snapshot", "give either forcing.preset or forcing.snapshot, not both")
    kind = cfg.law.kind
    need = {"constant": 1, "affine": 2, "quadratic": 3}.get(kind)
    if need is not None and len(cfg.law.coefficients) != need:
        raise ConfigError("law.coefficients", f"{kind} law needs {need} coefficients")
    if kind == "table" and len(cfg.law.table) < 4:
        raise ConfigError("law.table", "table law needs at least four [rho, mu] pairs")
    cfg.viscosity_law()
    dt = cfg.time.dt
    if dt is not None and dt > cfg.time.T:
        raise ConfigError("time.dt", "must not exceed time.T")


def parse_config(text: str) -> RunConfig:
    """Parse and validate TOML text."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<syntax>", str(exc)) from None
    return from_dict(data)


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError("<file>", f"not UTF-8: {exc}") from None
    return parse_config(text)


CFL_SAFETY = 0.5


def resolve_dt(cfg: RunConfig, u0: np.ndarray, grid: Grid) -> float:
    """Configured ``dt``, or half the largest step the initial velocity allows.

    The step bound combines the transport restriction (advection plus explicit
    x-diffusion) with the explicit momentum advection; without any velocity
    or diffusion it falls back to ``T / 10``.
    """
    if cfg.time.dt is not None:
        return float(cfg.time.dt)
    from .transport import vertical_velocity_array

    w = vertical_velocity_array(u0, grid.hx, grid.hy)
    rate = (float(np.max(np.abs(u0))) / grid.hx + float(np.max(np.abs(w))) / grid.hy
            + 2.0 * float(cfg.params["lambda"]) / grid.hx ** 2)
    T = float(cfg.time.T)
    if rate == 0.0:
        return T / 10.0
    return min(T / 10.0, CFL_SAFETY / rate)
