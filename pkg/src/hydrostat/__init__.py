"""Finite-difference solver and verification harness for the two-dimensional
nonhomogeneous hydrostatic (primitive) equations with density-dependent
viscosity on a periodic channel."""

from .grid import (
    DIRICHLET_ZERO,
    FREE,
    Grid,
    GridError,
    PressureProfile,
    ScalarField,
    constant,
    cumint_y,
    dx,
    dy,
    integral_domain,
    make_grid,
    sample,
    zeros,
)
from .hstokes import (
    SolverError,
    ViscosityError,
    ViscosityLaw,
    assemble,
    convergence_study,
    mms_case,
    mms_forcing,
    ptilde_fixed_point,
    regularity_check,
    solve_hstokes,
)
from .momentum import compatibility_v1, compute_initial_pressure, momentum_solve, momentum_step
from .norms import aniso_norm, blowup_monitor, gn_check, j_functional, lp_norm, phi_functional, snapshot, sobolev_norm
from .picard import (
    PicardConfig,
    contraction_report,
    march,
    mollify,
    picard_iterate,
    sigma_bound_check,
    stability_experiment,
    two_level_continuation,
)
from .transport import CFLError, TransportParams, density_growth_check, transport_solve, transport_step, vertical_velocity

__version__ = "0.1.0"

__all__ = [
    "DIRICHLET_ZERO",
    "FREE",
    "Grid",
    "GridError",
    "PressureProfile",
    "ScalarField",
    "constant",
    "cumint_y",
    "dx",
    "dy",
    "integral_domain",
    "make_grid",
    "sample",
    "zeros",
    "SolverError",
    "ViscosityError",
    "ViscosityLaw",
    "assemble",
    "convergence_study",
    "mms_case",
    "mms_forcing",
    "ptilde_fixed_point",
    "regularity_check",
    "solve_hstokes",
    "compatibility_v1",
    "compute_initial_pressure",
    "momentum_solve",
    "momentum_step",
    "aniso_norm",
    "blowup_monitor",
    "gn_check",
    "j_functional",
    "lp_norm",
    "phi_functional",
    "snapshot",
    "sobolev_norm",
    "PicardConfig",
    "contraction_report",
    "march",
    "mollify",
    "picard_iterate",
    "sigma_bound_check",
    "stability_experiment",
    "two_level_continuation",
    "CFLError",
    "TransportParams",
    "density_growth_check",
    "transport_solve",
    "transport_step",
    "vertical_velocity",
]
