"""Numerical laboratory for convex cone geometry.

Thin re-export of the compiled module: cone parsing and projection, the
shared-ray detector, the conic-program solver, and the reproducible
Monte Carlo sweep harness.
"""

from ._conelab import (
    Cone,
    detect_intersection,
    logistic_mle_exists,
    moreau,
    p_inf,
    parse_cone,
    q_inf,
    rng_id,
    run_phase,
    solve_cp,
    stat_dim_mc,
    version,
    width_mc,
)

__version__ = version()

__all__ = [
    "Cone",
    "detect_intersection",
    "logistic_mle_exists",
    "moreau",
    "p_inf",
    "parse_cone",
    "q_inf",
    "rng_id",
    "run_phase",
    "solve_cp",
    "stat_dim_mc",
    "version",
    "width_mc",
    "__version__",
]
