"""Simulation and analysis of a reaction-diffusion system with
density-suppressed motility: u (cells), v (signal), w (nutrient)."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    HypothesisReport,
    ModelParams,
    MotilitySpec,
    ResponseSpec,
    boundedness_envelope,
    eval_motility,
    eval_motility_deriv,
    eval_response,
    eval_response_deriv,
    validate_hypotheses,
)
from .grid import (  # noqa: E402
    FieldState,
    Grid,
    integrate,
    l2_norm,
    laplacian_neumann,
    motility_laplacian,
    sup_norm,
)
from .stepping import SchemeConfig, run, solve_tridiagonal, stable_dt, step_explicit, step_imex  # noqa: E402
from .stability import (  # noqa: E402
    StabilityReport,
    admissible_modes,
    analyze,
    check_pattern_conditions,
    dispersion_at,
    instability_band,
    mk_eigen_oracle,
    ode_equilibria,
)
from .diagnostics import (  # noqa: E402
    AsymptoteReport,
    MassLedger,
    Monitor,
    classify_asymptotics,
    ledger_check,
    pattern_metrics,
)

__all__ = [
    "__version__",
    "HypothesisReport", "ModelParams", "MotilitySpec", "ResponseSpec", "boundedness_envelope",
    "eval_motility", "eval_motility_deriv", "eval_response", "eval_response_deriv", "validate_hypotheses",
    "FieldState", "Grid", "integrate", "l2_norm", "laplacian_neumann", "motility_laplacian", "sup_norm",
    "SchemeConfig", "run", "solve_tridiagonal", "stable_dt", "step_explicit", "step_imex",
    "StabilityReport", "admissible_modes", "analyze", "check_pattern_conditions", "dispersion_at",
    "instability_band", "mk_eigen_oracle", "ode_equilibria",
    "AsymptoteReport", "MassLedger", "Monitor", "classify_asymptotics", "ledger_check", "pattern_metrics",
]
