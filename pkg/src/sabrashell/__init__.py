"""Truncated sabra shell-model turbulence: simulation, adjoint-based optimal
control, and constraint-preserving feedback control."""

from ._kernels import backend_name
from .adjoint import (
    CostSpec,
    compute_gradient,
    duality_residual,
    evaluate_cost,
    grid_inner,
    grid_norm,
    solve_adjoint,
    solve_tangent,
)
from .constraints import (
    ClosedLoopReport,
    ConstraintSet,
    InvarianceReport,
    ModeMask,
    PenaltyConfig,
    distance,
    enstrophy_feedback,
    invariance_report,
    penalty_feedback,
    project,
    resolvent,
    simulate_closed_loop,
)
from .integrate import (
    SCHEMES,
    BlowUpError,
    ForcingSpec,
    TimeGrid,
    Trajectory,
    diagnostics,
    simulate,
    zero_control,
)
from .model import (
    NormSpec,
    ShellParams,
    apply_laplacian_power,
    as_state,
    energy_norm,
    enstrophy_norm,
    helicity_norm,
    random_state,
    sobolev_norm,
    wavenumbers,
)
from .operators import (
    bilinear,
    bound_constants,
    linearize,
    linearize_adjoint,
    nonlinear,
    trilinear,
)
from .optimal import OptimizationReport, OptimizeConfig, optimality_residual, optimize

__version__ = "0.1.0"
