"""Globalized limited-memory BFGS / Barzilai-Borwein solver.

A limited-memory quasi-Newton method over a pluggable inner-product
space, with per-iteration cautious filtering of the stored curvature
pairs, four line searches, dense operator oracles for auditing, and
convergence-rate diagnostics.
"""

from .diagnostics import (
    ContractionReport,
    RateConstants,
    RateReport,
    error_sequences,
    linear_rate_check,
    lstep_qlinear,
    neighborhood_entry,
    q_factors,
)
from .direction import (
    BoundReport,
    DenseOperator,
    cautious_bound_report,
    check_bounds,
    dense_hessian,
    dense_hessian_inverse,
    two_loop,
)
from .linesearch import (
    Certificate,
    LineSearchError,
    LineSearchOutcome,
    LineSearchParams,
    armijo_backtrack,
    gll_nonmonotone,
    more_thuente,
    wolfe_weak,
)
from .problems import (
    NewtonError,
    OcpControlProblem,
    OcpGrid,
    PiecewiseQuadratic,
    Problem,
    Rosenbrock,
    fd_gradient_check,
    laplacian_5pt,
    ocp_adjoint_solve,
    ocp_eval,
    ocp_state_solve,
    piecewise_quadratic,
    rosenbrock,
)
from .secant_store import (
    CautiousParams,
    SecantPair,
    SecantStore,
    bb_scalars,
    cautious_threshold,
    choose_seed_scaling,
    curvature_quality,
)
from .solver import (
    IterationRecord,
    SolveReport,
    SolverConfig,
    SolverState,
    compare_traces,
    minimize,
)
from .space import Space, euclidean, make_grid_space

__all__ = [
    "BoundReport",
    "Certificate",
    "CautiousParams",
    "ContractionReport",
    "DenseOperator",
    "IterationRecord",
    "LineSearchError",
    "LineSearchOutcome",
    "LineSearchParams",
    "NewtonError",
    "OcpControlProblem",
    "OcpGrid",
    "PiecewiseQuadratic",
    "Problem",
    "RateConstants",
    "RateReport",
    "Rosenbrock",
    "SecantPair",
    "SecantStore",
    "SolveReport",
    "SolverConfig",
    "SolverState",
    "Space",
    "armijo_backtrack",
    "bb_scalars",
    "cautious_bound_report",
    "cautious_threshold",
    "check_bounds",
    "choose_seed_scaling",
    "compare_traces",
    "curvature_quality",
    "dense_hessian",
    "dense_hessian_inverse",
    "error_sequences",
    "euclidean",
    "fd_gradient_check",
    "gll_nonmonotone",
    "laplacian_5pt",
    "linear_rate_check",
    "lstep_qlinear",
    "make_grid_space",
    "minimize",
    "more_thuente",
    "neighborhood_entry",
    "ocp_adjoint_solve",
    "ocp_eval",
    "ocp_state_solve",
    "piecewise_quadratic",
    "q_factors",
    "rosenbrock",
    "two_loop",
    "wolfe_weak",
]
