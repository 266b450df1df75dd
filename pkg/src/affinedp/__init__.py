"""Affine monotonic dynamic programming: models, classification, solvers and oracles."""

from .classify import (
    AuditResult,
    AuditStatus,
    Classification,
    Verdict,
    check_infinite_cost_condition,
    classify_policy,
    find_contractive_policy,
    spectral_radius,
)
from .core import (
    ModelSpec,
    Policy,
    PolicyMatrices,
    apply_bellman_map,
    apply_policy_map,
    assemble_policy,
    bellman_residual,
    validate_model,
)
from .expssp import (
    TerminatingChainSpec,
    build_deterministic_sp,
    build_exponential,
    build_multiplicative,
    build_twin_cycles,
    enumerate_cost,
    exit_or_stay_model,
    mc_cost,
)
from .lp import LinearProgram, LPStatus, build_lp, simplex_solve, solve_hat_j_lp
from .policy_eval import (
    LimsupEstimate,
    estimate_limsup_cost,
    evaluate_contractive,
    finite_horizon_compose,
)
from .problem import ParseError, ProblemFile, ValidationError, parse_problem, write_problem
from .solvers import (
    PerturbationSchedule,
    SolveReport,
    Status,
    WeightedNorm,
    build_weighted_norm,
    check_optimality,
    policy_iterate,
    solve_hat_j_perturbation,
    solve_perturbed,
    value_iterate,
    vi_error_bound,
)

__version__ = "0.1.0"
