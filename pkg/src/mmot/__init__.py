"""Entropic multimarginal optimal transport via greedy batched KL projections.

The solver computes the KL projection of a normalized Gibbs kernel onto the
transport polytope of m prescribed marginals by iterating closed-form block
projections, choosing at each step the marginal batch with the largest KL
violation.  Companion modules provide an independent reference solver, KKT
residuals, and numerical verification of the closed-form convergence rates
and iteration bounds.
"""

from .bregman import (
    BlockId,
    GibbsUnderflowWarning,
    block_distance,
    block_distance_from_marginal,
    gibbs_init,
    kl_divergence,
    kl_terms,
    project_block,
)
from .diagnostics import (
    ConvergenceTrace,
    RateVerdict,
    TraceRow,
    analyze_trace,
    batch_cycle_length,
    greedy_cyclic_margin,
    iteration_bound,
    normalized_cycles,
    normalized_iterations,
    theoretical_rate,
)
from .oracle import (
    KktReport,
    PotentialBoundsReport,
    additive_decomposition,
    count_candidates,
    enumerate_greedy_oracle,
    kkt_residual,
    potential_bounds_report,
    reference_solution,
)
from .problem_io import (
    ProblemInstance,
    ProblemValidationError,
    RunRecord,
    load_problem,
    read_record,
    read_trace,
    save_problem,
    write_record,
    write_trace,
)
from .solver import (
    BreakdownError,
    ProblemData,
    Solution,
    SolverConfig,
    SolverState,
    greedy_select,
    initial_state,
    solve,
    step,
    stopping_metric,
)
from .tensors import (
    broadcast_sum,
    marginal,
    materialize_plan,
    product_measure,
    rmot_objective,
)

__all__ = [
    "BlockId",
    "BreakdownError",
    "ConvergenceTrace",
    "GibbsUnderflowWarning",
    "KktReport",
    "PotentialBoundsReport",
    "ProblemData",
    "ProblemInstance",
    "ProblemValidationError",
    "RateVerdict",
    "RunRecord",
    "Solution",
    "SolverConfig",
    "SolverState",
    "TraceRow",
    "additive_decomposition",
    "analyze_trace",
    "batch_cycle_length",
    "block_distance",
    "block_distance_from_marginal",
    "broadcast_sum",
    "count_candidates",
    "enumerate_greedy_oracle",
    "gibbs_init",
    "greedy_cyclic_margin",
    "greedy_select",
    "initial_state",
    "iteration_bound",
    "kkt_residual",
    "kl_divergence",
    "kl_terms",
    "load_problem",
    "marginal",
    "materialize_plan",
    "normalized_cycles",
    "normalized_iterations",
    "potential_bounds_report",
    "product_measure",
    "project_block",
    "read_record",
    "read_trace",
    "reference_solution",
    "rmot_objective",
    "save_problem",
    "solve",
    "step",
    "stopping_metric",
    "theoretical_rate",
    "write_record",
    "write_trace",
]

__version__ = "0.1.0"
