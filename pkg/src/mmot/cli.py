"""Command-line front end: solve, compare, verify, plot-data.

Exit codes: 0 on success, 1 when ``verify`` finds a violated bound, 2 for
bad usage, validation failures, or numerical breakdown.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .diagnostics import analyze_trace, batch_cycle_length
from .oracle import potential_bounds_report, reference_solution
from .problem_io import (
    ProblemInstance,
    ProblemValidationError,
    RunRecord,
    load_problem,
    read_record,
    read_trace,
    write_record,
    write_trace,
)
from .solver import BreakdownError, Solution, SolverConfig, solve


def _parse_tau(text: Optional[str]) -> Optional[int | list[int]]:
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tau {text!r}: expected integers")
    if not values:
        raise argparse.ArgumentTypeError("empty tau")
    return values[0] if len(values) == 1 else values


def _solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eta", type=float, default=1.0, help="regularization strength")
    parser.add_argument(
        "--tau",
        type=str,
        default=None,
        help="batch sizes: comma list, or one value broadcast to all marginals",
    )
    parser.add_argument("--epsilon", type=float, default=1e-6, help="stopping tolerance")
    parser.add_argument(
        "--variant",
        choices=["greedy-batch", "greedy-full", "cyclic-full"],
        default="greedy-batch",
    )
    parser.add_argument("--stopping", choices=["max", "sum"], default="max")
    parser.add_argument("--max-iter", type=int, default=None)
    parser.add_argument("--refresh-every", type=int, default=0)
    parser.add_argument("--seed", type=int, default=None, help="override generator seed")
    parser.add_argument("--trace-out", type=str, default=None)
    parser.add_argument("--record-out", type=str, default=None)
    parser.add_argument("--oracle-tol", type=float, default=1e-12)


def _config_from_args(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        eta=args.eta,
        tau=_parse_tau(args.tau),
        epsilon=args.epsilon,
        variant=args.variant,
        stopping_mode=args.stopping,
        max_iter=args.max_iter,
        refresh_every=args.refresh_every,
    )


def _build_record(
    instance: ProblemInstance,
    config: SolverConfig,
    solution: Solution,
    trace_path: Optional[str],
    verdict=None,
) -> RunRecord:
    shape = instance.shape
    return RunRecord(
        problem_name=instance.name,
        shape=list(shape),
        eta=config.eta,
        tau=list(config.resolved_tau(shape)),
        epsilon=config.epsilon,
        variant=config.variant,
        stopping_mode=config.stopping_mode,
        max_iter=config.resolved_max_iter(instance.cost, shape),
        refresh_every=config.refresh_every,
        status=solution.status,
        iterations=solution.iterations,
        final_stopping_metric=solution.stopping_metric,
        final_potentials=[v.tolist() for v in solution.potentials],
        trace_path=trace_path,
        rate_verdict=None if verdict is None else asdict(verdict),
    )


def _cmd_solve(args: argparse.Namespace) -> int:
    instance = load_problem(args.problem, seed_override=args.seed)
    config = _config_from_args(args)
    solution = solve(instance.cost, instance.histograms, config)
    stem = Path(args.problem).stem
    trace_path = args.trace_out or f"{stem}.trace.csv"
    record_path = args.record_out or f"{stem}.record.json"
    write_trace(solution.trace, trace_path)
    write_record(_build_record(instance, config, solution, trace_path), record_path)
    print(f"problem: {instance.name}  shape {list(instance.shape)}")
    print(
        f"status: {solution.status} after {solution.iterations} iterations "
        f"(stopping metric {solution.stopping_metric:.3e})"
    )
    print(f"trace: {trace_path}")
    print(f"record: {record_path}")
    return 0 if solution.status == "converged" else 2


def _cmd_compare(args: argparse.Namespace) -> int:
    instance = load_problem(args.problem, seed_override=args.seed)
    shape = instance.shape
    levels = [
        ("1", tuple(1 for _ in shape)),
        ("n/4", tuple(max(1, n // 4) for n in shape)),
        ("n/2", tuple(max(1, n // 2) for n in shape)),
        ("n", tuple(shape)),
    ]
    seen = set()
    print(f"problem: {instance.name}  shape {list(shape)}  eta={args.eta}  epsilon={args.epsilon}")
    print(f"{'tau':>8} {'batches':>16} {'iters':>8} {'cycles':>10} {'final d':>12} status")
    for label, tau in levels:
        if tau in seen:
            continue
        seen.add(tau)
        config = SolverConfig(
            eta=args.eta,
            tau=tau,
            epsilon=args.epsilon,
            variant="greedy-batch",
            stopping_mode=args.stopping,
            max_iter=args.max_iter,
            refresh_every=args.refresh_every,
        )
        if args.max_iter is None:
            try:
                config.resolved_max_iter(instance.cost, shape)
            except ValueError:
                # no closed-form per-iteration cap for this batch level; the
                # cycle count needed is batch-independent, so scale the
                # full-batch cap by batches per cycle
                m = len(shape)
                c_inf = float(np.max(instance.cost))
                full_cap = 1.0 + 8.0 * (4.0 * m - 3.0) * c_inf / (
                    args.eta * args.epsilon
                )
                config.max_iter = max(
                    1, int(10 * full_cap * batch_cycle_length(shape, tau))
                )
        solution = solve(instance.cost, instance.histograms, config)
        cycles = solution.iterations / batch_cycle_length(shape, tau)
        print(
            f"{label:>8} {str(tau):>16} {solution.iterations:>8} "
            f"{cycles:>10.3f} {solution.stopping_metric:>12.3e} {solution.status}"
        )
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    instance = load_problem(args.problem, seed_override=args.seed)
    config = _config_from_args(args)
    shape = instance.shape
    tau = config.resolved_tau(shape)
    m = len(shape)
    full = all(t == n for t, n in zip(tau, shape))
    if m != 2 and not full:
        print(
            "verify: explicit rate constants exist only for two marginals or "
            "full batches; use --variant greedy-full/cyclic-full or a "
            "bi-marginal problem",
            file=sys.stderr,
        )
        return 2

    reference = reference_solution(
        instance.cost, instance.histograms, config.eta, tol=args.oracle_tol
    )
    solution = solve(instance.cost, instance.histograms, config, reference_plan=reference)
    c_over_eta = float(np.max(instance.cost)) / config.eta
    verdict = analyze_trace(
        solution.trace,
        config.variant,
        shape,
        tau,
        c_over_eta,
        config.eta,
        config.epsilon,
    )
    gap_line = ""
    failures = []
    if not verdict.pass_rate:
        failures.append("contraction factor exceeded")
    if verdict.pass_bound is False:
        failures.append("iteration bound exceeded")
    if config.variant == "greedy-full":
        report = potential_bounds_report(
            solution.potentials, instance.histograms, instance.cost, config.eta
        )
        gap_line = (
            f"potential gaps: {['%.4g' % g for g in report.gaps]} "
            f"(bound {report.gap_bound:.4g})"
        )
        if not all(report.gaps_ok):
            failures.append("potential gap bound exceeded")

    plan_err = float(np.abs(solution.plan - reference).sum())
    print(f"problem: {instance.name}  variant {config.variant}  tau {list(tau)}")
    print(
        f"solver: {solution.status} after {solution.iterations} iterations; "
        f"|plan - reference|_1 = {plan_err:.3e}"
    )
    print(
        f"rate: observed max ratio {verdict.observed_max_ratio:.12f} "
        f"vs factor {verdict.theoretical_factor:.12f} -> "
        f"{'ok' if verdict.pass_rate else 'FAIL'}"
    )
    if verdict.iteration_bound is not None:
        print(
            f"iterations: {verdict.observed_iterations} vs bound "
            f"{verdict.iteration_bound:.1f} -> "
            f"{'ok' if verdict.pass_bound else 'FAIL'}"
        )
    if gap_line:
        print(gap_line)
    if args.trace_out:
        write_trace(solution.trace, args.trace_out)
    if args.record_out:
        write_record(
            _build_record(instance, config, solution, args.trace_out, verdict),
            args.record_out,
        )
    if failures:
        print("verify: FAIL (" + "; ".join(failures) + ")")
        return 1
    print("verify: all applicable bounds hold")
    return 0


def _cmd_plot_data(args: argparse.Namespace) -> int:
    trace = read_trace(args.trace)
    b_tau = args.b_tau
    if b_tau is None and args.record is not None:
        record = read_record(args.record)
        b_tau = batch_cycle_length(record.shape, record.tau)
    if b_tau is None:
        b_tau = 1
    print("t\tt_norm\td_t\tkl_to_opt")
    for row in trace.rows:
        kl = "nan" if row.kl_to_opt is None else f"{row.kl_to_opt:.17g}"
        print(
            f"{row.t}\t{row.t / b_tau:.17g}\t{row.stopping_metric:.17g}\t{kl}"
        )
    return 0


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mmot",
        description=(
            "Entropic multimarginal optimal transport via greedy batched "
            "KL projections"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one configuration, write record and trace")
    p_solve.add_argument("problem", help="problem file (JSON)")
    _solver_flags(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_compare = sub.add_parser("compare", help="sweep batch sizes, tabulate normalized cycles")
    p_compare.add_argument("problem", help="problem file (JSON)")
    _solver_flags(p_compare)
    p_compare.set_defaults(func=_cmd_compare)

    p_verify = sub.add_parser("verify", help="check rate and iteration bounds on a run")
    p_verify.add_argument("problem", help="problem file (JSON)")
    _solver_flags(p_verify)
    p_verify.set_defaults(func=_cmd_verify)

    p_plot = sub.add_parser("plot-data", help="trace to columnar text for plotting")
    p_plot.add_argument("trace", help="trace file (CSV)")
    p_plot.add_argument("--record", type=str, default=None, help="run record for cycle normalization")
    p_plot.add_argument("--b-tau", type=int, default=None, help="batches per cycle")
    p_plot.set_defaults(func=_cmd_plot_data)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ProblemValidationError, BreakdownError, ValueError, OSError, RuntimeError) as exc:
        print(f"mmot {args.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
