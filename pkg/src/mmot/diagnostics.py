"""Convergence-trace analysis and closed-form rate/complexity formulas.

Two families of certificates are checkable from data:

* per-iteration contraction factors for KL(optimum, iterate), with explicit
  constants in the bi-marginal case (any batch size) and the full-batch case
  (any number of marginals), plus the general form that needs caller-supplied
  potential bounds; and
* closed-form caps on the number of iterations needed to drive the marginal
  violation below a tolerance.

``analyze_trace`` evaluates both against a recorded run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

# Below this, KL values are dominated by rounding and contraction ratios are
# meaningless.
KL_RATIO_FLOOR = 1e-14

RATE_SLACK = 1e-12


@dataclass
class TraceRow:
    """One recorded iterate.

    ``axis``/``batch_size`` describe the block applied *from* this iterate;
    the terminal row of a run carries ``axis = -1`` and ``batch_size = 0``.
    ``batch`` holds the concrete index set when available in memory (it is
    not persisted to trace files).
    """

    t: int
    axis: int
    batch_size: int
    block_distance: float
    stopping_metric: float
    objective: float
    kl_to_opt: Optional[float]
    wall_time_ns: int
    batch: Optional[tuple[int, ...]] = None


@dataclass
class ConvergenceTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def kl_values(self) -> list[float]:
        vals = [row.kl_to_opt for row in self.rows]
        if any(v is None for v in vals):
            raise ValueError("trace has no kl_to_opt column; rerun with a reference plan")
        return vals  # type: ignore[return-value]

    def iterations_to(self, epsilon: float) -> Optional[int]:
        """First iteration index whose stopping metric is <= epsilon."""
        for row in self.rows:
            if row.stopping_metric <= epsilon:
                return row.t
        return None


@dataclass
class RateVerdict:
    """Outcome of checking a trace against the closed-form guarantees."""

    variant: str
    theoretical_factor: float
    observed_max_ratio: float
    iteration_bound: Optional[float]
    observed_iterations: Optional[int]
    normalized_cycles: Optional[float]
    pass_rate: bool
    pass_bound: Optional[bool]

    @property
    def passed(self) -> bool:
        return self.pass_rate and self.pass_bound is not False


def batch_cycle_length(shape: Sequence[int], tau: Sequence[int]) -> int:
    """Number of batch iterations equivalent to one full cycle:
    sum_k ceil(n_k / tau_k)."""
    if len(shape) != len(tau):
        raise ValueError("shape and tau must have the same length")
    return sum(math.ceil(n / t) for n, t in zip(shape, tau))


def normalized_cycles(t: int, shape: Sequence[int], tau: Sequence[int]) -> float:
    """Iteration count rescaled so different batch sizes are comparable."""
    return t / batch_cycle_length(shape, tau)


def normalized_iterations(t: int, shape: Sequence[int], tau: Sequence[int]) -> float:
    """Iterations in full-projection equivalents: m cycles' worth per cycle.

    For uniform shapes n_k = n, tau_k = tau this is t * tau / n.
    """
    return t * len(shape) / batch_cycle_length(shape, tau)


def greedy_cyclic_margin(m: int, c_over_eta: float) -> float:
    """Per-cycle contraction advantage of greedy full batches over cyclic.

    Returns (1 - greedy per-cycle factor) - (1 - cyclic per-cycle factor);
    positive means the greedy factor is strictly smaller.  Computed via
    expm1/log1p so the comparison stays meaningful where both factors round
    to 1.0 in double precision.
    """
    if m < 2:
        raise ValueError("need m >= 2")
    c = float(c_over_eta)
    u = math.exp(-(12.0 * m - 7.0) * c) / (m - 1)
    greedy_gain = -math.expm1(m * math.log1p(-u))  # 1 - (1 - u)^m
    cyclic_gain = math.exp(-8.0 * (2.0 * m - 1.0) * c) / m
    return greedy_gain - cyclic_gain


def theoretical_rate(
    variant: str,
    m: int,
    c_over_eta: float,
    b_tau: Optional[int] = None,
    m1: Optional[float] = None,
) -> float:
    """Per-iteration (or per-cycle) contraction factor for KL to the optimum.

    Parameters
    ----------
    variant : str
        ``"general"``: 1 - exp(-(2c + 3 M1)) / (b_tau - 1); needs ``m1``.
        ``"bimarginal"``: 1 - exp(-20 c) / (b_tau - 1); needs ``m == 2``.
        ``"greedy-full"``: 1 - exp(-(12 m - 7) c) / (m - 1), per iteration.
        ``"cyclic"``: 1 - exp(-8 (2 m - 1) c) / m, per cycle of m projections.
    m : int
        Number of marginals.
    c_over_eta : float
        Sup norm of the cost divided by the regularization strength.
    b_tau : int, optional
        sum_k ceil(n_k / tau_k); required by the first two forms.
    m1 : float, optional
        Bound on the sup norm of the summed potentials, required by
        ``"general"`` (no data-explicit expression exists in general).
    """
    c = float(c_over_eta)
    if c < 0:
        raise ValueError("c_over_eta must be nonnegative")
    if variant == "general":
        if m1 is None:
            raise ValueError("general rate needs the potential bound m1")
        if b_tau is None or b_tau < 2:
            raise ValueError("general rate needs b_tau >= 2")
        return 1.0 - math.exp(-(2.0 * c + 3.0 * m1)) / (b_tau - 1)
    if variant == "bimarginal":
        if m != 2:
            raise ValueError("bimarginal rate requires m == 2")
        if b_tau is None or b_tau < 2:
            raise ValueError("bimarginal rate needs b_tau >= 2")
        return 1.0 - math.exp(-20.0 * c) / (b_tau - 1)
    if variant == "greedy-full":
        if m < 2:
            raise ValueError("need m >= 2")
        return 1.0 - math.exp(-(12.0 * m - 7.0) * c) / (m - 1)
    if variant == "cyclic":
        if m < 2:
            raise ValueError("need m >= 2")
        return 1.0 - math.exp(-8.0 * (2.0 * m - 1.0) * c) / m
    raise ValueError(f"unknown rate variant {variant!r}")


def iteration_bound(
    variant: str,
    m: int,
    c_over_eta: float,
    epsilon: float,
    eta: float,
    max_ceil: Optional[int] = None,
    m2: Optional[float] = None,
) -> float:
    """Closed-form cap on iterations until the max marginal violation is
    <= epsilon.

    ``"general"`` evaluates 2 + max_ceil * (5 M2 / eps) * (2 + M2 eta) and
    needs ``m2``; ``"bimarginal"`` substitutes the explicit M2 = 3 |C|/eta;
    both require eta > epsilon.  ``"greedy-full"`` evaluates
    1 + 8 (4m - 3) c / eps with no eta restriction.
    """
    c = float(c_over_eta)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if variant == "greedy-full":
        return 1.0 + 8.0 * (4.0 * m - 3.0) * c / epsilon
    if eta <= epsilon:
        raise ValueError(f"bound form {variant!r} requires eta > epsilon")
    if max_ceil is None or max_ceil < 1:
        raise ValueError("need max_ceil = max_k ceil(n_k / tau_k) >= 1")
    if variant == "general":
        if m2 is None:
            raise ValueError("general bound needs the potential-gap constant m2")
        return 2.0 + max_ceil * (5.0 * m2 / epsilon) * (2.0 + m2 * eta)
    if variant == "bimarginal":
        if m != 2:
            raise ValueError("bimarginal bound requires m == 2")
        c_inf = c * eta
        return 2.0 + max_ceil * 15.0 * c_inf * (2.0 + 3.0 * c_inf) / (eta * epsilon)
    raise ValueError(f"unknown bound variant {variant!r}")


def _rate_form(variant: str, m: int) -> str:
    if variant == "greedy-full":
        return "greedy-full"
    if variant == "cyclic-full":
        return "cyclic"
    if m == 2:
        return "bimarginal"
    return "general"


def analyze_trace(
    trace: ConvergenceTrace,
    variant: str,
    shape: Sequence[int],
    tau: Sequence[int],
    c_over_eta: float,
    eta: float,
    epsilon: float,
    m1: Optional[float] = None,
    m2: Optional[float] = None,
) -> RateVerdict:
    """Check a recorded run against the applicable rate and iteration bound.

    The trace must carry KL-to-optimum values (solve with a reference plan).
    Ratios are only evaluated where the current KL exceeds ``KL_RATIO_FLOOR``.
    For the cyclic variant the contraction is per cycle of m projections;
    otherwise per iteration.
    """
    m = len(shape)
    kl = trace.kl_values()
    form = _rate_form(variant, m)
    b_tau = batch_cycle_length(shape, tau)
    rho = theoretical_rate(form, m, c_over_eta, b_tau=b_tau, m1=m1)

    stride = m if form == "cyclic" else 1
    observed = 0.0
    for i in range(0, len(kl) - stride, stride):
        if kl[i] > KL_RATIO_FLOOR:
            observed = max(observed, kl[i + stride] / kl[i])

    bound: Optional[float] = None
    if form == "greedy-full":
        bound = iteration_bound("greedy-full", m, c_over_eta, epsilon, eta)
    elif form in ("bimarginal", "general") and eta > epsilon:
        max_ceil = max(math.ceil(n / t) for n, t in zip(shape, tau))
        if form == "bimarginal":
            bound = iteration_bound(
                "bimarginal", m, c_over_eta, epsilon, eta, max_ceil=max_ceil
            )
        elif m2 is not None:
            bound = iteration_bound(
                "general", m, c_over_eta, epsilon, eta, max_ceil=max_ceil, m2=m2
            )

    observed_iters = trace.iterations_to(epsilon)
    cycles = None if observed_iters is None else observed_iters / b_tau
    pass_bound: Optional[bool] = None
    if bound is not None:
        pass_bound = observed_iters is not None and observed_iters <= bound
    return RateVerdict(
        variant=variant,
        theoretical_factor=rho,
        observed_max_ratio=observed,
        iteration_bound=bound,
        observed_iterations=observed_iters,
        normalized_cycles=cycles,
        pass_rate=observed <= rho + RATE_SLACK,
        pass_bound=pass_bound,
    )
