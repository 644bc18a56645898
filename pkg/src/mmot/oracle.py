"""Independent ground truth for testing the solver.

Everything here deliberately avoids the solver's incremental machinery:

* ``reference_solution`` runs plain cyclic full projections on the dense
  plan tensor, recomputing marginals from scratch each pass;
* ``kkt_residual`` checks optimality directly: feasibility plus membership
  of log(plan / initial plan) in the span of per-axis fields, measured via
  an exact additive (ANOVA-style) decomposition;
* ``enumerate_greedy_oracle`` realizes the greedy argmax by brute force;
* ``potential_bounds_report`` evaluates the closed-form bounds that
  converged potentials must satisfy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .bregman import BlockId, gibbs_init, kl_terms
from .solver import SolverState
from .tensors import axis_view, broadcast_sum, marginal


@dataclass
class KktReport:
    """Optimality residuals of a candidate plan.

    ``feasibility_residual`` is the max L1 marginal violation;
    ``range_residual`` is the sup norm of the part of log(plan / initial)
    that no additive per-axis field can explain.  Both vanish (to rounding)
    exactly at the optimum.
    """

    feasibility_residual: float
    range_residual: float
    potentials: list[np.ndarray]


@dataclass
class PotentialBoundsReport:
    """Closed-form bounds evaluated on (normalized) converged potentials.

    Sum and per-vector sup-norm bounds are guaranteed for full-batch greedy
    runs; for partial batches with more than two marginals they are reported
    as flags, not assertions.  ``gaps[k]`` is max_j v_k[j] - min_j v_k[j],
    bounded by twice the cost-to-regularization ratio on full-batch greedy
    iterates.
    """

    normalized_potentials: list[np.ndarray]
    sum_inf_norm: float
    sum_bound: float
    sum_ok: bool
    vector_inf_norms: list[float]
    vector_bound: float
    vectors_ok: list[bool]
    gaps: list[float]
    gap_bound: float
    gaps_ok: list[bool]

    @property
    def all_ok(self) -> bool:
        return self.sum_ok and all(self.vectors_ok) and all(self.gaps_ok)


BOUND_SLACK = 1e-12


def reference_solution(
    cost: np.ndarray,
    histograms: Sequence[np.ndarray],
    eta: float,
    tol: float = 1e-12,
    max_iter: int = 10**7,
) -> np.ndarray:
    """High-accuracy optimum by cyclic full projections on the dense plan.

    Rescales one axis per pass by target/current marginal, recomputing every
    marginal from scratch, until the max L1 violation is at most ``tol``.
    Raises RuntimeError if the cap is hit (misconfiguration at desk scale).
    """
    pi = gibbs_init(cost, eta, histograms)
    m = pi.ndim
    for it in range(max_iter):
        violations = [
            float(np.abs(a - marginal(pi, k)).sum())
            for k, a in enumerate(histograms)
        ]
        if max(violations) <= tol:
            return pi
        k = it % m
        r = marginal(pi, k)
        if np.any(r <= 0):
            raise RuntimeError(
                f"reference iteration produced a zero axis-{k} marginal; "
                "increase eta"
            )
        pi = pi * axis_view(histograms[k] / r, k, m)
    raise RuntimeError(
        f"reference solution did not reach tol={tol} within {max_iter} "
        "iterations"
    )


def additive_decomposition(
    field: np.ndarray,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Split a tensor into its best additive per-axis part and the remainder.

    Under the uniform inner product the orthogonal projection of ``field``
    onto tensors of the form sum_k v_k[j_k] is given by axis means: with
    grand mean g and axis-k means m_k,

        v_k = m_k - g * (m - 1) / m,

    so that the parts sum to sum_k m_k - (m - 1) g.  Returns the vectors and
    the interaction residual ``field - sum_k v_k[j_k]``.
    """
    m = field.ndim
    grand = float(field.mean())
    vectors = []
    for k in range(m):
        other = tuple(h for h in range(m) if h != k)
        axis_mean = field.mean(axis=other)
        vectors.append(axis_mean - grand * (m - 1) / m)
    residual = field - broadcast_sum(vectors)
    return vectors, residual


def kkt_residual(
    cost: np.ndarray,
    histograms: Sequence[np.ndarray],
    eta: float,
    pi: np.ndarray,
) -> KktReport:
    """Optimality residuals of ``pi`` for the given problem.

    The plan must be strictly positive.  Any iterate parameterized by
    potentials has zero range residual; only feasibility distinguishes it
    from the optimum.
    """
    if pi.shape != cost.shape:
        raise ValueError(f"shape mismatch: plan {pi.shape}, cost {cost.shape}")
    if np.any(pi <= 0):
        raise ValueError("plan must be strictly positive")
    pi0 = gibbs_init(cost, eta, histograms)
    log_ratio = np.log(pi) - np.log(pi0)
    vectors, residual = additive_decomposition(log_ratio)
    feasibility = max(
        float(np.abs(a - marginal(pi, k)).sum())
        for k, a in enumerate(histograms)
    )
    return KktReport(
        feasibility_residual=feasibility,
        range_residual=float(np.max(np.abs(residual))),
        potentials=vectors,
    )


def count_candidates(shape: Sequence[int], tau: Sequence[int]) -> int:
    """Number of canonical blocks scanned by the exhaustive greedy search."""
    return sum(comb(n, min(int(t), n)) for n, t in zip(shape, tau))


def enumerate_greedy_oracle(
    state: SolverState,
    histograms: Sequence[np.ndarray],
    tau: Sequence[int],
    max_candidates: int = 10**6,
) -> tuple[BlockId, float]:
    """Exhaustive greedy argmax over all blocks of the prescribed sizes.

    Only batches of exactly min(tau_k, n_k) components are scanned: the
    divergence terms are nonnegative, so supersets dominate subsets and the
    maximum is attained on a canonical representative.  Ties resolve to the
    smallest axis, then the lexicographically smallest index set, matching
    the fast selection rule.
    """
    shape = [a.size for a in histograms]
    total = count_candidates(shape, tau)
    if total > max_candidates:
        raise ValueError(
            f"{total} candidate blocks exceed the enumeration limit "
            f"{max_candidates}"
        )
    best: BlockId | None = None
    best_val = -1.0
    for k, (a_k, r_k) in enumerate(zip(histograms, state.marginals)):
        d = kl_terms(a_k, r_k)
        size = min(int(tau[k]), a_k.size)
        for combo in itertools.combinations(range(a_k.size), size):
            val = float(d[np.asarray(combo, dtype=np.intp)].sum())
            if val > best_val:
                best, best_val = BlockId(k, combo), val
    assert best is not None
    return best, best_val


def potential_bounds_report(
    potentials: Sequence[np.ndarray],
    histograms: Sequence[np.ndarray],
    cost: np.ndarray,
    eta: float,
) -> PotentialBoundsReport:
    """Evaluate the closed-form potential bounds on a converged run.

    Normalization: for every axis but the last, shift by minus the
    histogram-weighted mean; the last axis absorbs the opposite total shift,
    so the represented plan is unchanged.  Gaps are shift-invariant and use
    the raw potentials.
    """
    m = len(potentials)
    c = float(np.max(cost)) / eta
    shifts = [-float(np.dot(a, v)) for v, a in zip(potentials[:-1], histograms[:-1])]
    shifts.append(-sum(shifts))
    normalized = [v + lam for v, lam in zip(potentials, shifts)]

    norms = [float(np.max(np.abs(u))) for u in normalized]
    sum_inf = sum(norms)
    sum_bound = (4.0 * m - 3.0) * c
    vector_bound = (2.0 * m - 1.0) * c
    gaps = [float(np.max(v) - np.min(v)) for v in potentials]
    gap_bound = 2.0 * c
    return PotentialBoundsReport(
        normalized_potentials=normalized,
        sum_inf_norm=sum_inf,
        sum_bound=sum_bound,
        sum_ok=sum_inf <= sum_bound + BOUND_SLACK,
        vector_inf_norms=norms,
        vector_bound=vector_bound,
        vectors_ok=[x <= vector_bound + BOUND_SLACK for x in norms],
        gaps=gaps,
        gap_bound=gap_bound,
        gaps_ok=[g <= gap_bound + BOUND_SLACK for g in gaps],
    )
