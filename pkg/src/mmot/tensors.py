"""Dense order-m tensor algebra for multimarginal transport plans.

Plans, cost tensors and Gibbs kernels are plain ``numpy.ndarray`` objects of
dtype float64 in C (row-major) order, with one axis per marginal.  Marginals
("histograms") are 1-D float64 arrays on the unit simplex, strictly positive.
Potentials are lists of m 1-D float64 arrays, one per axis.

All functions here are pure and deterministic: reductions use numpy's fixed
pairwise summation order, so repeated runs are bit-identical.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import xlogy

# Dense storage only; anything larger needs structured kernels, which this
# package does not provide.
MAX_CELLS = 10**8

HISTOGRAM_SUM_TOL = 1e-12


def validate_shape(shape: Sequence[int], max_cells: int = MAX_CELLS) -> tuple[int, ...]:
    """Check that ``shape`` describes a supported dense tensor.

    Requires at least two axes, every dimension >= 1, and a total cell count
    of at most ``max_cells``.  Returns the shape as a tuple.
    """
    dims = tuple(int(n) for n in shape)
    if len(dims) < 2:
        raise ValueError(f"need at least 2 marginals, got shape {dims}")
    if any(n < 1 for n in dims):
        raise ValueError(f"all dimensions must be >= 1, got shape {dims}")
    total = 1
    for n in dims:
        total *= n
    if total > max_cells:
        raise ValueError(
            f"shape {dims} has {total} cells, above the dense-storage limit "
            f"of {max_cells}"
        )
    return dims


def validate_histogram(a: np.ndarray, n: int | None = None) -> np.ndarray:
    """Check strict positivity and unit mass of a single histogram."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"histogram must be 1-D, got shape {a.shape}")
    if n is not None and a.size != n:
        raise ValueError(f"histogram has length {a.size}, expected {n}")
    if not np.all(np.isfinite(a)):
        raise ValueError("histogram contains non-finite entries")
    if np.any(a <= 0):
        raise ValueError(
            "histogram entries must be strictly positive; drop zero-mass "
            "components before solving"
        )
    total = float(a.sum())
    if abs(total - 1.0) > HISTOGRAM_SUM_TOL:
        raise ValueError(f"histogram sums to {total!r}, not 1")
    return a


def validate_histograms(
    histograms: Sequence[np.ndarray], shape: Sequence[int] | None = None
) -> list[np.ndarray]:
    """Validate one histogram per marginal, optionally against a shape."""
    if shape is not None and len(histograms) != len(shape):
        raise ValueError(
            f"got {len(histograms)} histograms for {len(shape)} marginals"
        )
    out = []
    for k, a in enumerate(histograms):
        n = None if shape is None else shape[k]
        try:
            out.append(validate_histogram(a, n))
        except ValueError as exc:
            raise ValueError(f"marginal {k}: {exc}") from None
    return out


def axis_view(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    """Reshape a 1-D array so it broadcasts along ``axis`` of an order-``ndim``
    tensor."""
    shape = [1] * ndim
    shape[axis] = vec.size
    return vec.reshape(shape)


def broadcast_sum(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Direct sum of per-axis vectors: result[j] = sum_k vectors[k][j_k]."""
    m = len(vectors)
    out = axis_view(np.asarray(vectors[0], dtype=np.float64), 0, m).copy()
    out = np.broadcast_to(out, tuple(v.size for v in vectors)).copy()
    for k in range(1, m):
        out += axis_view(np.asarray(vectors[k], dtype=np.float64), k, m)
    return out


def marginal(pi: np.ndarray, axis: int) -> np.ndarray:
    """Push-forward of a plan onto one axis.

    Parameters
    ----------
    pi : ndarray
        Nonnegative order-m tensor.
    axis : int
        Axis to keep, in ``range(pi.ndim)``.

    Returns
    -------
    ndarray
        1-D array of length ``pi.shape[axis]``; entry ``j`` is the sum of
        ``pi`` over all multi-indices whose ``axis`` coordinate is ``j``.
        Sums to the total mass of ``pi``.
    """
    if not 0 <= axis < pi.ndim:
        raise ValueError(f"axis {axis} out of range for order-{pi.ndim} tensor")
    other = tuple(h for h in range(pi.ndim) if h != axis)
    return pi.sum(axis=other)


def product_measure(histograms: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product of histograms: result[j] = prod_k a_k[j_k].

    Has total mass 1 and ``marginal(result, k) == histograms[k]`` for every k.
    """
    hs = validate_histograms(histograms)
    validate_shape([a.size for a in hs])
    out = hs[0]
    for a in hs[1:]:
        out = np.multiply.outer(out, a)
    return out


def materialize_plan(
    cost: np.ndarray,
    eta: float,
    potentials: Sequence[np.ndarray],
    histograms: Sequence[np.ndarray],
) -> np.ndarray:
    """Dense plan parameterized by dual potentials.

    Computes ``exp(-cost/eta + sum_k v_k[j_k]) * prod_k a_k[j_k]``.  With zero
    potentials this is exactly the normalized Gibbs initialization.  Every
    entry is positive whenever the cost is finite.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    m = cost.ndim
    if len(potentials) != m or len(histograms) != m:
        raise ValueError("need one potential vector and one histogram per axis")
    for k in range(m):
        if potentials[k].size != cost.shape[k]:
            raise ValueError(
                f"potential {k} has length {potentials[k].size}, "
                f"expected {cost.shape[k]}"
            )
    log_scaling = broadcast_sum(potentials)
    return np.exp(-cost / eta + log_scaling) * product_measure(histograms)


def rmot_objective(cost: np.ndarray, eta: float, pi: np.ndarray) -> float:
    """Entropic transport objective <C, pi> + eta * sum_j pi_j (log pi_j - 1).

    Uses the continuity convention 0 log 0 = 0, so plans with exact zeros are
    allowed.  The inner product is the standard Frobenius sum.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if cost.shape != pi.shape:
        raise ValueError(f"shape mismatch: cost {cost.shape}, plan {pi.shape}")
    if np.any(pi < 0):
        raise ValueError("plan has negative entries")
    entropy = float(np.sum(xlogy(pi, pi) - pi))
    return float(np.sum(cost * pi)) + eta * entropy
