"""Problem ingestion and run/trace persistence.

Problem files are JSON documents:

    {
      "name": "my-instance",
      "description": "optional free text",
      "shape": [10, 10],
      "marginals": [[...], [...]],
      "cost": [ ... flat row-major floats ... ]
    }

The cost may instead be a named generator, so experiments ship as a seed
rather than a tensor:

    "cost": {"generator": "random-uniform", "seed": 7, "scale": 1.0}
    "cost": {"generator": "symmetric-toy"}

``symmetric-toy`` is the 2x2 instance with cost [[0, 1], [1, 0]]; its
marginals default to uniform when omitted.  Marginal vectors whose sum is
within 1e-9 of 1 are silently renormalized, anything further off is
rejected.

Traces are CSV files with the fixed header

    t,k_t,batch_size,block_distance,d_t,objective,kl_to_opt,wall_time_ns

and run records are JSON.  Floats in traces are written with 17 significant
digits, so reloading is bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .diagnostics import ConvergenceTrace, RateVerdict, TraceRow
from .tensors import validate_shape

MARGINAL_RENORM_TOL = 1e-9

TRACE_HEADER = "t,k_t,batch_size,block_distance,d_t,objective,kl_to_opt,wall_time_ns"


class ProblemValidationError(ValueError):
    """A problem file failed validation; the message names the field."""


@dataclass
class ProblemInstance:
    name: str
    description: str
    shape: tuple[int, ...]
    histograms: list[np.ndarray]
    cost: np.ndarray


@dataclass
class RunRecord:
    """Summary of one solve, serializable to JSON and back losslessly."""

    problem_name: str
    shape: list[int]
    eta: float
    tau: list[int]
    epsilon: float
    variant: str
    stopping_mode: str
    max_iter: int
    refresh_every: int
    status: str
    iterations: int
    final_stopping_metric: float
    final_potentials: list[list[float]]
    trace_path: Optional[str] = None
    rate_verdict: Optional[dict] = None


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def symmetric_toy_cost() -> np.ndarray:
    return np.array([[0.0, 1.0], [1.0, 0.0]])


def _generate_cost(spec: dict, shape: tuple[int, ...], seed_override=None) -> np.ndarray:
    kind = spec.get("generator")
    if kind == "symmetric-toy":
        if shape != (2, 2):
            raise ProblemValidationError(
                f"cost: generator symmetric-toy requires shape [2, 2], got {list(shape)}"
            )
        return symmetric_toy_cost()
    if kind == "random-uniform":
        seed = spec.get("seed", 0) if seed_override is None else seed_override
        scale = float(spec.get("scale", 1.0))
        if scale <= 0:
            raise ProblemValidationError(f"cost: scale must be positive, got {scale}")
        rng = np.random.default_rng(int(seed))
        return rng.uniform(0.0, scale, size=shape)
    raise ProblemValidationError(f"cost: unknown generator {kind!r}")


def load_problem(path: str | Path, seed_override: Optional[int] = None) -> ProblemInstance:
    """Load and validate a problem file.

    ``seed_override`` replaces the seed of a random cost generator, when the
    file uses one.  Raises :class:`ProblemValidationError` naming the failing
    field.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemValidationError(f"cannot parse problem file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ProblemValidationError("problem file must be a JSON object")

    name = str(doc.get("name", path.stem))
    description = str(doc.get("description", ""))

    cost_spec = doc.get("cost")
    toy = isinstance(cost_spec, dict) and cost_spec.get("generator") == "symmetric-toy"

    if "shape" not in doc:
        if not toy:
            raise ProblemValidationError("shape: missing")
        shape_raw = [2, 2]
    else:
        shape_raw = doc["shape"]
    try:
        shape = validate_shape(shape_raw)
    except (TypeError, ValueError) as exc:
        raise ProblemValidationError(f"shape: {exc}") from None

    if "marginals" not in doc:
        if not toy:
            raise ProblemValidationError("marginals: missing")
        marginals_raw = [[0.5, 0.5], [0.5, 0.5]]
    else:
        marginals_raw = doc["marginals"]
    if not isinstance(marginals_raw, list) or len(marginals_raw) != len(shape):
        raise ProblemValidationError(
            f"marginals: expected {len(shape)} vectors, got "
            f"{len(marginals_raw) if isinstance(marginals_raw, list) else type(marginals_raw).__name__}"
        )
    histograms = []
    for k, raw in enumerate(marginals_raw):
        a = np.asarray(raw, dtype=np.float64)
        if a.ndim != 1 or a.size != shape[k]:
            raise ProblemValidationError(
                f"marginals[{k}]: expected length {shape[k]}, got shape {a.shape}"
            )
        if not np.all(np.isfinite(a)):
            raise ProblemValidationError(f"marginals[{k}]: non-finite entries")
        if np.any(a <= 0):
            raise ProblemValidationError(
                f"marginals[{k}]: entries must be strictly positive"
            )
        total = float(a.sum())
        if abs(total - 1.0) > MARGINAL_RENORM_TOL:
            raise ProblemValidationError(
                f"marginals[{k}]: sums to {total!r}, more than {MARGINAL_RENORM_TOL} from 1"
            )
        histograms.append(a / total)

    if cost_spec is None:
        raise ProblemValidationError("cost: missing")
    if isinstance(cost_spec, dict):
        cost = _generate_cost(cost_spec, shape, seed_override)
    else:
        flat = np.asarray(cost_spec, dtype=np.float64)
        expected = math.prod(shape)
        if flat.ndim != 1 or flat.size != expected:
            raise ProblemValidationError(
                f"cost: expected flat row-major array of {expected} entries, "
                f"got shape {flat.shape}"
            )
        cost = flat.reshape(shape)
    if not np.all(np.isfinite(cost)):
        raise ProblemValidationError("cost: non-finite entries")
    if np.any(cost < 0):
        raise ProblemValidationError("cost: entries must be nonnegative")

    return ProblemInstance(name, description, shape, histograms, cost)


def save_problem(instance: ProblemInstance, path: str | Path) -> None:
    doc = {
        "name": instance.name,
        "description": instance.description,
        "shape": list(instance.shape),
        "marginals": [a.tolist() for a in instance.histograms],
        "cost": instance.cost.ravel().tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def write_trace(trace: ConvergenceTrace, path: str | Path) -> None:
    """Write a trace as CSV with the fixed header; one line per row."""
    lines = [TRACE_HEADER]
    for row in trace.rows:
        kl = "" if row.kl_to_opt is None else _fmt(row.kl_to_opt)
        lines.append(
            f"{row.t},{row.axis},{row.batch_size},{_fmt(row.block_distance)},"
            f"{_fmt(row.stopping_metric)},{_fmt(row.objective)},{kl},"
            f"{row.wall_time_ns}"
        )
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from None


def read_trace(path: str | Path) -> ConvergenceTrace:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from None
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}: not a trace file (bad header)")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 8:
            raise ValueError(f"{path}: malformed trace line {line!r}")
        rows.append(
            TraceRow(
                t=int(parts[0]),
                axis=int(parts[1]),
                batch_size=int(parts[2]),
                block_distance=float(parts[3]),
                stopping_metric=float(parts[4]),
                objective=float(parts[5]),
                kl_to_opt=None if parts[6] == "" else float(parts[6]),
                wall_time_ns=int(parts[7]),
            )
        )
    return ConvergenceTrace(rows)


def write_record(record: RunRecord, path: str | Path) -> None:
    try:
        Path(path).write_text(json.dumps(asdict(record), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write record to {path}: {exc}") from None


def read_record(path: str | Path) -> RunRecord:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read record from {path}: {exc}") from None
    return RunRecord(**doc)
