"""Shared instance builders and cached solver runs for the test suite."""

from dataclasses import dataclass

import numpy as np
import pytest

import mmot


def random_instance(seed, shape, marginal_low=0.2):
    """Cost uniform in [0, 1]; strictly positive random marginals."""
    rng = np.random.default_rng(seed)
    cost = rng.uniform(0.0, 1.0, size=shape)
    histograms = []
    for n in shape:
        a = rng.uniform(marginal_low, 1.0, size=n)
        histograms.append(a / a.sum())
    return cost, histograms


@dataclass
class OracleRun:
    """One solve with its reference optimum, for rate and identity checks."""

    seed: int
    shape: tuple
    eta: float
    tau_label: str
    tau: tuple
    cost: np.ndarray
    histograms: list
    reference: np.ndarray
    solution: mmot.Solution

    @property
    def m(self):
        return len(self.shape)

    @property
    def c_over_eta(self):
        return float(self.cost.max()) / self.eta


ETAS = (0.5, 1.0, 5.0)
TAU_LABELS = ("1", "2", "full")

SOLVE_EPSILON = 1e-12
REFERENCE_TOL = 1e-12


def _run_one(seed, shape, eta, tau_label):
    cost, histograms = random_instance(seed, shape)
    n = shape[0]
    tau = {"1": 1, "2": 2, "full": n}[tau_label]
    reference = mmot.reference_solution(cost, histograms, eta, tol=REFERENCE_TOL)
    config = mmot.SolverConfig(
        eta=eta,
        tau=tau,
        epsilon=SOLVE_EPSILON,
        variant="greedy-batch",
        max_iter=300_000,
    )
    solution = mmot.solve(cost, histograms, config, reference_plan=reference)
    return OracleRun(
        seed=seed,
        shape=shape,
        eta=eta,
        tau_label=tau_label,
        tau=config.resolved_tau(shape),
        cost=cost,
        histograms=histograms,
        reference=reference,
        solution=solution,
    )


@pytest.fixture(scope="session")
def oracle_runs():
    """20 seeded instances (10 bi-marginal 10x10, 10 tri-marginal 6x6x6)
    solved to 1e-12 against 1e-12 references; (eta, tau) settings rotate so
    every combination appears within each shape family."""
    runs = []
    for i, seed in enumerate(range(10)):
        runs.append(_run_one(seed, (10, 10), ETAS[i % 3], TAU_LABELS[(i // 3) % 3]))
    for i, seed in enumerate(range(10, 20)):
        runs.append(_run_one(seed, (6, 6, 6), ETAS[i % 3], TAU_LABELS[(i // 3) % 3]))
    return runs


@pytest.fixture(scope="session")
def greedy_full_runs():
    """Full-batch greedy runs at eta = |C|_inf and epsilon = 0.01, with
    references, for the full-batch rate/bound and potential-gap checks."""
    runs = []
    for m, n, seeds in ((2, 10, range(5)), (3, 6, range(10, 15))):
        shape = tuple([n] * m)
        for seed in seeds:
            cost, histograms = random_instance(seed, shape)
            eta = float(cost.max())
            reference = mmot.reference_solution(cost, histograms, eta, tol=REFERENCE_TOL)
            config = mmot.SolverConfig(eta=eta, epsilon=0.01, variant="greedy-full")
            solution = mmot.solve(cost, histograms, config, reference_plan=reference)
            runs.append(
                OracleRun(
                    seed=seed,
                    shape=shape,
                    eta=eta,
                    tau_label="full",
                    tau=shape,
                    cost=cost,
                    histograms=histograms,
                    reference=reference,
                    solution=solution,
                )
            )
    return runs
