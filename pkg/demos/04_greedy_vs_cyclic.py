"""Race greedy full-batch selection against the classical cyclic sweep.

Both variants apply full projections; they differ only in which marginal
they fix next.  The greedy factor 1 - exp(-(12m-7)c)/(m-1) per iteration
beats the cyclic factor 1 - exp(-8(2m-1)c)/m per cycle for every
cost-to-regularization ratio c, and the race below shows the practical
gap is small but real.
"""

import numpy as np

import mmot

shape = (6, 6, 6)
epsilon = 1e-6
print("per-instance iterations to reach d <= 1e-6 (10 seeded instances):\n")
print(f"{'seed':>6} {'greedy':>8} {'cyclic':>8}")

greedy_total = cyclic_total = 0
for seed in range(10):
    rng = np.random.default_rng(seed)
    cost = rng.uniform(0.0, 1.0, size=shape)
    marginals = []
    for n in shape:
        a = rng.uniform(0.2, 1.0, size=n)
        marginals.append(a / a.sum())
    eta = float(cost.max())
    greedy = mmot.solve(
        cost, marginals, mmot.SolverConfig(eta=eta, epsilon=epsilon, variant="greedy-full")
    )
    cyclic = mmot.solve(
        cost, marginals, mmot.SolverConfig(eta=eta, epsilon=epsilon, variant="cyclic-full")
    )
    greedy_total += greedy.iterations
    cyclic_total += cyclic.iterations
    print(f"{seed:>6} {greedy.iterations:>8} {cyclic.iterations:>8}")

print(f"\ntotals: greedy {greedy_total}, cyclic {cyclic_total}")

print("\nclosed-form per-cycle advantage (positive = greedy factor smaller):")
for c in (0.1, 0.5, 1.0, 2.0, 5.0):
    for m in (2, 3):
        margin = mmot.greedy_cyclic_margin(m, c)
        print(f"  m={m}  c={c:<4} margin {margin:.3e}")
