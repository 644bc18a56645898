"""The geometry that drives the solver, demonstrated numerically.

Two facts make greedy block selection cheap and sound:

1. the KL distance from the current plan to a block constraint is readable
   off the marginal vector alone (no projection needed), and
2. the generalized Pythagoras identity: projecting onto a block constraint
   removes exactly that distance from the KL gap to the optimum, so the
   greedy block maximizes per-step progress.
"""

import numpy as np

import mmot
from mmot import BlockId

rng = np.random.default_rng(3)
shape = (4, 4, 4)
cost = rng.uniform(0.0, 1.0, size=shape)
marginals = []
for n in shape:
    a = rng.uniform(0.5, 1.5, size=n)
    marginals.append(a / a.sum())
eta = 0.8

optimum = mmot.reference_solution(cost, marginals, eta, tol=1e-13)
plan = mmot.gibbs_init(cost, eta, marginals)

print("applying the greedy block projection five times:\n")
for it in range(5):
    state = mmot.SolverState(
        potentials=[np.zeros(n) for n in shape],
        marginals=[mmot.marginal(plan, k) for k in range(3)],
    )
    block, distance = mmot.greedy_select(state, marginals, (2, 2, 2))
    before = mmot.kl_divergence(optimum, plan)
    projected = mmot.project_block(plan, block, marginals[block.axis])
    after = mmot.kl_divergence(optimum, projected)
    print(
        f"  step {it}: block (axis {block.axis}, components {block.indices})  "
        f"KL drop {before - after:.6e} vs block distance {distance:.6e}"
    )
    plan = projected

print("\nthe two columns agree to rounding: KL(opt, plan) - KL(opt, proj)")
print("= KL(proj, plan) = KL(target marginal | batch, current marginal | batch)")

# every iterate stays in the family log(plan/initial) = additive per axis
field = np.log(plan) - np.log(mmot.gibbs_init(cost, eta, marginals))
vectors, residual = mmot.additive_decomposition(field)
print(f"\nadditive-decomposition residual of log(plan/initial): "
      f"{np.abs(residual).max():.2e}")
print("so the plan is always parameterized by per-axis potentials, and")
print("optimality = feasibility + membership in this additive family.")
