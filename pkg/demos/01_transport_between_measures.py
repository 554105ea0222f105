"""Exact W2 between two discrete measures, and the closed form on the line.

On the real line the optimal plan is the monotone one, so the LP solver and
the quantile formula must agree. In the plane there is no closed form and the
LP plan is checked against every vertex of the transportation polytope.
"""

import numpy as np

from mkinf import DiscreteMeasure, w2, w2_1d
from mkinf.oracle import brute_force_w2

rng = np.random.default_rng(0)

mu = DiscreteMeasure.normalized(rng.normal(size=(5, 1)), rng.uniform(0.2, 1, 5))
nu = DiscreteMeasure.normalized(rng.normal(2.0, 0.5, size=(4, 1)), rng.uniform(0.2, 1, 4))
lp_cost, plan = w2(mu, nu)
closed_cost, monotone = w2_1d(mu, nu)
print(f"line:  LP W2^2 = {lp_cost:.12f}   quantile formula = {closed_cost:.12f}")
print("monotone map images:", np.round(monotone.images[:, 0], 4))

a = DiscreteMeasure.normalized(rng.uniform(-1, 1, (3, 2)), [1, 2, 3])
b = DiscreteMeasure.normalized(rng.uniform(-1, 1, (3, 2)), [3, 1, 1])
cost, plan = w2(a, b)
print(f"plane: LP W2^2 = {cost:.12f}   best polytope vertex = {brute_force_w2(a, b):.12f}")
print("optimal plan (rows: source atoms):")
print(np.round(plan.table, 4))
