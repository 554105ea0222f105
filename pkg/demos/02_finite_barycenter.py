"""Barycenter of three measures in the plane.

The default solver for n >= 2 is an LP over the grid of weighted means
sum_i l_i x_i, which contains the support of some barycenter, so it is exact.
The free-support fixed-point iteration is faster on large inputs but can stop
at a local fixed point, which the comparison below sometimes shows.
"""

import numpy as np

from mkinf import BarycenterProblem, convex_hull_support_check, finite_barycenter
from mkinf.instances import random_measure

rng = np.random.default_rng(1)
marginals = [random_measure(rng, 4, 2) for _ in range(3)]
weights = np.array([0.5, 0.3, 0.2])

exact = finite_barycenter(BarycenterProblem(tuple(marginals), weights))
print(f"weighted-mean grid LP: objective {exact.objective:.6f}, {exact.measure.size} atoms")
print(f"  all maps Monge: {exact.monge}, fixed-point residual {exact.fixed_point_residual:.1e}")
print(f"  support inside the hull of the marginals: {convex_hull_support_check(exact.measure, marginals)}")

free = finite_barycenter(BarycenterProblem(tuple(marginals), weights, support_mode="free_support"))
print(f"free-support iteration: objective {free.objective:.6f} after {free.iterations} iterations")
print(f"  gap to the exact optimum: {free.objective - exact.objective:.2e}")
