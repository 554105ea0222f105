"""Certifying a barycenter with the multi-marginal LP.

The barycenter objective equals the optimum of the multi-marginal problem with
cost sum_i l_i |x_i - xbar|^2, and the law of xbar under an optimal plan is
the barycenter. Both facts are checked by brute force on a small instance, and
a shifted candidate is rejected.
"""

import numpy as np

from mkinf import BarycenterProblem, MultiMarginalInstance, certify_barycenter, finite_barycenter
from mkinf.barycenter import BarycenterResult
from mkinf.instances import random_measure
from mkinf.oracle import certification_residuals

rng = np.random.default_rng(4)
marginals = [random_measure(rng, 3, 2) for _ in range(3)]
instance = MultiMarginalInstance.uniform(marginals)
problem = BarycenterProblem.uniform(marginals)
bary = finite_barycenter(problem)

for key, value in certification_residuals(instance, bary).items():
    print(f"{key:22s} {value:.3e}")
print("certified:", certify_barycenter(instance, bary))

moved = bary.measure.translate([0.02, 0.0])
fake = BarycenterResult(moved, problem.objective(moved), bary.maps, bary.plans, 0.0, 0, "manual")
print("shifted candidate certified:", certify_barycenter(instance, fake))
