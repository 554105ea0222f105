"""Wasserstein barycenters of measure curves and the optimal infinite-marginal process.

Given a curve of probability measures ``t -> mu_t`` on [0, 1], the package
computes the barycenter minimizing ``int_0^1 W2^2(mu_t, mu) dt`` on finite time
grids, builds the process ``X_t = T_t(x)`` over the barycenter (``T_t`` the
optimal map to ``mu_t``) that minimizes ``E int int |X_s - X_t|^2 ds dt``
among processes with these marginals, and re-roots it over any marginal whose
map is invertible. Small instances are certified against brute-force solvers
in :mod:`mkinf.oracle`.
"""

from .barycenter import (
    BarycenterNotConverged,
    BarycenterProblem,
    BarycenterResult,
    ConvergenceLog,
    DensityBoundReport,
    check_density_bound,
    curve_barycenter,
    density_bound_curve,
    density_bound_finite,
    finite_barycenter,
)
from .measures import (
    DiscreteMeasure,
    MeasureCurve,
    SampleFlags,
    TimeGrid,
    convex_hull_support_check,
    quantile_average,
    sample_times,
    second_moment,
)
from .oracle import (
    MultiMarginalInstance,
    certify_barycenter,
    enumerate_couplings,
    solve_multimarginal,
)
from .ot_core import (
    Coupling,
    NonInvertibleMapError,
    TransportMap,
    barycentric_projection,
    compose,
    invert_map,
    w2,
    w2_1d,
)
from .process import (
    CostReport,
    ProcessRepresentation,
    average_map_residual,
    build_process,
    continuity_modulus,
    mk_cost,
    reroot,
)

__version__ = "0.1.0"

__all__ = [
    "BarycenterNotConverged",
    "BarycenterProblem",
    "BarycenterResult",
    "ConvergenceLog",
    "CostReport",
    "Coupling",
    "DensityBoundReport",
    "DiscreteMeasure",
    "MeasureCurve",
    "MultiMarginalInstance",
    "NonInvertibleMapError",
    "ProcessRepresentation",
    "SampleFlags",
    "TimeGrid",
    "TransportMap",
    "average_map_residual",
    "barycentric_projection",
    "build_process",
    "certify_barycenter",
    "check_density_bound",
    "compose",
    "continuity_modulus",
    "convex_hull_support_check",
    "curve_barycenter",
    "density_bound_curve",
    "density_bound_finite",
    "enumerate_couplings",
    "finite_barycenter",
    "invert_map",
    "mk_cost",
    "quantile_average",
    "reroot",
    "sample_times",
    "second_moment",
    "solve_multimarginal",
    "w2",
    "w2_1d",
]
