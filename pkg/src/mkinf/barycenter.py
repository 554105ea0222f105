"""Wasserstein barycenters of finitely many measures and of measure curves.

Two solvers:

* ``fixed_grid``: the exact LP over couplings that share their first marginal
  on a prescribed grid. With the default grid (every weighted mean
  ``sum_i lambda_i x_i`` of one atom per marginal) the grid contains the
  support of an optimal barycenter, so the LP optimum is the true one.
* ``free_support``: the fixed-point iteration ``x <- sum_i lambda_i T_i(x)``
  where ``T_i`` is the barycentric projection of an optimal plan to marginal
  ``i``. Atoms whose plans split mass are first refined into pieces (in
  order on the line, as products of the conditional laws otherwise), so the
  iteration can reach barycenters with more atoms than its start. On the line
  its fixed points are exactly the quantile average.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .measures import (
    DiscreteMeasure,
    MeasureCurve,
    TimeGrid,
    WEIGHT_TOL,
    merge_atoms,
    quantile_average,
    sample_times,
)
from .ot_core import Coupling, TransportMap, barycentric_projection, optimal_plan, w2_distance

log = logging.getLogger(__name__)

MAX_ITER = 500
MOVE_TOL = 1e-9
CENTROID_GRID_CAP = 5000
DENSITY_SLACK = 0.15


class BarycenterNotConverged(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"free-support iteration did not converge after {iterations} iterations "
            f"(last support movement {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True, eq=False)
class BarycenterProblem:
    """Minimize ``sum_i weights[i] * W2^2(mu, marginals[i])`` over ``mu``.

    ``support_mode`` is ``"fixed_grid"``, ``"free_support"`` or ``"auto"``
    (free support on the line, the weighted-mean grid otherwise when it has at
    most ``CENTROID_GRID_CAP`` points). ``grid`` overrides the fixed grid and
    ``init`` the free-support start (``"largest"``, ``"quantile_mean"`` or a
    :class:`DiscreteMeasure`).
    """

    marginals: tuple[DiscreteMeasure, ...]
    weights: np.ndarray
    support_mode: str = "auto"
    grid: np.ndarray | None = None
    init: str | DiscreteMeasure = "largest"
    max_iter: int = MAX_ITER
    tol: float = MOVE_TOL

    def __post_init__(self):
        marginals = tuple(self.marginals)
        if not marginals:
            raise ValueError("need at least one marginal")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != len(marginals):
            raise ValueError("need one weight per marginal")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must be positive and sum to 1")
        if len({m.dim for m in marginals}) != 1:
            raise ValueError("marginals have mixed dimensions")
        if self.support_mode not in ("auto", "fixed_grid", "free_support"):
            raise ValueError(f"unknown support mode {self.support_mode!r}")
        object.__setattr__(self, "marginals", marginals)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, marginals: Sequence[DiscreteMeasure], **kw) -> "BarycenterProblem":
        m = len(marginals)
        return cls(tuple(marginals), np.full(m, 1.0 / m), **kw)

    @property
    def dim(self) -> int:
        return self.marginals[0].dim

    def objective(self, nu: DiscreteMeasure) -> float:
        return float(sum(l * optimal_plan(nu, m)[0] for l, m in zip(self.weights, self.marginals)))


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    measure: DiscreteMeasure
    objective: float
    maps: tuple[TransportMap, ...]
    plans: tuple[Coupling, ...]
    fixed_point_residual: float
    iterations: int
    mode: str

    @property
    def monge(self) -> bool:
        return all(m.is_monge for m in self.maps)


def fixed_point_residual(measure: DiscreteMeasure, maps: Sequence[TransportMap], weights) -> float:
    """``max_x |sum_i lambda_i T_i(x) - x|`` over atoms of positive mass."""
    avg = sum(l * m.images for l, m in zip(weights, maps))
    live = measure.weights > 0
    return float(np.max(np.linalg.norm(avg[live] - measure.points[live], axis=1)))


def _finish(problem: BarycenterProblem, measure: DiscreteMeasure, iterations: int, mode: str, plans=None):
    if plans is None:
        plans = [optimal_plan(measure, m)[1] for m in problem.marginals]
    maps = tuple(barycentric_projection(p) for p in plans)
    objective = float(sum(l * p.cost for l, p in zip(problem.weights, plans)))
    return BarycenterResult(
        measure=measure,
        objective=objective,
        maps=maps,
        plans=tuple(plans),
        fixed_point_residual=fixed_point_residual(measure, maps, problem.weights),
        iterations=iterations,
        mode=mode,
    )


# --- fixed grid -------------------------------------------------------------


def centroid_grid(marginals: Sequence[DiscreteMeasure], weights) -> np.ndarray:
    """All weighted means ``sum_i weights[i] * x_i``, one atom per marginal."""
    supports = [m.merged().points for m in marginals]
    size = math.prod(s.shape[0] for s in supports)
    grid = np.zeros((size, supports[0].shape[1]))
    for i, combo in enumerate(itertools.product(*supports)):
        grid[i] = sum(l * x for l, x in zip(weights, combo))
    return merge_atoms(grid, np.ones(size))[0]


def centroid_grid_size(marginals: Sequence[DiscreteMeasure]) -> int:
    return math.prod(m.merged().size for m in marginals)


def _solve_fixed_grid(problem: BarycenterProblem, grid: np.ndarray) -> BarycenterResult:
    G = grid.shape[0]
    margs = [m.merged() for m in problem.marginals]
    sizes = [m.size for m in margs]
    costs, blocks_cols, blocks_rows = [], [], []
    for lam, m in zip(problem.weights, margs):
        C = cdist(grid, m.points, "sqeuclidean")
        costs.append(lam * C.ravel())
        # column sums of gamma_i (G x S_i, row-major) equal the marginal weights
        blocks_cols.append(sparse.kron(np.ones((1, G)), sparse.eye(m.size)))
        blocks_rows.append(sparse.kron(sparse.eye(G), np.ones((1, m.size))))
    n_gamma = sum(G * s for s in sizes)
    c = np.concatenate(costs + [np.zeros(G)])
    A_cols = sparse.hstack([sparse.block_diag(blocks_cols), sparse.csr_matrix((sum(sizes), G))])
    A_rows = sparse.hstack([sparse.block_diag(blocks_rows), -sparse.vstack([sparse.eye(G)] * len(margs))])
    A_eq = sparse.vstack([A_cols, A_rows]).tocsc()
    b_eq = np.concatenate([m.weights for m in margs] + [np.zeros(G * len(margs))])
    res = linprog(
        c,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"fixed-grid barycenter LP failed: {res.message}")
    mass = res.x[n_gamma:]
    keep = mass > 1e-13
    measure = DiscreteMeasure.normalized(grid[keep], mass[keep])
    log.debug("fixed grid: %d of %d grid points carry mass", keep.sum(), G)
    return _finish(problem, measure, 1, "fixed_grid")


# --- free support -----------------------------------------------------------


def _initial_measure(problem: BarycenterProblem) -> DiscreteMeasure:
    init = problem.init
    if isinstance(init, DiscreteMeasure):
        if init.dim != problem.dim:
            raise ValueError("initial measure has the wrong dimension")
        return init.merged()
    if init == "largest":
        return max(problem.marginals, key=lambda m: m.merged().size).merged()
    if init == "quantile_mean":
        if problem.dim != 1:
            raise ValueError("quantile_mean initialization needs n = 1")
        return quantile_average(problem.marginals, problem.weights)
    raise ValueError(f"unknown initialization {init!r}")


def _split_atom_1d(mass: float, rows: list[np.ndarray], targets: list[np.ndarray], weights):
    # plans on the line are monotone, so each row is an ordered run of targets
    breaks = [0.0]
    cums = []
    for row, y in zip(rows, targets):
        nz = np.nonzero(row > 1e-12 * mass)[0]
        nz = nz[np.argsort(y[nz, 0], kind="stable")]
        cum = np.cumsum(row[nz])
        cum[-1] = mass
        cums.append((cum, y[nz]))
        breaks.extend(cum)
    breaks = np.unique(np.clip(breaks, 0.0, mass))
    lengths = np.diff(breaks)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    pts = np.zeros((mids.size, 1))
    for lam, (cum, y) in zip(weights, cums):
        idx = np.minimum(np.searchsorted(cum, mids), y.shape[0] - 1)
        pts += lam * y[idx]
    return pts, lengths


def _split_atom_product(mass: float, rows: list[np.ndarray], targets: list[np.ndarray], weights):
    supports = []
    for row in rows:
        nz = np.nonzero(row > 1e-12 * mass)[0]
        supports.append((nz, row[nz] / row[nz].sum()))
    pts, masses = [], []
    for combo in itertools.product(*[range(len(s[0])) for s in supports]):
        p = mass
        x = 0.0
        for lam, (nz, cond), k, y in zip(weights, supports, combo, targets):
            p *= cond[k]
            x = x + lam * y[nz[k]]
        pts.append(x)
        masses.append(p)
    return np.array(pts), np.array(masses)


def _solve_free_support(problem: BarycenterProblem) -> BarycenterResult:
    nu = _initial_measure(problem)
    lam = problem.weights
    targets = [m.points for m in problem.marginals]
    movement = math.inf
    for it in range(1, problem.max_iter + 1):
        plans = [optimal_plan(nu, m)[1] for m in problem.marginals]
        split = [not p.is_deterministic() for p in plans]
        if not any(split):
            maps = [barycentric_projection(p) for p in plans]
            new_pts = sum(l * m.images for l, m in zip(lam, maps))
            movement = float(np.max(np.linalg.norm(new_pts - nu.points, axis=1)))
            log.debug("iteration %d: movement %.3e", it, movement)
            if movement < problem.tol:
                return _finish(problem, nu, it, "free_support", plans)
            pts, w = new_pts, nu.weights
        else:
            splitter = _split_atom_1d if problem.dim == 1 else _split_atom_product
            pieces, masses = [], []
            for k in range(nu.size):
                rows = [p.table[k] for p in plans]
                pts_k, w_k = splitter(nu.weights[k], rows, targets, lam)
                pieces.append(pts_k)
                masses.append(w_k)
            pts, w = np.vstack(pieces), np.concatenate(masses)
            movement = math.inf
            log.debug("iteration %d: refined %d atoms into %d pieces", it, nu.size, w.size)
        pts, w, _ = merge_atoms(pts, w)
        nu = DiscreteMeasure.normalized(pts, w)
    raise BarycenterNotConverged(problem.max_iter, movement)


def finite_barycenter(problem: BarycenterProblem) -> BarycenterResult:
    """Barycenter of finitely many measures; see the module docstring."""
    mode = problem.support_mode
    if problem.grid is not None and mode == "auto":
        mode = "fixed_grid"
    if mode == "auto":
        if problem.dim == 1 or centroid_grid_size(problem.marginals) > CENTROID_GRID_CAP:
            mode = "free_support"
        else:
            mode = "fixed_grid"
    if mode == "fixed_grid":
        grid = problem.grid
        if grid is None:
            grid = centroid_grid(problem.marginals, problem.weights)
        grid = np.asarray(grid, dtype=float).reshape(-1, problem.dim)
        return _solve_fixed_grid(problem, grid)
    return _solve_free_support(problem)


# --- curves -----------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    objective: float
    w2_step: float
    fixed_point_residual: float


@dataclass
class ConvergenceLog:
    rows: list[ConvergenceRow] = field(default_factory=list)

    def steps(self) -> np.ndarray:
        return np.array([r.w2_step for r in self.rows[1:]])

    def settles(self, slack: float = 0.10, tail: int | None = None) -> bool:
        """W2 steps between consecutive results are nonincreasing up to ``slack``."""
        steps = self.steps()
        if tail is not None:
            steps = steps[-tail:]
        return bool(np.all(steps[1:] <= steps[:-1] * (1 + slack) + 1e-12))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["N", "objective", "w2_step", "fixed_point_residual"])
        for r in self.rows:
            writer.writerow([r.N, repr(r.objective), repr(r.w2_step), repr(r.fixed_point_residual)])
        return buf.getvalue()


def curve_problem(curve: MeasureCurve, grid: TimeGrid, **kw) -> BarycenterProblem:
    marginals = tuple(curve.measure_at(t) for t in grid.nodes)
    return BarycenterProblem(marginals, grid.weights, **kw)


def curve_barycenter(
    curve: MeasureCurve,
    schedule: Sequence[int],
    strategy: str = "uniform",
    K: float | None = None,
    **problem_kw,
) -> tuple[BarycenterResult, ConvergenceLog, TimeGrid]:
    """Barycenters of the curve on ``N``-point grids for each ``N`` in ``schedule``.

    Returns the result for the last ``N``, a log of objective estimates and W2
    steps between consecutive results, and the last time grid.
    """
    schedule = list(schedule)
    if not schedule or any(n < 1 for n in schedule):
        raise ValueError("schedule must be a nonempty list of positive integers")
    if any(b < a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be nondecreasing")
    trace = ConvergenceLog()
    prev = None
    result = grid = None
    for N in schedule:
        grid = sample_times(curve, N, strategy, K)
        result = finite_barycenter(curve_problem(curve, grid, **problem_kw))
        step = math.nan if prev is None else w2_distance(prev.measure, result.measure)
        trace.rows.append(ConvergenceRow(N, result.objective, step, result.fixed_point_residual))
        log.info("N=%d objective=%.6g step=%.3g", N, result.objective, step)
        prev = result
    return result, trace, grid


# --- density bounds ---------------------------------------------------------


def density_bound_finite(weights: Sequence[float], linf_norms, n: int) -> float:
    """``[sum_{i in B} lambda_i / ||g_i||_inf^(1/n)]^(-n)``.

    ``linf_norms`` lists ``(index, norm)`` pairs for the absolutely continuous
    marginals ``B``; ``weights`` are all the barycentric weights.
    """
    pairs = list(linf_norms)
    if not pairs:
        raise ValueError("the set of absolutely continuous marginals is empty")
    if n < 1:
        raise ValueError("dimension must be positive")
    total = 0.0
    for i, norm in pairs:
        if not norm > 0:
            raise ValueError("density bounds must be positive")
        total += weights[i] / norm ** (1.0 / n)
    return total ** (-n)


def density_bound_curve(K: float, m_K: float, n: int) -> float:
    """``K / m_K^n``, the density bound of the curve barycenter."""
    if not K > 0:
        raise ValueError("K must be positive")
    if not 0 < m_K <= 1:
        raise ValueError("m_K must lie in (0, 1]")
    return K / m_K**n


@dataclass(frozen=True)
class DensityBoundReport:
    bound: float
    histogram_max: float
    cell_size: float
    satisfied: bool
    slack: float = DENSITY_SLACK


def histogram_max(mu: DiscreteMeasure, cell_size: float) -> float:
    """Largest mass per unit volume over axis-aligned cells of side ``cell_size``."""
    cells = np.floor(mu.points / cell_size + 1e-9).astype(np.int64)
    _, inv = np.unique(cells, axis=0, return_inverse=True)
    mass = np.bincount(inv.reshape(-1), weights=mu.weights)
    return float(mass.max() / cell_size**mu.dim)


def check_density_bound(
    result: BarycenterResult | DiscreteMeasure,
    bound: float,
    cell_size: float,
    slack: float = DENSITY_SLACK,
) -> DensityBoundReport:
    if not cell_size > 0:
        raise ValueError("cell_size must be positive")
    mu = result.measure if isinstance(result, BarycenterResult) else result
    hmax = histogram_max(mu, cell_size)
    return DensityBoundReport(bound, hmax, cell_size, hmax <= bound * (1 + slack), slack)
