"""The optimal process of the infinite-marginal problem, sampled on a time grid.

A process is stored as a base probability space (a discrete measure) and, for
every grid node ``t_j``, a map sending each base atom to its position at
``t_j``. Built from a barycenter result, the base is the barycenter and the
maps are the optimal maps to the marginals, so every sample path is
``t -> T_t(x)`` for a barycenter atom ``x``.
"""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .barycenter import BarycenterResult
from .measures import TIME_TOL, DiscreteMeasure, TimeGrid
from .ot_core import TransportMap, compose, invert_map, optimal_plan, w2_distance


class MongeUncertifiedWarning(UserWarning):
    """Some time map is a barycentric projection, not a transport map."""


@dataclass(frozen=True, eq=False)
class ProcessRepresentation:
    base: DiscreteMeasure
    time_maps: tuple[tuple[float, TransportMap], ...]
    grid: TimeGrid
    barycenter: DiscreteMeasure

    def __post_init__(self):
        if len(self.time_maps) != len(self.grid):
            raise ValueError("need one time map per grid node")
        for t, m in self.time_maps:
            if m.source is not self.base and not m.source.same_as(self.base, tol=1e-12):
                raise ValueError(f"time map at t={t} does not start from the base measure")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.time_maps])

    @property
    def maps(self) -> list[TransportMap]:
        return [m for _, m in self.time_maps]

    @property
    def monge_certified(self) -> bool:
        return all(m.is_monge for m in self.maps)

    def paths(self) -> np.ndarray:
        """Array ``(atoms, nodes, n)`` of positions ``X_{t_j}(x)``."""
        return np.stack([m.images for m in self.maps], axis=1)

    def marginals(self) -> list[DiscreteMeasure]:
        return [m.pushforward() for m in self.maps]

    def node_index(self, t0: float) -> int:
        idx = np.nonzero(np.abs(self.times - t0) <= TIME_TOL)[0]
        if idx.size == 0:
            raise ValueError(f"t0={t0} is not a grid node")
        return int(idx[0])


@dataclass(frozen=True)
class CostReport:
    """Quadrature values of the process functionals.

    ``mk_cost`` is ``E sum_jk w_j w_k |X_j - X_k|^2``, ``moment_term`` is
    ``sum_j w_j E|X_j|^2``, ``avg_potential`` is ``E|sum_j w_j X_j|^2``,
    ``lower_bound`` is ``sum_j w_j W2^2(mu_j, barycenter)`` and
    ``avg_law_cost`` the same with the law of ``sum_j w_j X_j`` in place of the
    barycenter.
    """

    mk_cost: float
    avg_potential: float
    moment_term: float
    lower_bound: float
    avg_law_cost: float
    monge_certified: bool = True

    @property
    def identity_gap(self) -> float:
        return abs(self.mk_cost - (2 * self.moment_term - 2 * self.avg_potential))

    def as_dict(self) -> dict:
        return {
            "mk_cost": self.mk_cost,
            "avg_potential": self.avg_potential,
            "moment_term": self.moment_term,
            "lower_bound": self.lower_bound,
            "avg_law_cost": self.avg_law_cost,
            "monge_certified": self.monge_certified,
        }


def build_process(bary: BarycenterResult, grid: TimeGrid) -> ProcessRepresentation:
    """Process with the barycenter as base and ``bary.maps`` as time maps."""
    if len(bary.maps) != len(grid):
        raise ValueError(
            f"barycenter has {len(bary.maps)} maps for {len(grid)} grid nodes"
        )
    proc = ProcessRepresentation(
        base=bary.measure,
        time_maps=tuple((float(t), m) for t, m in zip(grid.nodes, bary.maps)),
        grid=grid,
        barycenter=bary.measure,
    )
    if not proc.monge_certified:
        warnings.warn(
            "some optimal plan splits mass; the process uses barycentric projections",
            MongeUncertifiedWarning,
            stacklevel=2,
        )
    return proc


def marginal_fidelity(proc: ProcessRepresentation, marginals: Sequence[DiscreteMeasure]) -> np.ndarray:
    """W2 distance between each pushed-forward base and the intended marginal."""
    return np.array([w2_distance(p, m) for p, m in zip(proc.marginals(), marginals)])


def average_map_residual(proc: ProcessRepresentation) -> float:
    """``max_x |sum_j w_j X_{t_j}(x) - x|`` over base atoms."""
    avg = np.einsum("j,kjn->kn", proc.grid.weights, proc.paths())
    live = proc.base.weights > 0
    return float(np.max(np.linalg.norm(avg[live] - proc.base.points[live], axis=1)))


def _path_terms(atom_weights: np.ndarray, paths: np.ndarray, grid_weights: np.ndarray):
    diffs = paths[:, :, None, :] - paths[:, None, :, :]
    pair = np.einsum("kjln,kjln->kjl", diffs, diffs)
    mk = float(np.einsum("k,j,l,kjl->", atom_weights, grid_weights, grid_weights, pair))
    moment = float(np.einsum("k,j,kj->", atom_weights, grid_weights, np.sum(paths**2, axis=2)))
    avg = np.einsum("j,kjn->kn", grid_weights, paths)
    potential = float(atom_weights @ np.sum(avg**2, axis=1))
    return mk, moment, potential, avg


def path_cost_report(
    atom_weights,
    paths,
    grid_weights,
    barycenter: DiscreteMeasure | None = None,
    monge_certified: bool = True,
) -> CostReport:
    """Cost report of any process given as weighted sample paths.

    ``paths[k, j]`` is the position of path ``k`` at node ``j``. The marginals
    are read off the paths themselves.
    """
    atom_weights = np.asarray(atom_weights, dtype=float)
    paths = np.asarray(paths, dtype=float)
    grid_weights = np.asarray(grid_weights, dtype=float)
    mk, moment, potential, avg = _path_terms(atom_weights, paths, grid_weights)
    marginals = [DiscreteMeasure.normalized(paths[:, j], atom_weights) for j in range(paths.shape[1])]
    avg_law = DiscreteMeasure.normalized(avg, atom_weights)
    avg_law_cost = float(sum(w * optimal_plan(m, avg_law)[0] for w, m in zip(grid_weights, marginals)))
    if barycenter is None:
        lower = float("nan")
    else:
        lower = float(sum(w * optimal_plan(m, barycenter)[0] for w, m in zip(grid_weights, marginals)))
    return CostReport(mk, potential, moment, lower, avg_law_cost, monge_certified)


def mk_cost(proc: ProcessRepresentation) -> CostReport:
    return path_cost_report(
        proc.base.weights, proc.paths(), proc.grid.weights, proc.barycenter, proc.monge_certified
    )


def reroot(proc: ProcessRepresentation, t0: float) -> ProcessRepresentation:
    """Rewrite the process over the marginal at grid node ``t0``.

    The new maps are ``F_t = T_t o T_{t0}^{-1}``; raises
    :class:`~mkinf.ot_core.NonInvertibleMapError` when ``T_{t0}`` merges atoms.
    """
    j0 = proc.node_index(t0)
    inverse = invert_map(proc.maps[j0])
    new_maps = tuple((t, compose(m, inverse)) for t, m in proc.time_maps)
    return ProcessRepresentation(inverse.source, new_maps, proc.grid, proc.barycenter)


def continuity_modulus(proc: ProcessRepresentation) -> list[tuple[float, float, float]]:
    """Largest displacement of any base atom between adjacent grid nodes."""
    if len(proc.grid) < 2:
        raise ValueError("need at least two grid nodes")
    paths = proc.paths()
    times = proc.times
    gaps = np.max(np.linalg.norm(np.diff(paths, axis=1), axis=2), axis=0)
    return [(float(times[j]), float(times[j + 1]), float(gaps[j])) for j in range(gaps.size)]


# --- alternative couplings of the same marginals ---------------------------


def independent_mk_cost(marginals: Sequence[DiscreteMeasure], grid_weights) -> float:
    """``mk_cost`` of the process with independent single-time values.

    Closed form: ``2 sum_j w_j E|X_j|^2 - 2 (|sum_j w_j m_j|^2 + sum_j w_j^2 Var_j)``.
    """
    w = np.asarray(grid_weights, dtype=float)
    second = np.array([float(m.weights @ np.sum(m.points**2, axis=1)) for m in marginals])
    means = np.array([m.mean() for m in marginals])
    var = second - np.sum(means**2, axis=1)
    avg_sq = float(np.sum((w @ means) ** 2) + np.sum(w**2 * var))
    return float(2 * w @ second - 2 * avg_sq)


def independent_paths(marginals: Sequence[DiscreteMeasure]):
    """Product coupling as explicit weighted paths (small inputs only)."""
    weights, paths = [], []
    for combo in itertools.product(*[range(m.size) for m in marginals]):
        weights.append(np.prod([m.weights[k] for m, k in zip(marginals, combo)]))
        paths.append([m.points[k] for m, k in zip(marginals, combo)])
    return np.array(weights), np.array(paths)


def glued_paths(marginals: Sequence[DiscreteMeasure], orders: Sequence[np.ndarray] | None = None):
    """Couple the marginals by stacking their atoms along ``[0, 1]``.

    Atoms of marginal ``j`` are laid out in the order ``orders[j]`` and all
    marginals are read at the same level ``q``. Sorted orders on the line give
    the comonotone coupling; random orders give permutation-type couplings.
    Returns ``(weights, paths)``.
    """
    if orders is None:
        orders = [np.arange(m.size) for m in marginals]
    cums = []
    for m, order in zip(marginals, orders):
        cum = np.cumsum(m.weights[order])
        cum[-1] = 1.0
        cums.append((cum, order))
    breaks = np.unique(np.concatenate([[0.0]] + [c for c, _ in cums]))
    breaks = breaks[np.concatenate([[True], np.diff(breaks) > 1e-15])]
    breaks[-1] = 1.0
    lengths = np.diff(breaks)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    paths = np.empty((mids.size, len(marginals), marginals[0].dim))
    for j, (m, (cum, order)) in enumerate(zip(marginals, cums)):
        idx = np.minimum(np.searchsorted(cum, mids), order.size - 1)
        paths[:, j] = m.points[order[idx]]
    return lengths, paths


# --- export -----------------------------------------------------------------


def sample_paths_csv(proc: ProcessRepresentation) -> str:
    """Rows ``(atom, weight, t, x_1..x_n)`` for plotting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = proc.base.dim
    writer.writerow(["atom", "weight", "t"] + [f"x{d + 1}" for d in range(n)])
    paths = proc.paths()
    for k in range(proc.base.size):
        for j, t in enumerate(proc.times):
            writer.writerow([k, repr(float(proc.base.weights[k])), repr(float(t))] + [repr(float(v)) for v in paths[k, j]])
    return buf.getvalue()
