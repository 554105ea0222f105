"""Exact optimal transport between two discrete measures, squared Euclidean cost.

Couplings are computed as vertex solutions of the transportation LP (HiGHS
dual simplex via :func:`scipy.optimize.linprog`) and then polished on their
support so the marginals hold to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .measures import DiscreteMeasure, MeasureCurve, common_refinement, merge_atoms

PLAN_TOL = 1e-9
SNAP_TOL = 1e-9
SPLIT_TOL = 1e-12

KINDS = ("exact_monge", "barycentric_projection", "monotone_1d")

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class NonInvertibleMapError(ValueError):
    """Raised when a transport map merges mass and has no inverse."""


@dataclass(frozen=True, eq=False)
class Coupling:
    source: DiscreteMeasure
    target: DiscreteMeasure
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.shape != (self.source.size, self.target.size):
            raise ValueError(f"table shape {table.shape} does not match the marginals")
        if np.any(table < -PLAN_TOL):
            raise ValueError("coupling entries must be nonnegative")
        table = np.clip(table, 0.0, None)
        if np.max(np.abs(table.sum(axis=1) - self.source.weights)) > PLAN_TOL:
            raise ValueError("row sums differ from the source weights")
        if np.max(np.abs(table.sum(axis=0) - self.target.weights)) > PLAN_TOL:
            raise ValueError("column sums differ from the target weights")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def cost(self) -> float:
        return float(np.sum(self.table * cdist(self.source.points, self.target.points, "sqeuclidean")))

    def transpose(self) -> "Coupling":
        return Coupling(self.target, self.source, self.table.T)

    def is_deterministic(self, tol: float = SPLIT_TOL) -> bool:
        """Each source atom of positive mass sends it to a single target point.

        Coincident target atoms count as one point.
        """
        w = self.source.weights
        _, _, labels = merge_atoms(self.target.points, np.ones(self.target.size))
        merged = np.zeros((self.table.shape[0], labels.max() + 1))
        np.add.at(merged.T, labels, self.table.T)
        nnz = (merged > tol * np.maximum(w, 1e-300)[:, None]).sum(axis=1)
        return bool(np.all(nnz[w > 0] <= 1))

    def to_rows(self, tol: float = 0.0) -> list[tuple[int, int, float]]:
        """Sparse ``(row, col, mass)`` triples, the CSV export layout."""
        r, c = np.nonzero(self.table > tol)
        return [(int(i), int(j), float(self.table[i, j])) for i, j in zip(r, c)]


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Assignment of an image point to every source atom.

    ``residual`` bounds the W2 distance between the push-forward of ``source``
    and the target the map was built for.
    """

    source: DiscreteMeasure
    images: np.ndarray
    kind: str
    residual: float = 0.0

    def __post_init__(self):
        images = np.asarray(self.images, dtype=float)
        if images.ndim == 1:
            images = images.reshape(-1, 1)
        if images.shape[0] != self.source.size:
            raise ValueError("need one image per source atom")
        if self.kind not in KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        images = images.copy()
        images.setflags(write=False)
        object.__setattr__(self, "images", images)

    @property
    def is_monge(self) -> bool:
        return self.kind != "barycentric_projection"

    def pushforward(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.images, self.source.weights)

    def is_injective(self, tol: float = 1e-12) -> bool:
        live = self.images[self.source.weights > 0]
        if live.shape[0] < 2:
            return True
        d = cdist(live, live, "chebyshev")
        np.fill_diagonal(d, np.inf)
        return bool(d.min() > tol)


def identity_map(mu: DiscreteMeasure) -> TransportMap:
    return TransportMap(mu, mu.points, "exact_monge")


# --- LP machinery -----------------------------------------------------------


def _polish(table: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Re-solve the marginal equations on the plan support."""
    rows, cols = np.nonzero(table > 1e-14)
    m, n = table.shape
    k = rows.size
    A = np.zeros((m + n, k))
    A[rows, np.arange(k)] = 1.0
    A[m + cols, np.arange(k)] = 1.0
    sol, *_ = np.linalg.lstsq(A, np.concatenate([a, b]), rcond=None)
    out = np.zeros_like(table)
    out[rows, cols] = sol
    if np.any(out < -1e-12) or np.max(np.abs(A @ sol - np.concatenate([a, b]))) > 1e-13:
        return table
    return np.clip(out, 0.0, None)


def transport_lp(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Optimal plan for marginals ``a``, ``b`` (positive) and cost matrix ``C``."""
    m, n = C.shape
    if m == 1 or n == 1:
        return np.outer(a, b)
    # reduce and rescale so the solver tolerances are relative to the cost spread
    C = C - C.min(axis=1, keepdims=True)
    C = C - C.min(axis=0, keepdims=True)
    if C.max() > 0:
        C = C / C.max()
    A_rows = sparse.kron(sparse.eye(m), np.ones((1, n)))
    A_cols = sparse.kron(np.ones((1, m)), sparse.eye(n))
    A_eq = sparse.vstack([A_rows, A_cols]).tocsc()
    res = linprog(
        C.ravel(),
        A_eq=A_eq,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs-ds",
        options=_HIGHS_OPTIONS,
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return _polish(res.x.reshape(m, n), a, b)


def _expand_rows(table: np.ndarray, labels: np.ndarray, weights: np.ndarray, groups: np.ndarray):
    """Spread merged-atom rows back over the original atoms, proportionally."""
    out = np.zeros((labels.size, table.shape[1]))
    live = labels >= 0
    out[live] = table[labels[live]] * (weights[live] / groups[labels[live]])[:, None]
    return out


def w2(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, Coupling]:
    """Squared W2 distance and an optimal coupling, solved exactly.

    Coincident atoms are merged before solving; the returned coupling is
    indexed by the original atoms of ``mu`` and ``nu``.
    """
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    xp, xa, xl = merge_atoms(mu.points, mu.weights)
    yp, ya, yl = merge_atoms(nu.points, nu.weights)
    C = cdist(xp, yp, "sqeuclidean")
    plan = transport_lp(xa / xa.sum(), ya / ya.sum(), C)
    plan = _expand_rows(plan, xl, mu.weights, xa)
    plan = _expand_rows(plan.T, yl, nu.weights, ya).T
    coupling = Coupling(mu, nu, plan)
    return max(coupling.cost, 0.0), coupling


def w2_distance(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return float(np.sqrt(w2(mu, nu)[0]))


def monotone_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Coupling:
    """The comonotone (quantile) coupling of two measures on the line."""
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("monotone rearrangement needs measures on the line")
    lengths, values = common_refinement([mu, nu])
    table = np.zeros((mu.size, nu.size))
    # distribute each quantile cell over the original atoms sitting at its values
    for length, x, y in zip(lengths, values[0], values[1]):
        ix = np.nonzero((np.abs(mu.points[:, 0] - x) <= 1e-12) & (mu.weights > 0))[0]
        iy = np.nonzero((np.abs(nu.points[:, 0] - y) <= 1e-12) & (nu.weights > 0))[0]
        px = mu.weights[ix] / mu.weights[ix].sum()
        py = nu.weights[iy] / nu.weights[iy].sum()
        table[np.ix_(ix, iy)] += length * np.outer(px, py)
    return Coupling(mu, nu, table)


def w2_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, TransportMap]:
    """Closed-form W2^2 on the line and the monotone rearrangement.

    The cost integrates ``|F_mu^{-1}(q) - F_nu^{-1}(q)|^2`` exactly over the
    common refinement of the two quantile functions.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("w2_1d needs measures on the line")
    lengths, values = common_refinement([mu, nu])
    cost = float(lengths @ (values[0] - values[1]) ** 2)
    tmap = barycentric_projection(monotone_coupling(mu, nu))
    return cost, TransportMap(tmap.source, tmap.images, "monotone_1d", tmap.residual)


def optimal_plan(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, Coupling]:
    """Like :func:`w2`, but exact on the line for any atom spacing.

    In 1D the monotone coupling is optimal and needs no LP, so atoms far closer
    than the LP tolerances are still paired in order.
    """
    if mu.dim == 1 and nu.dim == 1:
        plan = monotone_coupling(mu, nu)
        return w2_1d(mu, nu)[0], plan
    return w2(mu, nu)


def barycentric_projection(plan: Coupling) -> TransportMap:
    """Conditional-mean map of a coupling.

    Rows with a single nonzero entry send their atom to that target; when
    every row is like that the map is an exact Monge map.
    """
    w = plan.source.weights
    if np.any(w <= 0):
        raise ValueError("barycentric projection is undefined on zero-weight source atoms")
    y = plan.target.points
    images = (plan.table @ y) / w[:, None]
    kind = "exact_monge" if plan.is_deterministic() else "barycentric_projection"
    if kind == "exact_monge":
        images = y[np.argmax(plan.table, axis=1)]
        residual = 0.0
    else:
        residual = float(np.sqrt(np.sum(plan.table * cdist(images, y, "sqeuclidean"))))
    return TransportMap(plan.source, images, kind, residual)


def invert_map(tmap: TransportMap) -> TransportMap:
    """Map from the push-forward of ``tmap`` back to its source."""
    if tmap.kind == "barycentric_projection":
        raise NonInvertibleMapError("a barycentric projection is not a transport map")
    if not tmap.is_injective():
        raise NonInvertibleMapError("map sends several atoms to one point; no inverse")
    return TransportMap(tmap.pushforward(), tmap.source.points, tmap.kind, tmap.residual)


def _snap(points: np.ndarray, support: np.ndarray, tol: float) -> np.ndarray:
    d = cdist(points, support, "chebyshev")
    idx = np.argmin(d, axis=1)
    bad = d[np.arange(points.shape[0]), idx] > tol
    if np.any(bad):
        raise ValueError(
            f"{int(bad.sum())} image point(s) are not in the outer map's source support"
        )
    return idx


def compose(outer: TransportMap, inner: TransportMap, tol: float = SNAP_TOL) -> TransportMap:
    """``outer o inner``: evaluate ``outer`` at the images of ``inner``."""
    if outer.source.dim != inner.images.shape[1]:
        raise ValueError("dimension mismatch between inner images and outer source")
    idx = _snap(inner.images, outer.source.points, tol)
    if outer.kind == inner.kind:
        kind = outer.kind
    elif "barycentric_projection" in (outer.kind, inner.kind):
        kind = "barycentric_projection"
    else:
        kind = "exact_monge"
    return TransportMap(inner.source, outer.images[idx], kind, outer.residual + inner.residual)


def adjacent_w2_jumps(curve: MeasureCurve) -> np.ndarray:
    """W2 distance between consecutive samples of a curve (continuity check)."""
    return np.array(
        [w2_distance(a, b) for a, b in zip(curve.measures[:-1], curve.measures[1:])]
    )
