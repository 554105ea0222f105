"""Brute-force solvers for tiny instances, used to certify the fast paths.

Nothing here calls the barycenter solvers: the multi-marginal problem is
solved as one LP over the full product of supports, and transportation
polytope vertices are enumerated combinatorially in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .barycenter import BarycenterResult
from .measures import WEIGHT_TOL, DiscreteMeasure
from .ot_core import Coupling, w2_distance

MAX_MARGINALS = 5
MAX_SUPPORT = 6
MAX_PRODUCT = 10_000
MAX_ENUM_CELLS = 36
CERTIFY_TOL = 1e-6


class CapExceededError(ValueError):
    """Instance too large for brute force."""


@dataclass(frozen=True, eq=False)
class MultiMarginalInstance:
    marginals: tuple[DiscreteMeasure, ...]
    weights: np.ndarray

    def __post_init__(self):
        marginals = tuple(self.marginals)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not marginals or w.size != len(marginals):
            raise ValueError("need one weight per marginal")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must be positive and sum to 1")
        if len({m.dim for m in marginals}) != 1:
            raise ValueError("marginals have mixed dimensions")
        if len(marginals) > MAX_MARGINALS:
            raise CapExceededError(f"{len(marginals)} marginals, cap is {MAX_MARGINALS}")
        if max(m.size for m in marginals) > MAX_SUPPORT:
            raise CapExceededError(f"support larger than {MAX_SUPPORT}")
        if math.prod(m.size for m in marginals) > MAX_PRODUCT:
            raise CapExceededError(f"product support larger than {MAX_PRODUCT}")
        object.__setattr__(self, "marginals", marginals)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, marginals: Sequence[DiscreteMeasure]) -> "MultiMarginalInstance":
        return cls(tuple(marginals), np.full(len(marginals), 1.0 / len(marginals)))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m.size for m in self.marginals)


def _tuple_points(inst: MultiMarginalInstance) -> np.ndarray:
    """Array ``(P, m, n)``: the atoms of each product tuple, row-major order."""
    grids = np.meshgrid(*[np.arange(s) for s in inst.shape], indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    return np.stack([m.points[idx[:, i]] for i, m in enumerate(inst.marginals)], axis=1)


def multimarginal_cost(inst: MultiMarginalInstance, cost: str = "variance") -> np.ndarray:
    """Cost of every product tuple, flattened in row-major order.

    ``variance`` is ``sum_i l_i |x_i - xbar|^2`` with ``xbar = sum_i l_i x_i``;
    ``pairwise_sum`` is ``m^2 sum_ij l_i l_j |x_i - x_j|^2``, which for equal
    weights is the plain ``sum_ij |x_i - x_j|^2`` and always equals
    ``2 m^2`` times the variance cost.
    """
    X = _tuple_points(inst)
    lam = inst.weights
    if cost == "variance":
        xbar = np.einsum("i,pin->pn", lam, X)
        return np.einsum("i,pi->p", lam, np.sum((X - xbar[:, None, :]) ** 2, axis=2))
    if cost == "pairwise_sum":
        m = len(lam)
        d = np.sum((X[:, :, None, :] - X[:, None, :, :]) ** 2, axis=3)
        return m**2 * np.einsum("i,j,pij->p", lam, lam, d)
    raise ValueError(f"unknown cost {cost!r}")


def solve_multimarginal(inst: MultiMarginalInstance, cost: str = "variance") -> tuple[float, np.ndarray]:
    """Exact LP over the product support; returns ``(value, plan)``.

    ``plan`` has shape ``inst.shape``.
    """
    c = multimarginal_cost(inst, cost)
    shape = inst.shape
    P = c.size
    blocks = []
    for i, s in enumerate(shape):
        before = math.prod(shape[:i])
        after = math.prod(shape[i + 1 :])
        # marginal i of a row-major tensor: ones(before) x I_s x ones(after)
        blocks.append(
            sparse.kron(sparse.kron(np.ones((1, before)), sparse.eye(s)), np.ones((1, after)))
        )
    A_eq = sparse.vstack(blocks).tocsc()
    b_eq = np.concatenate([m.weights for m in inst.marginals])
    if len(shape) == 1:
        plan = inst.marginals[0].weights.copy()
    else:
        scale = float(np.max(c)) if np.max(c) > 0 else 1.0
        res = linprog(
            c / scale,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=(0, None),
            method="highs-ds",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        if res.status != 0:
            raise RuntimeError(f"multi-marginal LP failed: {res.message}")
        plan = np.clip(res.x, 0.0, None)
    assert plan.size == P
    return float(c @ plan), plan.reshape(shape)


def average_law(inst: MultiMarginalInstance, plan: np.ndarray, tol: float = 1e-14) -> DiscreteMeasure:
    """Law of ``sum_i l_i X_i`` under a multi-marginal plan."""
    X = _tuple_points(inst)
    mass = plan.ravel()
    keep = mass > tol
    xbar = np.einsum("i,pin->pn", inst.weights, X[keep])
    return DiscreteMeasure.normalized(xbar, mass[keep]).merged()


def induced_couplings(inst: MultiMarginalInstance, plan: np.ndarray, tol: float = 1e-14):
    """For each marginal ``i`` the joint law of ``(xbar, X_i)`` as weighted point pairs."""
    X = _tuple_points(inst)
    mass = plan.ravel()
    keep = mass > tol
    X = X[keep]
    xbar = np.einsum("i,pin->pn", inst.weights, X)
    return [(np.hstack([xbar, X[:, i]]), mass[keep]) for i in range(len(inst.marginals))]


def joint_tv(pairs_a: np.ndarray, mass_a: np.ndarray, pairs_b: np.ndarray, mass_b: np.ndarray, tol: float = 1e-8) -> float:
    """Total-variation distance between two laws given as weighted points.

    Points closer than ``tol`` (sup norm) are identified.
    """
    pts = np.vstack([pairs_a, pairs_b])
    signed = np.concatenate([mass_a, -np.asarray(mass_b)])
    label = np.full(pts.shape[0], -1)
    reps: list[int] = []
    for k in range(pts.shape[0]):
        for r_idx, r in enumerate(reps):
            if np.max(np.abs(pts[k] - pts[r])) <= tol:
                label[k] = r_idx
                break
        else:
            label[k] = len(reps)
            reps.append(k)
    diff = np.zeros(len(reps))
    np.add.at(diff, label, signed)
    return 0.5 * float(np.abs(diff).sum())


def certification_residuals(inst: MultiMarginalInstance, bary: BarycenterResult) -> dict:
    value, plan = solve_multimarginal(inst, "variance")
    law = average_law(inst, plan)
    return {
        "multimarginal_value": value,
        "barycenter_objective": bary.objective,
        "value_gap": abs(value - bary.objective),
        "law_w2": w2_distance(law, bary.measure),
    }


def certify_barycenter(inst: MultiMarginalInstance, bary: BarycenterResult, tol: float = CERTIFY_TOL) -> bool:
    """Variance-cost optimum equals the barycenter objective and its average law is the barycenter."""
    r = certification_residuals(inst, bary)
    return bool(r["value_gap"] <= tol and r["law_w2"] <= tol)


# --- transportation polytope vertices ---------------------------------------


def _exact_weights(w: np.ndarray) -> tuple[Fraction, ...]:
    fr = [Fraction(float(x)) for x in w]
    total = sum(fr)
    return tuple(x / total for x in fr)


def enumerate_couplings(mu: DiscreteMeasure, nu: DiscreteMeasure) -> list[Coupling]:
    """All vertices of the transportation polytope of ``(mu, nu)``.

    A vertex has a forest as support, and a forest always has a leaf whose
    single cell carries ``min(supply, demand)``. Peeling leaves in every
    possible order therefore reaches every vertex, and every peeling order
    ends in a vertex. States are memoized on the residual supplies.
    """
    if mu.size * nu.size > MAX_ENUM_CELLS:
        raise CapExceededError(f"{mu.size}x{nu.size} supports, cap is {MAX_ENUM_CELLS} cells")
    a = _exact_weights(mu.weights)
    b = _exact_weights(nu.weights)

    @lru_cache(maxsize=None)
    def completions(rows: tuple, cols: tuple) -> frozenset:
        if not rows:
            return frozenset([frozenset()])
        out = set()
        for r_pos, (i, s) in enumerate(rows):
            for c_pos, (j, d) in enumerate(cols):
                v = min(s, d)
                new_rows = rows[:r_pos] + ((i, s - v),) + rows[r_pos + 1 :]
                new_cols = cols[:c_pos] + ((j, d - v),) + cols[c_pos + 1 :]
                new_rows = tuple(x for x in new_rows if x[1] > 0)
                new_cols = tuple(x for x in new_cols if x[1] > 0)
                for rest in completions(new_rows, new_cols):
                    out.add(rest | {(i, j, v)})
        return frozenset(out)

    rows = tuple((i, s) for i, s in enumerate(a) if s > 0)
    cols = tuple((j, d) for j, d in enumerate(b) if d > 0)
    vertices = completions(rows, cols)
    out = []
    for cells in sorted(vertices, key=lambda v: sorted(v)):
        table = np.zeros((mu.size, nu.size))
        for i, j, v in cells:
            table[i, j] = float(v)
        out.append(Coupling(mu, nu, table))
    return out


def brute_force_w2(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Minimum transport cost over all polytope vertices."""
    return min(c.cost for c in enumerate_couplings(mu, nu))
