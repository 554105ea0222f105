"""Discrete measures, measure curves and time grids.

Everything downstream works with finitely supported probability measures on
R^n. A curve of measures t -> mu_t on [0, 1] is represented by a finite list of
samples plus an interpolation rule; regularity of the continuum object that the
samples discretize (absolute continuity, a bound on the density) is carried as
user supplied per-sample flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

WEIGHT_TOL = 1e-12
MERGE_TOL = 1e-12
HULL_TOL = 1e-9
TIME_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point cloud ``sum_k weights[k] * delta(points[k])`` in R^n.

    ``points`` has shape ``(k, n)``; a flat array is read as ``k`` points in
    R^1. Weights must be nonnegative and sum to one within ``1e-12``.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must have shape (k, n) with n >= 1")
        if pts.shape[0] == 0:
            raise ValueError("a probability measure needs at least one atom")
        if pts.shape[0] != w.shape[0]:
            raise ValueError(
                f"{pts.shape[0]} points but {w.shape[0]} weights"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def normalized(cls, points, weights) -> "DiscreteMeasure":
        """Build a measure after rescaling ``weights`` to unit mass."""
        w = np.asarray(weights, dtype=float).reshape(-1)
        total = w.sum()
        if not total > 0:
            raise ValueError("total mass must be positive")
        return cls(points, w / total)

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x.reshape(1, -1), [1.0])

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=float)
        k = pts.shape[0]
        return cls(pts, np.full(k, 1.0 / k))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"DiscreteMeasure(size={self.size}, dim={self.dim})"

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def merged(self, tol: float = MERGE_TOL) -> "DiscreteMeasure":
        """Drop zero-weight atoms and merge atoms closer than ``tol``."""
        pts, w, _ = merge_atoms(self.points, self.weights, tol)
        return DiscreteMeasure(pts, w / w.sum())

    def translate(self, shift) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points + np.asarray(shift, dtype=float), self.weights)

    def mixture(self, other: "DiscreteMeasure", s: float) -> "DiscreteMeasure":
        """Linear (not displacement) mixture ``s * other + (1 - s) * self``."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        pts = np.vstack([self.points, other.points])
        w = np.concatenate([(1.0 - s) * self.weights, s * other.weights])
        return DiscreteMeasure.normalized(pts, w)

    def same_as(self, other: "DiscreteMeasure", tol: float = 1e-9) -> bool:
        """Equality as weighted point sets, after merging coincident atoms."""
        if other.dim != self.dim:
            return False
        a, b = self.merged(), other.merged()
        if a.size != b.size:
            return False
        ia = np.lexsort(a.points.T[::-1])
        ib = np.lexsort(b.points.T[::-1])
        return bool(
            np.allclose(a.points[ia], b.points[ib], atol=tol, rtol=0)
            and np.allclose(a.weights[ia], b.weights[ib], atol=tol, rtol=0)
        )


def merge_atoms(points: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Merge atoms within ``tol`` of each other and drop zero weights.

    Returns ``(points, weights, labels)`` where ``labels[k]`` is the merged index
    of input atom ``k`` (``-1`` for dropped zero-weight atoms). Merged atoms keep
    the position of their first representative.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    labels = np.full(points.shape[0], -1, dtype=int)
    reps: list[int] = []
    for k in range(points.shape[0]):
        if weights[k] <= 0:
            continue
        for r_idx, r in enumerate(reps):
            if np.max(np.abs(points[k] - points[r])) <= tol:
                labels[k] = r_idx
                break
        else:
            labels[k] = len(reps)
            reps.append(k)
    out_w = np.zeros(len(reps))
    np.add.at(out_w, labels[labels >= 0], weights[labels >= 0])
    return points[reps].copy(), out_w, labels


def second_moment(mu: DiscreteMeasure) -> float:
    return float(mu.weights @ np.sum(mu.points**2, axis=1))


# --- one dimensional quantile functions -------------------------------------


def quantile_table(mu: DiscreteMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Left-continuous quantile function of a measure on the line.

    Returns ``(cum, values)`` such that ``F^{-1}(q) = values[k]`` for
    ``q in (cum[k-1], cum[k]]`` (with ``cum[-1] = 0``).
    """
    if mu.dim != 1:
        raise ValueError("quantile functions need a measure on the line")
    m = mu.merged()
    order = np.argsort(m.points[:, 0], kind="stable")
    values = m.points[order, 0]
    cum = np.cumsum(m.weights[order])
    cum[-1] = 1.0
    return cum, values


def common_refinement(measures: Sequence[DiscreteMeasure], tol: float = 1e-15):
    """Quantile cells shared by all ``measures`` and the quantile values on them.

    Returns ``(lengths, values)`` with ``values[i, c]`` the quantile of measure
    ``i`` on cell ``c``.
    """
    tables = [quantile_table(m) for m in measures]
    breaks = np.unique(np.concatenate([[0.0]] + [c for c, _ in tables]))
    keep = np.concatenate([[True], np.diff(breaks) > tol])
    breaks = breaks[keep]
    breaks[-1] = 1.0
    lengths = np.diff(breaks)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    values = np.empty((len(tables), mids.size))
    for i, (cum, vals) in enumerate(tables):
        idx = np.minimum(np.searchsorted(cum, mids, side="left"), vals.size - 1)
        values[i] = vals[idx]
    return lengths, values


def quantile_average(
    measures: Sequence[DiscreteMeasure], weights: Sequence[float] | None = None
) -> DiscreteMeasure:
    """Measure whose quantile function is the weighted mean of the inputs'."""
    if weights is None:
        weights = np.full(len(measures), 1.0 / len(measures))
    lengths, values = common_refinement(measures)
    pts = np.asarray(weights, dtype=float) @ values
    return DiscreteMeasure.normalized(pts.reshape(-1, 1), lengths).merged()


# --- convex hull ------------------------------------------------------------


def _in_hull(x: np.ndarray, hull_pts: np.ndarray, tol: float) -> bool:
    k, n = hull_pts.shape
    if n == 1:
        lo, hi = hull_pts.min(), hull_pts.max()
        return bool(lo - tol <= x[0] <= hi + tol)
    # min ||P^T lam - x||_1 over the simplex, via slacks s+ and s-
    c = np.concatenate([np.zeros(k), np.ones(2 * n)])
    a_eq = np.zeros((n + 1, k + 2 * n))
    a_eq[:n, :k] = hull_pts.T
    a_eq[:n, k : k + n] = np.eye(n)
    a_eq[:n, k + n :] = -np.eye(n)
    a_eq[n, :k] = 1.0
    b_eq = np.concatenate([x, [1.0]])
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"hull membership LP failed: {res.message}")
    return bool(res.fun <= tol)


def convex_hull_support_check(
    mu: DiscreteMeasure, curve: "MeasureCurve | Iterable[DiscreteMeasure]", tol: float = HULL_TOL
) -> bool:
    """True iff every atom of ``mu`` lies in the convex hull of the curve supports."""
    measures = curve.measures if isinstance(curve, MeasureCurve) else list(curve)
    hull = np.vstack([m.points for m in measures])
    if hull.shape[1] != mu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {hull.shape[1]}")
    hull = merge_atoms(hull, np.ones(hull.shape[0]), tol=1e-12)[0]
    pts = mu.points[mu.weights > 0]
    return all(_in_hull(x, hull, tol) for x in pts)


# --- curves and time grids --------------------------------------------------


@dataclass(frozen=True)
class SampleFlags:
    """Regularity of the continuum marginal a sample stands for."""

    is_ac: bool = False
    linf: float | None = None

    def in_ak(self, K: float) -> bool:
        return bool(self.is_ac and self.linf is not None and math.isfinite(self.linf) and self.linf <= K)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if nodes.size == 0 or nodes.size != w.size:
            raise ValueError("nodes and weights must be nonempty and of equal length")
        if np.any(nodes < -TIME_TOL) or np.any(nodes > 1 + TIME_TOL):
            raise ValueError("nodes must lie in [0, 1]")
        if np.any(np.diff(nodes) < 0):
            raise ValueError("nodes must be sorted")
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("quadrature weights must be nonnegative and sum to 1")
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, N: int) -> "TimeGrid":
        return cls(np.arange(1, N + 1) / N, np.full(N, 1.0 / N))

    def __len__(self) -> int:
        return self.nodes.size


INTERPOLATIONS = ("nearest", "quantile")


@dataclass(frozen=True, eq=False)
class MeasureCurve:
    """A curve ``t -> mu_t`` on [0, 1] known through finitely many samples.

    ``interpolation`` is ``"nearest"`` (piecewise constant, ties go to the
    earlier sample) or ``"quantile"`` (displacement interpolation between
    neighbouring samples, n = 1 only). Outside the sampled range the curve is
    held constant.
    """

    times: np.ndarray
    measures: tuple[DiscreteMeasure, ...]
    interpolation: str = "nearest"
    flags: tuple[SampleFlags, ...] = field(default=())

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        measures = tuple(self.measures)
        if times.size == 0 or times.size != len(measures):
            raise ValueError("need one measure per sample time")
        if np.any(times < 0) or np.any(times > 1):
            raise ValueError("sample times must lie in [0, 1]")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        dims = {m.dim for m in measures}
        if len(dims) != 1:
            raise ValueError(f"samples have mixed dimensions {sorted(dims)}")
        if self.interpolation not in INTERPOLATIONS:
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if self.interpolation == "quantile" and measures[0].dim != 1:
            raise ValueError("quantile interpolation is only defined for n = 1")
        flags = tuple(self.flags) or tuple(SampleFlags() for _ in measures)
        if len(flags) != len(measures):
            raise ValueError("need one flag entry per sample")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "flags", flags)

    @classmethod
    def from_function(cls, fn, times, interpolation="nearest", flags=None) -> "MeasureCurve":
        times = np.asarray(times, dtype=float)
        return cls(times, tuple(fn(t) for t in times), interpolation, tuple(flags or ()))

    @property
    def dim(self) -> int:
        return self.measures[0].dim

    def __len__(self) -> int:
        return self.times.size

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def measure_at(self, t: float) -> DiscreteMeasure:
        j = self.nearest_index(t)
        if abs(self.times[j] - t) <= TIME_TOL or self.interpolation == "nearest":
            return self.measures[j]
        if t <= self.times[0]:
            return self.measures[0]
        if t >= self.times[-1]:
            return self.measures[-1]
        hi = int(np.searchsorted(self.times, t))
        lo = hi - 1
        s = (t - self.times[lo]) / (self.times[hi] - self.times[lo])
        return quantile_average([self.measures[lo], self.measures[hi]], [1.0 - s, s])

    def default_K(self) -> float:
        norms = [f.linf for f in self.flags if f.is_ac and f.linf is not None and math.isfinite(f.linf)]
        if not norms:
            raise ValueError("no sample carries a finite density bound")
        return max(norms)

    def ak_mask(self, K: float | None = None) -> np.ndarray:
        K = self.default_K() if K is None else K
        return np.array([f.in_ak(K) for f in self.flags])

    def ak_fraction(self, K: float | None = None) -> float:
        """Fraction of sample times in A_K, the discrete stand-in for m_K."""
        return float(self.ak_mask(K).mean())

    def satisfies_assumption_b(self) -> bool:
        return any(f.in_ak(math.inf) for f in self.flags)


def sample_times(
    curve: MeasureCurve, N: int, strategy: str = "uniform", K: float | None = None
) -> TimeGrid:
    """Pick ``N`` quadrature nodes on ``curve`` with equal weights ``1/N``.

    ``uniform`` takes ``i/N`` (``i = 1..N``), snapped to the nearest sample for
    piecewise-constant curves. ``prefer_AK`` splits [0, 1] into the closed
    intervals ``[(i-1)/N, i/N]``; an interval that contains a sample in A_K
    uses that sample time (the one closest to ``i/N``), the others fall back to
    the uniform rule. ``K`` defaults to the largest finite density bound on
    the curve.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    strategy = strategy.lower()
    if strategy not in ("uniform", "prefer_ak"):
        raise ValueError(f"unknown strategy {strategy!r}")

    def snap(t: float) -> float:
        if curve.interpolation == "nearest":
            return float(curve.times[curve.nearest_index(t)])
        return t

    grid = np.arange(1, N + 1) / N
    nodes = [snap(t) for t in grid]
    if strategy == "prefer_ak":
        mask = curve.ak_mask(K)
        if not mask.any():
            raise ValueError("prefer_AK needs at least one sample in A_K")
        ak_times = curve.times[mask]
        for i in range(N):
            lo, hi = i / N, (i + 1) / N
            inside = ak_times[(ak_times >= lo - TIME_TOL) & (ak_times <= hi + TIME_TOL)]
            if inside.size:
                nodes[i] = float(inside[np.argmin(np.abs(inside - hi))])
    nodes = np.sort(np.asarray(nodes))
    return TimeGrid(nodes, np.full(N, 1.0 / N))


def grid_ak_count(curve: MeasureCurve, grid: TimeGrid, K: float | None = None) -> int:
    """Number of grid nodes that hit an A_K-flagged sample time."""
    ak_times = curve.times[curve.ak_mask(K)]
    return int(sum(np.any(np.abs(ak_times - t) <= TIME_TOL) for t in grid.nodes))
