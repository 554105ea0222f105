"""Reproducible test instances: random measures and a few analytic curves."""

from __future__ import annotations

import numpy as np

from .measures import DiscreteMeasure, MeasureCurve, SampleFlags


def random_measure(rng: np.random.Generator, k: int, n: int = 1, equal_weights: bool = False, scale: float = 1.0) -> DiscreteMeasure:
    points = rng.uniform(-scale, scale, size=(k, n))
    if equal_weights:
        return DiscreteMeasure.uniform(points)
    return DiscreteMeasure.normalized(points, rng.uniform(0.1, 1.0, size=k))


def random_curve(
    rng: np.random.Generator,
    samples: int,
    max_support: int,
    n: int = 1,
    equal_weights: bool = False,
) -> MeasureCurve:
    """Curve with samples at ``i / samples`` (``i = 1..samples``)."""
    times = np.arange(1, samples + 1) / samples
    sizes = rng.integers(1, max_support + 1, size=samples)
    if equal_weights:
        sizes[:] = sizes.max()
    measures = tuple(random_measure(rng, int(k), n, equal_weights) for k in sizes)
    return MeasureCurve(times, measures)


def dirac_curve(c, times) -> MeasureCurve:
    """``t -> delta_{c(t)}`` sampled at ``times``."""
    return MeasureCurve.from_function(lambda t: DiscreteMeasure.dirac(c(t)), times)


def translation_curve(mu: DiscreteMeasure, shift, times, interpolation: str = "nearest") -> MeasureCurve:
    """``t -> mu`` translated by ``shift(t)``."""
    return MeasureCurve.from_function(lambda t: mu.translate(shift(t)), times, interpolation)


def uniform_histogram(lo: float, hi: float, atoms: int) -> DiscreteMeasure:
    """Equal-weight atoms at the cell midpoints of ``[lo, hi]``: a discretized uniform law."""
    edges = np.linspace(lo, hi, atoms + 1)
    return DiscreteMeasure.uniform(0.5 * (edges[:-1] + edges[1:]))


def uniform_histogram_2d(lo, hi, atoms_per_side: int) -> DiscreteMeasure:
    xs = uniform_histogram(lo[0], hi[0], atoms_per_side).points[:, 0]
    ys = uniform_histogram(lo[1], hi[1], atoms_per_side).points[:, 0]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return DiscreteMeasure.uniform(np.column_stack([X.ravel(), Y.ravel()]))


def half_ac_curve(samples: int, atoms: int) -> MeasureCurve:
    """Uniform law on [0, 1] (density 1) for t <= 1/2, a point mass at 1/2 after.

    Half of the sample times are in A_1; the curve barycenter is uniform on
    [1/4, 3/4] with density exactly 2.
    """
    times = np.arange(1, samples + 1) / samples
    unif = uniform_histogram(0.0, 1.0, atoms)
    point = DiscreteMeasure.dirac([0.5])
    measures = tuple(unif if t <= 0.5 else point for t in times)
    flags = tuple(SampleFlags(True, 1.0) if t <= 0.5 else SampleFlags(False, None) for t in times)
    return MeasureCurve(times, measures, "nearest", flags)
