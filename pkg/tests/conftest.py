import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from mkinf import DiscreteMeasure

settings.register_profile("mkinf", max_examples=40, deadline=None)
settings.load_profile("mkinf")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def brute_quantile(mu: DiscreteMeasure, q: float) -> float:
    """min{x : mu((-inf, x]) >= q}, by scanning the atoms."""
    best = np.inf
    for x in mu.points[:, 0]:
        if mu.weights[mu.points[:, 0] <= x].sum() >= q - 1e-15 and x < best:
            best = x
    return float(best)


def quantile_average_oracle(measures, weights):
    """1D barycenter from the quantile-averaging formula, built by brute force."""
    breaks = {0.0, 1.0}
    for m in measures:
        order = np.argsort(m.points[:, 0])
        breaks.update(np.cumsum(m.weights[order]).round(15).tolist())
    breaks = np.array(sorted(b for b in breaks if 0.0 <= b <= 1.0))
    pts, mass = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi - lo <= 1e-15:
            continue
        q = 0.5 * (lo + hi)
        pts.append(sum(l * brute_quantile(m, q) for l, m in zip(weights, measures)))
        mass.append(hi - lo)
    return DiscreteMeasure.normalized(np.array(pts).reshape(-1, 1), mass)


coords = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)
masses = st.floats(min_value=0.05, max_value=1.0)


@st.composite
def measures(draw, dim=1, max_size=5):
    k = draw(st.integers(1, max_size))
    pts = draw(st.lists(st.lists(coords, min_size=dim, max_size=dim), min_size=k, max_size=k))
    w = draw(st.lists(masses, min_size=k, max_size=k))
    return DiscreteMeasure.normalized(np.array(pts), w)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(k, passed, detail)``."""

    def record(k: int, passed: bool, detail: str) -> None:
        line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
