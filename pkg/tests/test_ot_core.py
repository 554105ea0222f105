import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkinf import DiscreteMeasure, NonInvertibleMapError, TransportMap, compose, invert_map, w2, w2_1d
from mkinf.ot_core import Coupling, barycentric_projection, identity_map, monotone_coupling, w2_distance
from mkinf.oracle import brute_force_w2

from conftest import measures


def test_w2_dirac_split():
    cost, plan = w2(DiscreteMeasure.uniform([[0.0], [2.0]]), DiscreteMeasure.dirac([1.0]))
    assert cost == pytest.approx(1.0, abs=1e-12)
    assert plan.table.sum() == pytest.approx(1.0)


def test_w2_1d_shift():
    cost, tmap = w2_1d(DiscreteMeasure.uniform([[0.0], [1.0]]), DiscreteMeasure.uniform([[2.0], [3.0]]))
    assert cost == pytest.approx(4.0, abs=1e-12)
    assert tmap.kind == "monotone_1d"
    assert tmap.images[:, 0].tolist() == [2.0, 3.0]


def test_w2_same_measure_zero():
    mu = DiscreteMeasure.normalized([[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]], [1, 2, 3])
    cost, plan = w2(mu, mu)
    assert cost == pytest.approx(0.0, abs=1e-12)
    assert plan.is_deterministic()


def test_w2_handles_repeated_atoms():
    mu = DiscreteMeasure([[0.0], [0.0], [1.0]], [0.25, 0.25, 0.5])
    nu = DiscreteMeasure.uniform([[0.0], [1.0]])
    cost, plan = w2(mu, nu)
    assert cost == pytest.approx(0.0, abs=1e-12)
    assert plan.table.shape == (3, 2)
    assert np.allclose(plan.table.sum(axis=1), mu.weights)


def test_w2_dimension_mismatch():
    with pytest.raises(ValueError):
        w2(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([0.0, 1.0]))


def test_coupling_marginal_check():
    mu = DiscreteMeasure.uniform([[0.0], [1.0]])
    with pytest.raises(ValueError):
        Coupling(mu, mu, np.array([[0.5, 0.0], [0.0, 0.4]]))


@given(mu=measures(dim=2, max_size=4), nu=measures(dim=2, max_size=4))
def test_w2_symmetric_and_nonnegative(mu, nu):
    a = w2(mu, nu)[0]
    b = w2(nu, mu)[0]
    assert a >= 0
    assert a == pytest.approx(b, abs=1e-9)


@given(a=measures(dim=2, max_size=3), b=measures(dim=2, max_size=3), c=measures(dim=2, max_size=3))
def test_w2_triangle_inequality(a, b, c):
    assert w2_distance(a, c) <= w2_distance(a, b) + w2_distance(b, c) + 1e-9


@given(mu=measures(dim=1, max_size=6), nu=measures(dim=1, max_size=6))
def test_w2_matches_closed_form_1d(mu, nu):
    assert w2(mu, nu)[0] == pytest.approx(w2_1d(mu, nu)[0], abs=1e-9)


@given(mu=measures(dim=1, max_size=5), nu=measures(dim=1, max_size=5))
def test_monotone_coupling_is_sorted(mu, nu):
    plan = monotone_coupling(mu, nu)
    x, y = mu.points[:, 0], nu.points[:, 0]
    rows = [(x[i], y[j]) for i, j, _ in plan.to_rows(1e-14)]
    for p in rows:
        for q in rows:
            # no crossing pairs (atoms closer than the merge tolerance count as one)
            assert not (p[0] < q[0] - 1e-12 and p[1] > q[1] + 1e-12)


@given(
    mu=measures(dim=2, max_size=3),
    nu=measures(dim=2, max_size=3),
    target=measures(dim=2, max_size=3),
    s=st.floats(0.0, 1.0),
)
def test_w2_squared_convex_under_mixture(mu, nu, target, s):
    mixed = mu.mixture(nu, s)
    lhs = w2(mixed, target)[0]
    rhs = (1 - s) * w2(mu, target)[0] + s * w2(nu, target)[0]
    assert lhs <= rhs + 1e-9


def test_w2_matches_enumeration_small(rng):
    for _ in range(10):
        k, l = rng.integers(1, 4, size=2)
        mu = DiscreteMeasure.normalized(rng.uniform(-1, 1, (k, 2)), rng.uniform(0.1, 1, k))
        nu = DiscreteMeasure.normalized(rng.uniform(-1, 1, (l, 2)), rng.uniform(0.1, 1, l))
        assert w2(mu, nu)[0] == pytest.approx(brute_force_w2(mu, nu), abs=1e-9)


def test_barycentric_projection_kinds():
    mu = DiscreteMeasure.dirac([0.0])
    nu = DiscreteMeasure.uniform([[-1.0], [1.0]])
    tmap = barycentric_projection(w2(mu, nu)[1])
    assert tmap.kind == "barycentric_projection"
    assert tmap.images[0, 0] == pytest.approx(0.0)
    assert tmap.residual == pytest.approx(1.0)
    back = barycentric_projection(w2(nu, mu)[1])
    assert back.kind == "exact_monge" and back.residual == 0.0
    with pytest.raises(NonInvertibleMapError):
        invert_map(tmap)
    with pytest.raises(NonInvertibleMapError):
        invert_map(back)


def test_invert_and_compose_roundtrip():
    mu = DiscreteMeasure.uniform([[0.0], [1.0], [2.0]])
    f = TransportMap(mu, [[5.0], [3.0], [4.0]], "exact_monge")
    inv = invert_map(f)
    assert inv.source.same_as(f.pushforward())
    there_and_back = compose(inv, f)
    assert np.allclose(there_and_back.images, mu.points)
    assert np.allclose(compose(f, inv).images, inv.source.points)
    assert compose(f, identity_map(mu)).images.tolist() == f.images.tolist()


def test_compose_rejects_foreign_points():
    mu = DiscreteMeasure.uniform([[0.0], [1.0]])
    f = TransportMap(mu, [[0.5], [1.0]], "exact_monge")
    with pytest.raises(ValueError):
        compose(identity_map(mu), f)


def test_map_kind_validation():
    with pytest.raises(ValueError):
        TransportMap(DiscreteMeasure.dirac([0.0]), [[0.0]], "brenier")
    with pytest.raises(ValueError):
        TransportMap(DiscreteMeasure.dirac([0.0]), [[0.0], [1.0]], "exact_monge")


def test_w2_tiny_costs_still_optimal():
    # costs far below the LP tolerances must still give the optimal plan
    mu = DiscreteMeasure.uniform([[0.0], [5e-6]])
    cost, plan = w2(mu, mu)
    assert cost == 0.0
    assert np.allclose(plan.table, np.diag([0.5, 0.5]))


def test_duplicate_target_atoms_keep_plan_deterministic():
    mu = DiscreteMeasure.dirac([0.0])
    nu = DiscreteMeasure([[0.0], [0.0]], [0.5, 0.5])
    plan = w2(mu, nu)[1]
    assert plan.is_deterministic()
    assert barycentric_projection(plan).kind == "exact_monge"


def test_w2_between_diracs():
    cost, plan = w2(DiscreteMeasure.dirac([1.0, 2.0]), DiscreteMeasure.dirac([4.0, 6.0]))
    assert cost == pytest.approx(25.0, abs=1e-12)
    assert plan.table.shape == (1, 1)
    assert w2_1d(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([3.0]))[0] == pytest.approx(9.0)


def test_w2_four_by_five_matches_enumeration(rng):
    mu = DiscreteMeasure.normalized(rng.uniform(-1, 1, (4, 2)), rng.uniform(0.1, 1, 4))
    nu = DiscreteMeasure.normalized(rng.uniform(-1, 1, (5, 2)), rng.uniform(0.1, 1, 5))
    assert w2(mu, nu)[0] == pytest.approx(brute_force_w2(mu, nu), abs=1e-9)


def test_equal_weight_plans_are_monge(rng):
    for _ in range(10):
        mu = DiscreteMeasure.uniform(rng.uniform(-1, 1, (5, 2)))
        nu = DiscreteMeasure.uniform(rng.uniform(-1, 1, (5, 2)))
        assert barycentric_projection(w2(mu, nu)[1]).kind == "exact_monge"


def test_invert_monotone_map_and_identity():
    mu = DiscreteMeasure.uniform([[0.0], [1.0]])
    inv = invert_map(TransportMap(mu, [[1.0], [3.0]], "monotone_1d"))
    assert inv.source.points[:, 0].tolist() == [1.0, 3.0]
    assert inv.images[:, 0].tolist() == [0.0, 1.0]
    ident = identity_map(mu)
    assert np.array_equal(invert_map(ident).images, ident.images)
