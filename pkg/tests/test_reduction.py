import numpy as np
import pytest

from conftest import random_cz
from oracles import facets, inside, sample_convex, vertices
from czkit.reduction import (
    ReductionLimits,
    eliminate_constraint,
    factor_bounds,
    prune,
    reduce,
    reduce_generators,
    relax_to_zonotope,
    rescale,
)
from czkit.setops import ConstrainedZonotope, contains_point, interval_hull


def assert_encloses(outer, inner, rng, count=200):
    """Sampled points of ``inner`` lie in ``outer`` (facet oracle when possible)."""
    pts = sample_convex(vertices(inner), count, rng)
    hk = facets(vertices(outer)) if outer.n_gen <= 12 else None
    if hk is not None:
        assert np.all(inside(pts, hk))
    else:
        assert all(contains_point(outer, p, 1e-7) for p in pts[:40])


class TestEliminateConstraint:
    def test_pinned_factor_is_exact(self):
        Z = ConstrainedZonotope([[1.0, 0.5], [0.0, 1.0]], [0.0, 0.0], [[1.0, 0.0]], [0.0])
        R = eliminate_constraint(Z)
        assert (R.n_gen, R.n_con) == (1, 0)
        rng = np.random.default_rng(0)
        pts = rng.uniform(-2, 2, (500, 2))
        assert [contains_point(R, p) for p in pts] == [contains_point(Z, p) for p in pts]

    def test_square_with_diagonal_constraint(self):
        Z = ConstrainedZonotope(np.eye(2), np.zeros(2), [[1.0, 1.0]], [0.0])
        R = eliminate_constraint(Z)
        assert (R.n_gen, R.n_con) == (1, 0)
        assert_encloses(R, Z, np.random.default_rng(1), 500)

    def test_repeated_elimination(self):
        rng = np.random.default_rng(2)
        Z = random_cz(rng, 3, 7, 3)
        R = Z
        while R.n_con:
            prev = R
            R = eliminate_constraint(R)
            assert (R.n_gen, R.n_con) == (prev.n_gen - 1, prev.n_con - 1)
        assert_encloses(R, Z, rng)

    def test_square_system_pinned_up_to_roundoff(self):
        # two rows fix both factors; propagation narrows them to ~1e-10, not 0
        A = np.array([[-0.23686713271041304, -0.2841057685437981], [-0.00727410978860132, -0.8287338585839653]])
        b = np.array([-0.0919994661204212, -0.3388404142273807])
        Z = ConstrainedZonotope([[-0.2485938777491683, 1.3998997966667301]], [-0.940995372653217], A, b)
        point = Z.c + Z.G @ np.linalg.solve(A, b)
        R = reduce(Z, ReductionLimits(2, 0))
        assert R.n_con == 0
        assert contains_point(R, point)
        assert interval_hull(R).width[0] < 1e-8

    def test_no_constraint(self):
        with pytest.raises(ValueError):
            eliminate_constraint(ConstrainedZonotope(np.eye(2), np.zeros(2)))

    def test_rescale_keeps_the_set(self):
        rng = np.random.default_rng(3)
        Z = random_cz(rng, 2, 4, 2)
        S = rescale(Z)
        V = vertices(Z)
        assert np.all(inside(V, facets(vertices(S)), 1e-7))
        assert np.all(inside(vertices(S), facets(V), 1e-7))

    def test_factor_bounds(self):
        lo, hi = factor_bounds(np.array([[1.0, 1.0]]), np.array([1.5]))
        assert np.allclose(lo, [0.5, 0.5]) and np.allclose(hi, [1, 1])
        assert factor_bounds(np.array([[1.0, 1.0]]), np.array([3.0])) is None


class TestReduceGenerators:
    def test_within_target_unchanged(self):
        Z = random_cz(np.random.default_rng(4), 2, 4, 0)
        assert reduce_generators(Z, 4) is Z

    def test_interval(self):
        Z = ConstrainedZonotope([[1.0, 0.5, 0.1]], [0.0])
        R = reduce_generators(Z, 1)
        assert R.n_gen == 1
        h = interval_hull(R)
        assert h.lower[0] == pytest.approx(-1.6) and h.upper[0] == pytest.approx(1.6)

    def test_hull_grows(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            Z = random_cz(rng, 2, 9, int(rng.integers(0, 3)))
            R = reduce_generators(Z, 4)
            assert R.n_gen <= 4
            hz, hr = interval_hull(Z), interval_hull(R)
            assert np.all(hr.lower <= hz.lower + 1e-8) and np.all(hr.upper >= hz.upper - 1e-8)

    def test_target_below_dimension(self):
        with pytest.raises(ValueError):
            reduce_generators(random_cz(np.random.default_rng(6), 3, 5, 0), 2)

    def test_scaling_invariance(self):
        # the frame choice depends on volume ratios only
        rng = np.random.default_rng(7)
        Z = random_cz(rng, 2, 8, 0)
        S = np.diag([1e3, 1e-2])
        a = reduce_generators(Z, 3)
        b = reduce_generators(ConstrainedZonotope(S @ Z.G, S @ Z.c), 3)
        assert np.allclose(S @ a.G, b.G, rtol=1e-8, atol=1e-10)


class TestReduce:
    def test_compliant_is_identity(self):
        Z = random_cz(np.random.default_rng(8), 3, 6, 2)
        assert reduce(Z, ReductionLimits(6, 2)) is Z
        assert reduce(Z, ReductionLimits.unlimited()) is Z

    def test_zero_columns_pruned_exactly(self):
        G = np.array([[1.0, 0.0, 0.5], [0.0, 0.0, 1.0]])
        Z = ConstrainedZonotope(G, np.zeros(2), [[1.0, 0.0, 1.0]], [0.2])
        P = prune(ConstrainedZonotope(np.hstack([G, np.zeros((2, 1))]), np.zeros(2), [[1.0, 0.0, 1.0, 0.0]], [0.2]))
        assert P.n_gen == 2
        R = reduce(ConstrainedZonotope(np.hstack([G, np.zeros((2, 1))]), np.zeros(2), [[1.0, 0.0, 1.0, 0.0]], [0.2]), ReductionLimits(3, 1))
        assert R.n_gen == 2 and R.n_con == 1
        assert np.allclose(interval_hull(R).lower, interval_hull(Z).lower)

    def test_limits_and_soundness(self):
        rng = np.random.default_rng(9)
        for _ in range(60):
            n = int(rng.integers(1, 4))
            n_g = int(rng.integers(n + 1, 11))
            Z = random_cz(rng, n, n_g, int(rng.integers(0, min(4, n_g))))
            lim = ReductionLimits(int(rng.integers(n, 7)), int(rng.integers(0, 3)))
            R = reduce(Z, lim)
            assert R.n_gen <= lim.max_generators and R.n_con <= lim.max_constraints
            assert_encloses(R, Z, rng)

    def test_relaxation(self):
        rng = np.random.default_rng(10)
        Z = random_cz(rng, 3, 8, 3)
        R = relax_to_zonotope(Z, 5)
        assert R.is_zonotope and R.n_gen <= 5
        assert_encloses(R, Z, rng)

    def test_limits_validated(self):
        with pytest.raises(ValueError):
            ReductionLimits(0, 1)
        with pytest.raises(ValueError):
            ReductionLimits(3, -1)
