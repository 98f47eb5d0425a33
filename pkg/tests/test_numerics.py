import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from czkit.numerics import LpProblem, LpStatus, as_matrix, as_vector, rank_of, solve_lp, svd


def _check_svd(M, U, S, V):
    scale = 1.0 + np.max(np.abs(M), initial=0.0)
    k = S.size
    assert np.max(np.abs(U[:, :k] @ np.diag(S) @ V[:, :k].T - M), initial=0.0) <= 1e-10 * scale
    assert np.allclose(U.T @ U, np.eye(U.shape[1]), atol=1e-10)
    assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-10)
    assert np.all(np.diff(S) <= 0)
    assert np.all(S >= 0)


class TestSvd:
    def test_singular_descriptor_matrix(self):
        U, S, V = svd(np.diag([1.0, 1.0, 0.0]))
        assert np.allclose(S, [1, 1, 0])
        assert np.allclose(np.abs(U), np.eye(3))
        assert np.allclose(np.abs(V), np.eye(3))

    def test_identity(self):
        _, S, _ = svd(np.eye(2))
        assert np.allclose(S, [1, 1])

    def test_known_construction(self):
        rng = np.random.default_rng(3)
        U0, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        V0, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        M = U0 @ np.diag([3.0, 2.0, 1.0]) @ V0.T
        U, S, V = svd(M)
        assert np.allclose(S, [3, 2, 1], atol=1e-12)
        _check_svd(M, U, S, V)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            m, n = rng.integers(1, 11, size=2)
            M = rng.normal(size=(m, n)) * 10.0 ** rng.uniform(-3, 3)
            if rng.random() < 0.2:
                # rank-deficient case
                M[:, rng.integers(n)] = 0.0
            _check_svd(M, *svd(M))

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(-1e3, 1e3)))
    def test_reconstruction_property(self, M):
        _check_svd(M, *svd(M))

    def test_matches_numpy_singular_values(self):
        rng = np.random.default_rng(1)
        M = rng.normal(size=(7, 4))
        assert np.allclose(svd(M)[1], np.linalg.svd(M, compute_uv=False), atol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            svd(np.array([[1.0, np.nan]]))


class TestRank:
    def test_examples(self):
        assert rank_of(np.diag([1.0, 1.0, 0.0]), 1e-9) == 2
        assert rank_of(np.zeros((3, 3)), 1e-9) == 0
        assert rank_of(np.eye(5), 1e-9) == 5

    def test_outer_product(self):
        assert rank_of(np.outer([1.0, 2.0, 3.0], [1.0, -1.0, 0.5])) == 1


class TestLp:
    def test_box_minimum(self):
        res = solve_lp(LpProblem([1.0], np.zeros((0, 1)), [], [-1.0], [1.0]))
        assert res.status is LpStatus.OPTIMAL
        assert res.value == pytest.approx(-1.0, abs=1e-8)

    def test_margin_of_outside_point(self):
        # variables (xi, delta): min delta, xi = 2, |xi| <= 1 + delta
        p = LpProblem(
            [0.0, 1.0],
            [[1.0, 0.0]],
            [2.0],
            [-np.inf, -np.inf],
            [np.inf, np.inf],
            ub_lhs=[[1.0, -1.0], [-1.0, -1.0]],
            ub_rhs=[1.0, 1.0],
        )
        res = solve_lp(p)
        assert res.status is LpStatus.OPTIMAL
        assert res.value == pytest.approx(1.0, abs=1e-8)

    def test_infeasible(self):
        res = solve_lp(LpProblem([0.0, 0.0], [[1.0, 1.0]], [3.0], -1.0, 1.0))
        assert res.status is LpStatus.INFEASIBLE
        assert res.value == np.inf

    def test_unbounded(self):
        res = solve_lp(LpProblem([-1.0], np.zeros((0, 1)), [], [0.0], [np.inf]))
        assert res.status is LpStatus.UNBOUNDED

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            LpProblem([1.0, 1.0], [[1.0, 1.0]], [1.0, 2.0], -1.0, 1.0)
        with pytest.raises(ValueError):
            LpProblem([1.0], np.zeros((0, 1)), [], [1.0], [0.0])

    @staticmethod
    def _vertex_optimum(c, A, b, lo, hi):
        """Enumerate basic solutions: every choice of nonbasic variables at a bound."""
        n, m = c.size, A.shape[0]
        best = np.inf
        for nonbasic in itertools.combinations(range(n), n - m):
            basic = [j for j in range(n) if j not in nonbasic]
            B = A[:, basic]
            if m and abs(np.linalg.det(B)) < 1e-12:
                continue
            for fix in itertools.product(*[(lo[j], hi[j]) for j in nonbasic]):
                x = np.zeros(n)
                x[list(nonbasic)] = fix
                if m:
                    x[basic] = np.linalg.solve(B, b - A[:, list(nonbasic)] @ np.array(fix))
                if np.all(x >= lo - 1e-9) and np.all(x <= hi + 1e-9):
                    best = min(best, c @ x)
        return best

    def test_vertex_enumeration_agreement(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(300):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(0, n))
            c = rng.normal(size=n)
            A = rng.normal(size=(m, n))
            lo = -rng.uniform(0.5, 2.0, size=n)
            hi = rng.uniform(0.5, 2.0, size=n)
            b = A @ rng.uniform(lo, hi)
            res = solve_lp(LpProblem(c, A, b, lo, hi))
            assert res.status is LpStatus.OPTIMAL
            assert np.allclose(A @ res.point, b, atol=1e-8)
            assert np.all(res.point >= lo - 1e-8) and np.all(res.point <= hi + 1e-8)
            assert res.value == pytest.approx(self._vertex_optimum(c, A, b, lo, hi), abs=1e-7)
            checked += 1
        assert checked == 300

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        A = rng.normal(size=(3, 8))
        p = LpProblem(rng.normal(size=8), A, A @ rng.uniform(-1, 1, 8), -1.0, 1.0)
        r1, r2 = solve_lp(p), solve_lp(p)
        assert r1.status is r2.status
        assert r1.value == r2.value
        assert np.array_equal(r1.point, r2.point)

    def test_duals_are_sensitivities(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(2, 5))
        b = A @ rng.uniform(-0.5, 0.5, 5)
        c = rng.normal(size=5)
        base = solve_lp(LpProblem(c, A, b, -1.0, 1.0))
        step = 1e-6
        for i in range(2):
            db = np.zeros(2)
            db[i] = step
            moved = solve_lp(LpProblem(c, A, b + db, -1.0, 1.0))
            assert (moved.value - base.value) / step == pytest.approx(base.eq_duals[i], abs=1e-4)

    def test_empty_problem(self):
        assert solve_lp(LpProblem(np.zeros(0), np.zeros((0, 0)), [], [], [])).value == 0.0
        assert solve_lp(LpProblem(np.zeros(0), np.zeros((1, 0)), [1.0], [], [])).status is LpStatus.INFEASIBLE


def test_shape_helpers():
    assert as_matrix([[1, 2]], rows=1, cols=2).shape == (1, 2)
    with pytest.raises(ValueError, match="G"):
        as_matrix([[1, 2]], rows=2, name="G")
    with pytest.raises(ValueError):
        as_vector([1.0, np.inf])
