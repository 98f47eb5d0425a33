"""Constrained zonotopes and their exact set calculus.

A constrained zonotope (CZ) is stored in constrained generator form

    Z = {c + G xi : ||xi||_inf <= 1, A xi = b}

with ``G`` of shape (n, n_g), ``c`` of length n, ``A`` of shape (n_c, n_g) and
``b`` of length n_c. ``n_c == 0`` is an ordinary zonotope. Linear maps,
Minkowski sums and generalized intersections are closed-form on the tuple;
everything that asks a question about the point set (membership, emptiness,
bounds) is answered by a linear program in the factor space of ``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, null_space
from scipy.spatial import ConvexHull

from .numerics import LP_FEAS_TOL, LpProblem, LpStatus, as_matrix, as_vector, solve_lp

__all__ = [
    "EmptySetError",
    "ConstrainedZonotope",
    "IntervalBox",
    "linear_map",
    "minkowski_sum",
    "generalized_intersection",
    "cartesian_product",
    "contains_point",
    "is_empty",
    "interval_hull",
    "radius",
    "support",
    "halfspaces",
    "mc_volume",
    "sample_points",
]

MEMBERSHIP_TOL = 1e-8


class EmptySetError(ValueError):
    """Raised when a bound is requested for a set with no points."""


@dataclass(frozen=True, eq=False)
class ConstrainedZonotope:
    G: np.ndarray
    c: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None

    def __post_init__(self):
        c = as_vector(self.c, name="c")
        n = c.size
        G = as_matrix(self.G, rows=n, name="G") if np.size(self.G) else np.zeros((n, 0))
        n_g = G.shape[1]
        b = np.zeros(0) if self.b is None or np.size(self.b) == 0 else as_vector(self.b, name="b")
        if self.A is None or np.size(self.A) == 0:
            # with no generators, constraint rows have no columns but still count
            if b.size and n_g:
                raise ValueError("b given without A")
            A = np.zeros((b.size, n_g))
        else:
            A = as_matrix(self.A, cols=n_g, name="A")
            b = as_vector(b, size=A.shape[0], name="b")
        for name, arr in (("G", G), ("c", c), ("A", A), ("b", b)):
            arr = np.array(arr, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_point(cls, p):
        p = as_vector(p, name="p")
        return cls(np.zeros((p.size, 0)), p)

    @classmethod
    def from_box(cls, lower, upper):
        lower = as_vector(lower, name="lower")
        upper = as_vector(upper, size=lower.size, name="upper")
        if np.any(lower > upper):
            raise ValueError("lower exceeds upper")
        return cls(np.diag((upper - lower) / 2.0), (upper + lower) / 2.0)

    @property
    def dim(self):
        return self.c.size

    @property
    def n_gen(self):
        return self.G.shape[1]

    @property
    def n_con(self):
        return self.A.shape[0]

    @property
    def is_zonotope(self):
        return self.n_con == 0

    def lifted(self):
        """Generator matrix and center of the zonotope {[G; A] xi + [c; -b]}."""
        return np.vstack([self.G, self.A]), np.concatenate([self.c, -self.b])

    def same_as(self, other):
        """Field-wise identity of the two representations (not set equality)."""
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(
                (self.G, self.c, self.A, self.b), (other.G, other.c, other.A, other.b)
            )
        )

    def __add__(self, other):
        if isinstance(other, ConstrainedZonotope):
            return minkowski_sum(self, other)
        return ConstrainedZonotope(self.G, self.c + as_vector(other, self.dim), self.A, self.b)

    __radd__ = __add__

    def __rmatmul__(self, R):
        return linear_map(R, self)

    def __neg__(self):
        return ConstrainedZonotope(-self.G, -self.c, self.A, self.b)

    def __repr__(self):
        return f"ConstrainedZonotope(dim={self.dim}, n_gen={self.n_gen}, n_con={self.n_con})"


@dataclass(frozen=True)
class IntervalBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if np.any(self.lower > self.upper):
            raise ValueError("IntervalBox requires lower <= upper")

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def center(self):
        return (self.upper + self.lower) / 2.0

    @property
    def volume(self):
        return float(np.prod(self.width))

    def contains(self, p, tol=0.0):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))


def linear_map(R, Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Image ``{R z : z in Z}``; constraints are untouched."""
    R = as_matrix(R, cols=Z.dim, name="R")
    return ConstrainedZonotope(R @ Z.G, R @ Z.c, Z.A, Z.b)


def minkowski_sum(Z: ConstrainedZonotope, W: ConstrainedZonotope) -> ConstrainedZonotope:
    if Z.dim != W.dim:
        raise ValueError(f"dimension mismatch in Minkowski sum: {Z.dim} vs {W.dim}")
    return ConstrainedZonotope(
        np.hstack([Z.G, W.G]),
        Z.c + W.c,
        block_diag(Z.A, W.A),
        np.concatenate([Z.b, W.b]),
    )


def generalized_intersection(Z: ConstrainedZonotope, R, Y: ConstrainedZonotope) -> ConstrainedZonotope:
    """``{z in Z : R z in Y}``.

    The generators of ``Y`` become extra factors that only appear in the
    constraint rows; the coupling rows are ``R G_z xi - G_y eta = c_y - R c_z``.
    """
    R = as_matrix(R, rows=Y.dim, cols=Z.dim, name="R")
    G = np.hstack([Z.G, np.zeros((Z.dim, Y.n_gen))])
    A = np.vstack([block_diag(Z.A, Y.A), np.hstack([R @ Z.G, -Y.G])])
    b = np.concatenate([Z.b, Y.b, Y.c - R @ Z.c])
    return ConstrainedZonotope(G, Z.c, A, b)


def cartesian_product(Z: ConstrainedZonotope, W: ConstrainedZonotope) -> ConstrainedZonotope:
    return ConstrainedZonotope(
        block_diag(Z.G, W.G) if Z.n_gen + W.n_gen else np.zeros((Z.dim + W.dim, 0)),
        np.concatenate([Z.c, W.c]),
        block_diag(Z.A, W.A),
        np.concatenate([Z.b, W.b]),
    )


def _factor_lp(Z, objective, extra_lhs=None, extra_rhs=None, slack=0.0):
    lhs, rhs = Z.A, Z.b
    if extra_lhs is not None:
        lhs = np.vstack([extra_lhs, lhs])
        rhs = np.concatenate([extra_rhs, rhs])
    return LpProblem(objective, lhs, rhs, -1.0 - slack, 1.0 + slack)


def contains_point(Z: ConstrainedZonotope, p, tol=MEMBERSHIP_TOL) -> bool:
    """Membership by one LP feasibility problem; ``tol`` inflates the factor box."""
    p = as_vector(p, size=Z.dim, name="p")
    if Z.n_gen == 0:
        return bool(np.max(np.abs(p - Z.c), initial=0.0) <= max(tol, LP_FEAS_TOL)) and (
            Z.n_con == 0 or np.max(np.abs(Z.b)) <= max(tol, LP_FEAS_TOL)
        )
    res = solve_lp(_factor_lp(Z, np.zeros(Z.n_gen), Z.G, p - Z.c, slack=tol))
    return res.status is LpStatus.OPTIMAL


def is_empty(Z: ConstrainedZonotope, tol=MEMBERSHIP_TOL) -> bool:
    if Z.n_con == 0:
        return False
    if Z.n_gen == 0:
        return bool(np.max(np.abs(Z.b)) > max(tol, LP_FEAS_TOL))
    res = solve_lp(_factor_lp(Z, np.zeros(Z.n_gen), slack=tol))
    return res.status is LpStatus.INFEASIBLE


def support(Z: ConstrainedZonotope, d):
    """Return ``(max_{z in Z} d @ z, maximizer)``.

    Raises:
        EmptySetError: if ``Z`` has no points.
    """
    d = as_vector(d, size=Z.dim, name="d")
    if Z.n_con == 0:
        g = d @ Z.G
        xi = np.sign(g)
        return float(d @ Z.c + np.abs(g).sum()), Z.c + Z.G @ xi
    res = solve_lp(_factor_lp(Z, -(d @ Z.G)))
    if res.status is not LpStatus.OPTIMAL:
        raise EmptySetError("support requested for an empty constrained zonotope")
    z = Z.c + Z.G @ res.point
    return float(d @ z), z


def interval_hull(Z: ConstrainedZonotope) -> IntervalBox:
    """Tightest axis-aligned box around ``Z`` (2n LPs unless ``Z`` is a zonotope)."""
    if Z.n_con == 0:
        half = np.abs(Z.G).sum(axis=1)
        return IntervalBox(Z.c - half, Z.c + half)
    lower = np.empty(Z.dim)
    upper = np.empty(Z.dim)
    for i in range(Z.dim):
        g = Z.G[i]
        lo = solve_lp(_factor_lp(Z, g))
        hi = solve_lp(_factor_lp(Z, -g))
        if lo.status is not LpStatus.OPTIMAL or hi.status is not LpStatus.OPTIMAL:
            raise EmptySetError("interval hull of an empty constrained zonotope")
        lower[i] = Z.c[i] + lo.value
        upper[i] = Z.c[i] - hi.value
    # LP round-off can leave a degenerate coordinate a hair inverted
    upper = np.maximum(upper, lower)
    return IntervalBox(lower, upper)


def radius(Z: ConstrainedZonotope) -> float:
    """Half the longest edge of the interval hull."""
    return float(np.max(interval_hull(Z).width, initial=0.0) / 2.0)


HALFSPACE_MAX_DIM = 4


def halfspaces(Z: ConstrainedZonotope, tol=1e-9, max_rounds=200):
    """Facet inequalities ``H z <= k`` of a low-dimensional set.

    The polytope is rebuilt from its support function: starting from a few
    support points, every facet of the current hull is pushed outwards by a
    support query until none moves. The hull then agrees with ``Z`` up to
    ``tol`` relative to the set's size.

    Returns ``None`` if ``Z`` is not full-dimensional.

    Raises:
        EmptySetError: if ``Z`` is empty.
        ValueError: above :data:`HALFSPACE_MAX_DIM` dimensions.
    """
    n = Z.dim
    if n > HALFSPACE_MAX_DIM:
        raise ValueError(f"halfspace enumeration is limited to {HALFSPACE_MAX_DIM} dimensions")
    rng = np.random.default_rng(0)
    dirs = np.vstack([np.eye(n), -np.eye(n), rng.standard_normal((2 * n + 2, n))])
    pts = np.array([support(Z, d)[1] for d in dirs])
    scale = max(float(np.max(np.ptp(pts, axis=0), initial=0.0)), 1e-300)
    if np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-9 * scale) < n:
        return None
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([pts.max(), -pts.min()])
    for _ in range(max_rounds):
        hull = ConvexHull(pts)
        eq = np.unique(np.round(hull.equations, 12), axis=0)
        new = []
        for normal, off in zip(eq[:, :-1], eq[:, -1]):
            h, z = support(Z, normal)
            if h > -off + tol * scale:
                new.append(z)
        if not new:
            return eq[:, :-1], -eq[:, -1]
        pts = np.vstack([pts[hull.vertices], new])
    raise RuntimeError("halfspace enumeration did not converge")


def mc_volume(Z: ConstrainedZonotope, samples=1000, seed=0):
    """Hit-or-miss volume estimate against the interval hull.

    Returns ``(estimate, stderr)`` where stderr is the binomial standard error
    of the hit fraction scaled by the hull volume. Membership is decided by
    facet inequalities in low dimensions and by one LP per sample otherwise.
    """
    if samples < 1000:
        raise ValueError("mc_volume needs at least 1000 samples")
    hull = interval_hull(Z)
    box_volume = hull.volume
    if box_volume == 0.0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    pts = hull.lower + rng.random((samples, Z.dim)) * hull.width
    if Z.n_con == 0 and Z.n_gen == Z.dim and abs(np.linalg.det(Z.G)) > 1e-12:
        # parallelotope: membership is a linear solve
        xi = np.linalg.solve(Z.G, (pts - Z.c).T)
        hits = int(np.count_nonzero(np.max(np.abs(xi), axis=0) <= 1.0 + MEMBERSHIP_TOL))
    elif Z.dim <= HALFSPACE_MAX_DIM:
        hs = halfspaces(Z)
        if hs is None:
            return 0.0, 0.0
        H, k = hs
        slack = MEMBERSHIP_TOL * (1.0 + np.abs(k))
        hits = int(np.count_nonzero(np.all(pts @ H.T <= k + slack, axis=1)))
    else:
        hits = sum(contains_point(Z, p) for p in pts)
    frac = hits / samples
    return box_volume * frac, box_volume * np.sqrt(frac * (1.0 - frac) / samples)


def _max_margin_point(A, b):
    """Point of ``{A xi = b}`` deepest inside the unit box, and its margin."""
    n_g = A.shape[1]
    # variables (xi, s): maximize s with |xi_l| + s <= 1
    obj = np.zeros(n_g + 1)
    obj[-1] = -1.0
    ones = np.eye(n_g)
    ub_lhs = np.vstack(
        [np.hstack([ones, np.ones((n_g, 1))]), np.hstack([-ones, np.ones((n_g, 1))])]
    )
    ub_rhs = np.ones(2 * n_g)
    lhs = np.hstack([A, np.zeros((A.shape[0], 1))])
    lower = np.full(n_g + 1, -np.inf)
    upper = np.full(n_g + 1, np.inf)
    upper[-1] = 1.0
    res = solve_lp(LpProblem(obj, lhs, b, lower, upper, ub_lhs, ub_rhs))
    if res.status is not LpStatus.OPTIMAL or res.point[-1] < -LP_FEAS_TOL:
        raise EmptySetError("cannot sample from an empty constrained zonotope")
    return res.point[:-1], res.point[-1]


def sample_factors(A, b, count, rng, burn_in=None, thin=5):
    """Draw ``count`` points of ``{xi : ||xi||_inf <= 1, A xi = b}``.

    Without constraints the draw is exactly uniform on the box. Otherwise a
    hit-and-run walk restricted to the null space of ``A`` is used, started at
    the max-margin point; it is uniform in the limit and deterministic per rng.
    """
    n_g = A.shape[1]
    if A.shape[0] == 0:
        return rng.uniform(-1.0, 1.0, size=(count, n_g))
    xi, _ = _max_margin_point(A, b)
    N = null_space(A)
    out = np.empty((count, n_g))
    if N.shape[1] == 0:
        out[:] = xi
        return out
    burn_in = 20 * N.shape[1] if burn_in is None else burn_in
    xi = np.clip(xi, -1.0, 1.0)
    total = burn_in + count * thin
    for it in range(total):
        d = N @ rng.standard_normal(N.shape[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (1.0 - xi) / d
            t2 = (-1.0 - xi) / d
        tmax = np.min(np.where(d > 1e-14, t1, np.where(d < -1e-14, t2, np.inf)))
        tmin = np.max(np.where(d > 1e-14, t2, np.where(d < -1e-14, t1, -np.inf)))
        if np.isfinite(tmax) and np.isfinite(tmin) and tmax > tmin:
            xi = np.clip(xi + rng.uniform(tmin, tmax) * d, -1.0, 1.0)
        k = it - burn_in
        if k >= 0 and k % thin == thin - 1:
            out[k // thin] = xi
    return out


def sample_points(Z: ConstrainedZonotope, count, seed=None, rng=None):
    """Sample points of ``Z`` by sampling its factor set (see ``sample_factors``)."""
    rng = np.random.default_rng(seed) if rng is None else rng
    xi = sample_factors(Z.A, Z.b, count, rng)
    return Z.c + xi @ Z.G.T
