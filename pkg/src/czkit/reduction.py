"""Complexity reduction for constrained zonotopes.

Both routines return outer approximations. Constraint elimination first
rescales the factor box to the bounds implied by the constraints (an exact
rewrite), then drops the box bound of the factor whose release is estimated to
grow the set least and substitutes it out through one constraint row.
Generator reduction encloses the lifted zonotope ``{[G; A] xi + [c; -b]}``
with fewer generators by absorbing generators into a parallelotope frame,
which is sound for the constrained set as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space, qr

from .setops import ConstrainedZonotope

__all__ = [
    "ReductionLimits",
    "factor_bounds",
    "rescale",
    "prune",
    "eliminate_constraint",
    "reduce_generators",
    "reduce",
    "relax_to_zonotope",
]

_PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class ReductionLimits:
    max_generators: int | float = np.inf
    max_constraints: int | float = np.inf

    def __post_init__(self):
        if self.max_generators < 1 or self.max_constraints < 0:
            raise ValueError("limits must be max_generators >= 1, max_constraints >= 0")

    @classmethod
    def unlimited(cls):
        return cls()


def factor_bounds(A, b, sweeps=10):
    """Interval bounds on ``xi`` implied by ``A xi = b`` and the unit box.

    Plain constraint propagation: every row bounds each of its variables by the
    interval range of the others. Sound, cheap, not necessarily tight. Returns
    ``None`` when an empty interval proves the factor set empty.
    """
    n_c, n_g = A.shape
    lo = -np.ones(n_g)
    hi = np.ones(n_g)
    if n_c == 0:
        return lo, hi
    nz = np.abs(A) > _PIVOT_TOL
    safe_A = np.where(nz, A, 1.0)
    for _ in range(sweeps):
        t_lo = np.minimum(A * lo, A * hi)
        t_hi = np.maximum(A * lo, A * hi)
        rest_lo = t_lo.sum(axis=1, keepdims=True) - t_lo
        rest_hi = t_hi.sum(axis=1, keepdims=True) - t_hi
        num_lo = b[:, None] - rest_hi
        num_hi = b[:, None] - rest_lo
        cand_lo = np.where(A > 0, num_lo, num_hi) / safe_A
        cand_hi = np.where(A > 0, num_hi, num_lo) / safe_A
        new_lo = np.max(np.where(nz, cand_lo, -np.inf), axis=0, initial=-np.inf)
        new_hi = np.min(np.where(nz, cand_hi, np.inf), axis=0, initial=np.inf)
        new_lo = np.maximum(lo, new_lo)
        new_hi = np.minimum(hi, new_hi)
        if np.any(new_lo > new_hi + 1e-9):
            return None
        new_hi = np.maximum(new_hi, new_lo)
        change = max(np.max(new_lo - lo), np.max(hi - new_hi))
        lo, hi = new_lo, new_hi
        if change < 1e-12:
            break
    return lo, hi


def rescale(Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Shrink the factor box to the propagated bounds; the point set is unchanged."""
    if Z.n_con == 0:
        return Z
    bounds = factor_bounds(Z.A, Z.b)
    if bounds is None:
        return Z
    lo, hi = bounds
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    if np.all(half == 1.0):
        return Z
    return ConstrainedZonotope(Z.G * half, Z.c + Z.G @ mid, Z.A * half, Z.b - Z.A @ mid)


def prune(Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Drop factors with all-zero columns and trivially satisfied zero rows (exact)."""
    keep_cols = np.any(Z.G != 0.0, axis=0) | np.any(Z.A != 0.0, axis=0)
    A = Z.A[:, keep_cols]
    keep_rows = np.any(A != 0.0, axis=1) | (Z.b != 0.0)
    if np.all(keep_cols) and np.all(keep_rows):
        return Z
    return ConstrainedZonotope(Z.G[:, keep_cols], Z.c, A[keep_rows], Z.b[keep_rows])


def _release_scores(Z):
    """Estimated growth of the set when the box bound of each factor is dropped."""
    A, b, G = Z.A, Z.b, Z.G
    absA = np.abs(A)
    nz = absA > _PIVOT_TOL
    # range each row allows for factor j when the other factors sweep their boxes
    rest = absA.sum(axis=1, keepdims=True) - absA
    with np.errstate(divide="ignore", invalid="ignore"):
        reach = np.where(nz, (np.abs(b)[:, None] + rest) / np.where(nz, absA, 1.0), np.inf)
    excess = np.maximum(np.min(reach, axis=0) - 1.0, 0.0)
    # x-space motion per unit of xi_j along the constraint manifold
    N = null_space(A)
    P = N @ N.T
    diag = np.diag(P).copy()
    moving = diag > 1e-12
    effect = np.zeros(Z.n_gen)
    if np.any(moving):
        effect[moving] = np.linalg.norm(G @ P[:, moving], axis=0) / diag[moving]
    score = np.full(Z.n_gen, np.inf)
    finite = np.isfinite(excess)
    score[finite] = excess[finite] * effect[finite]
    score[~np.any(nz, axis=0)] = np.inf
    return score


def eliminate_constraint(Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Remove a constraint and a factor, returning a superset of ``Z``.

    Factors pinned by the constraints are dropped exactly, which can remove
    more than one factor at once.
    """
    if Z.n_con == 0:
        raise ValueError("no constraint to eliminate")
    n_con = Z.n_con
    Z = prune(rescale(Z))
    if Z.n_con < n_con:
        # rescaling pinned factors and emptied a row: removed exactly
        return Z
    scores = _release_scores(Z) if Z.n_gen else np.full(1, np.inf)
    j = int(np.argmin(scores))  # first minimum = lowest index on ties
    if not np.isfinite(scores[j]):
        # every entry is below the pivot tolerance: the factors are pinned up
        # to round-off, so drop the weakest row, which only enlarges the set
        i = int(np.argmin(np.max(np.abs(Z.A), axis=1, initial=0.0)))
        rows = np.arange(Z.n_con) != i
        return prune(ConstrainedZonotope(Z.G, Z.c, Z.A[rows], Z.b[rows]))
    i = int(np.argmax(np.abs(Z.A[:, j])))
    a_ij = Z.A[i, j]
    row = Z.A[i] / a_ij
    G = Z.G - np.outer(Z.G[:, j], row)
    c = Z.c + Z.G[:, j] * (Z.b[i] / a_ij)
    A = Z.A - np.outer(Z.A[:, j], row)
    b = Z.b - Z.A[:, j] * (Z.b[i] / a_ij)
    cols = np.arange(Z.n_gen) != j
    rows = np.arange(Z.n_con) != i
    return ConstrainedZonotope(G[:, cols], c, A[np.ix_(rows, cols)], b[rows])


def _absorb(L, target):
    """Enclose the zonotope ``L B`` with ``target`` generators.

    A frame of ``d`` generators is picked greedily by volume (column-pivoted
    QR); then, one at a time, the generator whose absorption into the frame
    parallelotope ``T diag(1 + |T^-1 g|)`` grows its volume least is absorbed.
    Both choices depend only on volume ratios, so the result does not depend
    on how the coordinates are scaled.
    """
    d, n_g = L.shape
    if n_g <= target:
        return L
    # work inside the span of L so the frame is invertible
    Q, R, _ = qr(L, pivoting=True, mode="economic")
    diag = np.abs(np.diag(R))
    r = int(np.count_nonzero(diag > 1e-12 * max(diag[0], 1e-300))) if diag.size else 0
    if r == 0:
        return np.zeros((d, 0))
    Q = Q[:, :r]
    M = Q.T @ L
    if target < r:
        raise ValueError(f"target {target} is below the rank {r} of the generators")
    while M.shape[1] > target:
        _, _, piv = qr(M, pivoting=True, mode="economic")
        frame = np.sort(piv[:r])
        T = M[:, frame]
        rest = np.setdiff1d(np.arange(M.shape[1]), frame)
        coef = np.linalg.solve(T, M[:, rest])
        cost = np.log1p(np.abs(coef)).sum(axis=0)
        k = int(np.argmin(cost))
        M[:, frame] = T * (1.0 + np.abs(coef[:, k]))
        M = np.delete(M, rest[k], axis=1)
    return Q @ M


def reduce_generators(Z: ConstrainedZonotope, target: int) -> ConstrainedZonotope:
    """Enclose ``Z`` with at most ``target`` generators.

    Works on the lifted zonotope, so constraints are eliminated first if
    ``dim + n_con`` would not leave room for the frame generators.
    """
    if target < Z.dim:
        raise ValueError(f"target {target} is below the set dimension {Z.dim}")
    if Z.n_gen <= target:
        return Z
    while Z.n_con and Z.dim + Z.n_con > target:
        Z = eliminate_constraint(Z)
        if Z.n_gen <= target:
            return Z
    L, _ = Z.lifted()
    L = _absorb(L, target)
    n = Z.dim
    return ConstrainedZonotope(L[:n], Z.c, L[n:], Z.b)


def reduce(Z: ConstrainedZonotope, lim: ReductionLimits) -> ConstrainedZonotope:
    """Outer-approximate ``Z`` within ``lim``.

    Constraints are eliminated first. Each elimination also removes a factor,
    so surplus generators are shed the same way while constraints remain;
    only then are surplus generators absorbed into a frame.
    """
    if Z.n_gen <= lim.max_generators and Z.n_con <= lim.max_constraints:
        return prune(Z)
    Z = prune(Z)
    while Z.n_con > lim.max_constraints or (Z.n_con and Z.n_gen > lim.max_generators):
        Z = eliminate_constraint(Z)
    if Z.n_gen > lim.max_generators:
        Z = reduce_generators(Z, int(lim.max_generators))
    return Z


def relax_to_zonotope(Z: ConstrainedZonotope, max_generators=None) -> ConstrainedZonotope:
    """Eliminate every constraint, then optionally cap the generator count."""
    Z = prune(Z)
    while Z.n_con:
        Z = eliminate_constraint(Z)
    if max_generators is not None:
        Z = reduce_generators(Z, max_generators)
    return Z
