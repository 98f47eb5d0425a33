"""Dense linear algebra and linear programming substrate.

Everything else in the package talks to LAPACK and HiGHS through this module,
so tolerances and status conventions live in one place.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "LpStatus",
    "LpProblem",
    "LpResult",
    "solve_lp",
    "svd",
    "rank_of",
    "as_matrix",
    "as_vector",
]

LP_FEAS_TOL = 1e-9
RANK_TOL = 1e-9


def as_matrix(M, rows=None, cols=None, name="matrix"):
    """Coerce ``M`` to a finite 2-D float array, optionally checking its shape."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        if rows is not None:
            M = M.reshape(rows, -1)
        elif cols is not None:
            M = M.reshape(-1, cols)
        else:
            M = M.reshape(1, -1)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if rows is not None and M.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {M.shape[1]}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_vector(v, size=None, name="vector"):
    v = np.asarray(v, dtype=float).reshape(-1)
    if size is not None and v.size != size:
        raise ValueError(f"{name} must have length {size}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


_JACOBI_SWEEPS = 60


def _complete_basis(Q, k):
    """Extend the first ``k`` orthonormal columns of ``Q`` to a full basis.

    Candidate directions are the unit vectors in order, so columns that are
    already canonical stay canonical.
    """
    m = Q.shape[0]
    basis = [Q[:, i] for i in range(k)]
    for e in np.eye(m):
        if len(basis) == m:
            break
        v = e.copy()
        for _ in range(2):  # re-orthogonalise once for stability
            for q in basis:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    return np.column_stack(basis) if basis else np.zeros((m, 0))


def _jacobi_tall(M):
    """One-sided Jacobi on the columns of ``M`` (rows >= columns)."""
    m, n = M.shape
    W = M.copy()
    V = np.eye(n)
    eps = np.finfo(float).eps
    # columns below this squared norm are numerically zero and left alone
    negligible = (eps * np.linalg.norm(M)) ** 2
    for _ in range(_JACOBI_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = W[:, p] @ W[:, p]
                beta = W[:, q] @ W[:, q]
                gamma = W[:, p] @ W[:, q]
                if min(alpha, beta) <= negligible or abs(gamma) <= eps * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                Wp, Wq = W[:, p].copy(), W[:, q]
                W[:, p] = cs * Wp - sn * Wq
                W[:, q] = sn * Wp + cs * Wq
                Vp, Vq = V[:, p].copy(), V[:, q]
                V[:, p] = cs * Vp - sn * Vq
                V[:, q] = sn * Vp + cs * Vq
        if not rotated:
            break
    else:
        raise np.linalg.LinAlgError("Jacobi SVD did not converge")
    S = np.linalg.norm(W, axis=0)
    order = np.argsort(-S, kind="stable")
    S, W, V = S[order], W[:, order], V[:, order]
    k = int(np.count_nonzero(S > np.finfo(float).eps * max(m, n) * (S[0] if n else 0.0)))
    U = np.zeros((m, m))
    U[:, :k] = W[:, :k] / S[:k]
    U = _complete_basis(U, k)
    return U, S, V


def svd(M):
    """Full singular value decomposition ``M = U @ diag(S) @ V.T``.

    One-sided Jacobi rotations on the columns. Singular values come back in
    descending order (ties keep their column order), so a diagonal input with
    sorted entries yields identity factors. ``U`` and ``V`` are square and
    orthonormal; ``S`` has ``min(M.shape)`` entries.

    Raises:
        numpy.linalg.LinAlgError: if the rotations do not converge.
    """
    M = as_matrix(M, name="M")
    m, n = M.shape
    if m == 0 or n == 0:
        return np.eye(m), np.zeros(0), np.eye(n)
    if m >= n:
        return _jacobi_tall(M)
    V, S, U = _jacobi_tall(M.T)
    return U, S, V


def rank_of(M, tol=RANK_TOL):
    """Number of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M, name="M")
    if M.size == 0:
        return 0
    S = np.linalg.svd(M, compute_uv=False)
    if S.size == 0 or S[0] == 0.0:
        return 0
    return int(np.count_nonzero(S > tol * S[0]))


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """``min objective @ x`` s.t. ``eq_lhs @ x = eq_rhs`` and ``lower <= x <= upper``.

    Bounds may be infinite. Optional inequality rows ``ub_lhs @ x <= ub_rhs``
    are accepted for convenience; they are not needed by the set calculus.
    """

    objective: np.ndarray
    eq_lhs: np.ndarray
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    ub_lhs: np.ndarray | None = None
    ub_rhs: np.ndarray | None = None

    def __post_init__(self):
        n = np.asarray(self.objective).reshape(-1).size
        eq_rhs = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
        eq_lhs = np.asarray(self.eq_lhs, dtype=float)
        eq_lhs = eq_lhs.reshape(-1, n) if n else eq_lhs.reshape(eq_rhs.size if eq_lhs.size == 0 else -1, 0)
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if eq_lhs.shape[0] != eq_rhs.size:
            raise ValueError(
                f"eq_lhs has {eq_lhs.shape[0]} rows but eq_rhs has {eq_rhs.size} entries"
            )
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "objective", np.asarray(self.objective, dtype=float).reshape(-1))
        object.__setattr__(self, "eq_lhs", eq_lhs)
        object.__setattr__(self, "eq_rhs", eq_rhs)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.ub_lhs is not None:
            ub_lhs = np.asarray(self.ub_lhs, dtype=float).reshape(-1, n)
            ub_rhs = np.asarray(self.ub_rhs, dtype=float).reshape(-1)
            if ub_lhs.shape[0] != ub_rhs.size:
                raise ValueError("ub_lhs and ub_rhs disagree in row count")
            object.__setattr__(self, "ub_lhs", ub_lhs)
            object.__setattr__(self, "ub_rhs", ub_rhs)

    @property
    def n_vars(self):
        return self.objective.size


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    value: float
    point: np.ndarray
    # multipliers of the equality rows (sensitivity of the optimum to eq_rhs)
    eq_duals: np.ndarray | None = None

    @property
    def optimal(self):
        return self.status is LpStatus.OPTIMAL


def solve_lp(p: LpProblem) -> LpResult:
    """Solve a small dense LP with HiGHS at tight feasibility tolerances.

    Infeasible problems report ``value=+inf``, unbounded ones ``value=-inf``.
    """
    n = p.n_vars
    if n == 0:
        if p.eq_rhs.size and np.max(np.abs(p.eq_rhs)) > LP_FEAS_TOL:
            return LpResult(LpStatus.INFEASIBLE, np.inf, np.zeros(0))
        if p.ub_rhs is not None and np.any(p.ub_rhs < -LP_FEAS_TOL):
            return LpResult(LpStatus.INFEASIBLE, np.inf, np.zeros(0))
        return LpResult(LpStatus.OPTIMAL, 0.0, np.zeros(0), np.zeros(p.eq_rhs.size))
    bounds = np.column_stack([p.lower, p.upper])
    res = linprog(
        p.objective,
        A_ub=p.ub_lhs,
        b_ub=p.ub_rhs,
        A_eq=p.eq_lhs if p.eq_lhs.shape[0] else None,
        b_eq=p.eq_rhs if p.eq_rhs.size else None,
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": LP_FEAS_TOL,
            "dual_feasibility_tolerance": LP_FEAS_TOL,
        },
    )
    if res.status == 0:
        duals = None
        if p.eq_rhs.size and res.eqlin is not None:
            duals = np.asarray(res.eqlin.marginals, dtype=float)
        return LpResult(LpStatus.OPTIMAL, float(res.fun), np.asarray(res.x, dtype=float), duals)
    if res.status == 2:
        return LpResult(LpStatus.INFEASIBLE, np.inf, np.full(n, np.nan))
    if res.status == 3:
        return LpResult(LpStatus.UNBOUNDED, -np.inf, np.full(n, np.nan))
    raise RuntimeError(f"LP solver failed: {res.message}")
