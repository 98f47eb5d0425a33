"""Active fault diagnosis with constrained-zonotope reachable sets.

A bank of descriptor models is given, exactly one of which drives the plant.
For an input sequence ``u = (u_0, ..., u_N)`` each model has an output
reachable set ``Y_N^i(u)``; the input *separates* the bank when these sets are
pairwise disjoint, so that one output sample identifies the model.

Per model the state is augmented to ``z = (T^-1 x, w)`` so the static
relations become equality constraints of the reachable sets. The centres and
constraint right-hand sides of those sets are affine in ``u``, which turns the
disjointness of a pair into "a lifted point ``N u`` lies outside a fixed
zonotope". The distance outside is measured by a small LP, and the input design
searches for the cheapest sequence that keeps every pair at least ``eps``
outside.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import minimize

from .estimator import DescriptorModel, RegularityError, SvdTransform, decompose
from .numerics import LpProblem, LpStatus, as_vector, solve_lp
from .reduction import prune, reduce_generators
from .setops import ConstrainedZonotope, IntervalBox, cartesian_product, linear_map, sample_points

__all__ = [
    "ModelBank",
    "AugmentedModel",
    "ReachTensors",
    "SeparationProblem",
    "SeparationCertificate",
    "InputSequence",
    "DesignResult",
    "augment",
    "initial_feasible_set",
    "reach_recursive",
    "build_tensors",
    "output_reach",
    "output_sets",
    "separation_problem",
    "verify_input",
    "design_input",
    "sample_outputs",
]

log = logging.getLogger(__name__)

SEPARATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ModelBank:
    """Candidate models sharing the uncertainty sets and the input box."""

    models: tuple
    X0: ConstrainedZonotope
    W: ConstrainedZonotope
    V: ConstrainedZonotope
    Xa: ConstrainedZonotope
    U_box: IntervalBox

    def __post_init__(self):
        models = tuple(self.models)
        if not models:
            raise ValueError("a model bank needs at least one model")
        ref = models[0]
        for i, m in enumerate(models):
            if not isinstance(m, DescriptorModel):
                raise TypeError(f"model {i} is not a DescriptorModel")
            for attr in ("n", "n_u", "n_w", "n_y", "n_v"):
                if getattr(m, attr) != getattr(ref, attr):
                    raise ValueError(f"model {i} has {attr}={getattr(m, attr)}, model 0 has {getattr(ref, attr)}")
        for name, Z, dim in (("X0", self.X0, ref.n), ("W", self.W, ref.n_w), ("V", self.V, ref.n_v), ("Xa", self.Xa, ref.n)):
            if Z.dim != dim:
                raise ValueError(f"{name} has dimension {Z.dim}, models need {dim}")
        lo = np.asarray(self.U_box.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.U_box.upper, dtype=float).reshape(-1)
        if lo.size != ref.n_u or hi.size != ref.n_u:
            raise ValueError(f"input box bounds must have {ref.n_u} entries")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("input box bounds must not be NaN")
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "U_box", IntervalBox(lo, hi))

    @property
    def n_models(self):
        return len(self.models)

    @property
    def n_u(self):
        return self.models[0].n_u

    @property
    def pairs(self):
        return list(itertools.combinations(range(self.n_models), 2))


@dataclass(frozen=True, eq=False)
class AugmentedModel:
    """One model rewritten in the augmented coordinates ``z = (T^-1 x, w)``.

    ``Az_dyn`` / ``Az_static`` are ``[A~ Bw~]`` and ``[A^ Bw^]``; the dynamic
    rows give ``z~_k`` from ``z_{k-1}`` and the static rows must vanish at every
    step once ``B^ u_k`` is added. ``Za`` is ``T^-1 Xa x W``.
    """

    model: DescriptorModel
    transform: SvdTransform
    P: np.ndarray
    F: np.ndarray
    Az_dyn: np.ndarray
    Az_static: np.ndarray
    B_dyn: np.ndarray
    B_static: np.ndarray
    Za: ConstrainedZonotope

    @property
    def n_z(self):
        return self.transform.n_z

    @property
    def dim(self):
        return self.P.shape[1]

    @property
    def T(self):
        return self.transform.T

    def lift(self, x, w):
        return np.concatenate([self.transform.T_inv @ x, w])

    def unlift(self, z):
        return self.T @ (self.P @ z)


def augment(bank: ModelBank, tol=1e-9):
    """Augmented form of every model in the bank."""
    out = []
    for m in bank.models:
        t = decompose(m, tol)
        P = np.hstack([np.eye(m.n), np.zeros((m.n, m.n_w))])
        out.append(
            AugmentedModel(
                model=m,
                transform=t,
                P=P,
                F=m.C @ t.T @ P,
                Az_dyn=np.hstack([t.At, t.Bwt]),
                Az_static=np.hstack([t.Ac, t.Bwc]),
                B_dyn=t.Bt,
                B_static=t.Bc,
                Za=cartesian_product(linear_map(t.T_inv, bank.Xa), bank.W),
            )
        )
    return out


def initial_feasible_set(am: AugmentedModel, X0, W, u0):
    """States ``z_0`` of ``T^-1 X0 x W`` that satisfy the static relations at k=0.

    The result may be empty, which means ``u0`` is incompatible with ``X0``.
    """
    Zz = cartesian_product(linear_map(am.transform.T_inv, X0), W)
    u0 = as_vector(u0, am.model.n_u, "u0")
    A0 = np.vstack([Zz.A, am.Az_static @ Zz.G])
    b0 = np.concatenate([Zz.b, -am.Az_static @ Zz.c - am.B_static @ u0])
    return ConstrainedZonotope(Zz.G, Zz.c, A0, b0)


@dataclass(frozen=True)
class InputSequence:
    """Inputs ``u_0 .. u_N`` stored as an ``(N + 1, n_u)`` array."""

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim == 1:
            u = u.reshape(1, -1)
        if u.ndim != 2 or u.shape[0] == 0:
            raise ValueError(f"input sequence must be a non-empty 2-D array, got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("input sequence has non-finite entries")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def zeros(cls, N, n_u):
        return cls(np.zeros((N + 1, n_u)))

    @classmethod
    def from_flat(cls, flat, n_u):
        return cls(np.asarray(flat, dtype=float).reshape(-1, n_u))

    @property
    def N(self):
        return self.u.shape[0] - 1

    @property
    def n_u(self):
        return self.u.shape[1]

    @property
    def flat(self):
        return self.u.reshape(-1)

    def within(self, box: IntervalBox, tol=1e-9):
        return all(box.contains(uk, tol) for uk in self.u)

    def cost(self, R=None):
        R = np.eye(self.n_u) if R is None else np.asarray(R, dtype=float)
        return float(np.einsum("ki,ij,kj->", self.u, R, self.u))


def _as_sequence(useq, n_u):
    if isinstance(useq, InputSequence):
        seq = useq
    else:
        seq = InputSequence(np.asarray(useq, dtype=float).reshape(-1, n_u))
    if seq.n_u != n_u:
        raise ValueError(f"inputs have {seq.n_u} channels, the models have {n_u}")
    return seq


def reach_recursive(am: AugmentedModel, Z0: ConstrainedZonotope, useq):
    """``Z_N(u)`` by stepping the reachable-set recursion from ``Z0 = Z_0(u_0)``."""
    seq = _as_sequence(useq, am.model.n_u)
    if Z0.dim != am.dim:
        raise ValueError(f"Z0 has dimension {Z0.dim}, augmented state has {am.dim}")
    n_z = am.n_z
    Za = am.Za
    ca_s, Ga_s = Za.c[n_z:], Za.G[n_z:]
    G, c, A, b = Z0.G, Z0.c, Z0.A, Z0.b
    for k in range(1, seq.N + 1):
        c = np.concatenate([am.Az_dyn @ c + am.B_dyn @ seq.u[k - 1], ca_s])
        G = block_diag(am.Az_dyn @ G, Ga_s)
        A = np.vstack([block_diag(A, Za.A), am.Az_static @ G])
        b = np.concatenate([b, Za.b, -am.Az_static @ c - am.B_static @ seq.u[k]])
    return ConstrainedZonotope(G, c, A, b)


@dataclass(frozen=True, eq=False)
class ReachTensors:
    """Affine dependence of ``Z_N(u)`` on the stacked input ``u`` (length ``(N+1) n_u``).

    ``c_N(u) = c_N(0) + H[N] u`` and ``b_N(u) = alpha + Lambda c_z + Omega u``,
    where ``c_z`` is the centre of ``T^-1 X0 x W``. ``H[h]`` maps the inputs to
    the centre at step ``h``; ``Q``, ``p`` and ``Hbar`` stack the step-wise
    state powers, centre offsets and input maps for ``h = 0..N``.
    """

    N: int
    H: list
    Hbar: np.ndarray
    Q: np.ndarray
    p: np.ndarray
    beta: np.ndarray
    Upsilon: np.ndarray
    Gamma: np.ndarray
    alpha: np.ndarray
    Lambda: np.ndarray
    Omega: np.ndarray
    c_z: np.ndarray
    G_N: np.ndarray
    A_N: np.ndarray

    @property
    def c0(self):
        d = self.c_z.size
        return self.Q[-d:] @ self.c_z + self.p[-d:]

    def c_of(self, u):
        return self.c0 + self.H[-1] @ np.asarray(u, dtype=float).reshape(-1)

    def b_of(self, u):
        return self.alpha + self.Lambda @ self.c_z + self.Omega @ np.asarray(u, dtype=float).reshape(-1)

    def reach(self, u):
        return ConstrainedZonotope(self.G_N, self.c_of(u), self.A_N, self.b_of(u))


def build_tensors(am: AugmentedModel, X0, W, N) -> ReachTensors:
    """Closed-form input maps of the reachable set at horizon ``N``."""
    if N < 0:
        raise ValueError("horizon must be non-negative")
    n_u = am.model.n_u
    d, n_z = am.dim, am.n_z
    Zz = cartesian_product(linear_map(am.transform.T_inv, X0), W)
    Za = am.Za
    M = np.vstack([am.Az_dyn, np.zeros((d - n_z, d))])
    Bl = np.vstack([am.B_dyn, np.zeros((d - n_z, n_u))])
    ca = np.concatenate([np.zeros(n_z), Za.c[n_z:]])
    powers = [np.eye(d)]
    for _ in range(N):
        powers.append(M @ powers[-1])
    H = []
    for h in range(N + 1):
        Hh = np.zeros((d, (N + 1) * n_u))
        for m_ in range(1, h + 1):
            Hh[:, (m_ - 1) * n_u : m_ * n_u] = powers[h - m_] @ Bl
        H.append(Hh)
    p_blocks = [np.zeros(d)]
    for h in range(1, N + 1):
        p_blocks.append(p_blocks[-1] + powers[h - 1] @ ca)
    n_s = am.Az_static.shape[0]
    first, rest = Zz.A.shape[0], Za.A.shape[0]
    beta = np.concatenate(
        [np.concatenate([Zz.b, np.zeros(n_s)])] + [np.concatenate([Za.b, np.zeros(n_s)])] * N
    )
    Ups_blocks = [np.vstack([np.zeros((first, d)), -am.Az_static])]
    Gam_blocks = [np.vstack([np.zeros((first, n_u)), -am.B_static])]
    for _ in range(N):
        Ups_blocks.append(np.vstack([np.zeros((rest, d)), -am.Az_static]))
        Gam_blocks.append(np.vstack([np.zeros((rest, n_u)), -am.B_static]))
    Upsilon = block_diag(*Ups_blocks)
    Gamma = block_diag(*Gam_blocks)
    Q = np.vstack(powers)
    p = np.concatenate(p_blocks)
    Hbar = np.vstack(H)
    ZN = reach_recursive(am, initial_feasible_set(am, X0, W, np.zeros(n_u)), InputSequence.zeros(N, n_u))
    return ReachTensors(
        N=N,
        H=H,
        Hbar=Hbar,
        Q=Q,
        p=p,
        beta=beta,
        Upsilon=Upsilon,
        Gamma=Gamma,
        alpha=beta + Upsilon @ p,
        Lambda=Upsilon @ Q,
        Omega=Gamma + Upsilon @ Hbar,
        c_z=Zz.c,
        G_N=ZN.G,
        A_N=ZN.A,
    )


def output_reach(am: AugmentedModel, ZN: ConstrainedZonotope, uN, V: ConstrainedZonotope):
    """``F Z_N + D u_N + Dv V``."""
    m = am.model
    uN = as_vector(uN, m.n_u, "uN")
    if ZN.dim != am.dim:
        raise ValueError(f"ZN has dimension {ZN.dim}, augmented state has {am.dim}")
    if V.dim != m.n_v:
        raise ValueError(f"V has dimension {V.dim}, model needs {m.n_v}")
    return ConstrainedZonotope(
        np.hstack([am.F @ ZN.G, m.Dv @ V.G]),
        am.F @ ZN.c + m.D @ uN + m.Dv @ V.c,
        block_diag(ZN.A, V.A),
        np.concatenate([ZN.b, V.b]),
    )


def output_sets(bank: ModelBank, aug, useq):
    """``Y_N^i(u)`` for every model, by the recursion."""
    seq = _as_sequence(useq, bank.n_u)
    out = []
    for am in aug:
        Z0 = initial_feasible_set(am, bank.X0, bank.W, seq.u[0])
        out.append(output_reach(am, reach_recursive(am, Z0, seq), seq.u[-1], bank.V))
    return out


@dataclass(frozen=True, eq=False)
class SeparationProblem:
    """Pair ``(i, j)`` is separated by ``u`` iff ``N_mat @ u`` lies outside ``Y``."""

    pair: tuple
    N_mat: np.ndarray
    Y: ConstrainedZonotope
    horizon: int


def _pair_problem(ai, aj, ti, tj, V, N, reduce):
    n_u = ai.model.n_u
    mi, mj = ai.model, aj.model
    GYi = np.hstack([ai.F @ ti.G_N, mi.Dv @ V.G])
    GYj = np.hstack([aj.F @ tj.G_N, mj.Dv @ V.G])
    cYi = ai.F @ ti.c0 + mi.Dv @ V.c
    cYj = aj.F @ tj.c0 + mj.Dv @ V.c
    AYi = block_diag(ti.A_N, V.A)
    AYj = block_diag(tj.A_N, V.A)
    bYi = np.concatenate([ti.b_of(np.zeros((N + 1) * n_u)), V.b])
    bYj = np.concatenate([tj.b_of(np.zeros((N + 1) * n_u)), V.b])
    D_diff = np.zeros((mi.n_y, (N + 1) * n_u))
    D_diff[:, N * n_u :] = mj.D - mi.D
    N_ij = aj.F @ tj.H[-1] - ai.F @ ti.H[-1] + D_diff
    Omega = np.vstack(
        [ti.Omega, np.zeros((V.n_con, (N + 1) * n_u)), tj.Omega, np.zeros((V.n_con, (N + 1) * n_u))]
    )
    G = np.vstack([np.hstack([GYi, -GYj]), block_diag(AYi, AYj)])
    c = np.concatenate([cYi - cYj, -bYi, -bYj])
    Y = prune(ConstrainedZonotope(G, c))
    if reduce and Y.n_gen > 2 * Y.dim:
        Y = reduce_generators(Y, 2 * Y.dim)
    return np.vstack([N_ij, Omega]), Y


def separation_problem(bank: ModelBank, aug, tensors, N, reduce=True):
    """Lifted separation test for every unordered pair ``i < j``.

    With ``reduce`` the avoided zonotope is enclosed with at most twice its
    dimension in generators; this only enlarges it, so a certificate obtained
    after reduction remains valid for the exact sets.
    """
    problems = []
    for i, j in bank.pairs:
        if tensors[i].N != N or tensors[j].N != N:
            raise ValueError(f"tensors were not built for horizon {N}")
        N_mat, Y = _pair_problem(aug[i], aug[j], tensors[i], tensors[j], bank.V, N, reduce)
        problems.append(SeparationProblem((i, j), N_mat, Y, N))
    return problems


@dataclass(frozen=True)
class SeparationCertificate:
    pair: tuple
    delta_hat: float
    xi: np.ndarray
    lp_status: LpStatus
    # gradient of delta_hat with respect to the lifted point (None if separated by rank)
    direction: np.ndarray | None = None

    @property
    def separated(self):
        return self.delta_hat > SEPARATION_TOL


def _margin_lp(Y: ConstrainedZonotope, point):
    """``min delta`` s.t. ``G xi = point - c``, ``|xi| <= 1 + delta``."""
    G = Y.G
    g = G.shape[1]
    obj = np.zeros(g + 1)
    obj[-1] = 1.0
    I = np.eye(g)
    ub_lhs = np.vstack([np.hstack([I, -np.ones((g, 1))]), np.hstack([-I, -np.ones((g, 1))])])
    ub_rhs = np.ones(2 * g)
    lhs = np.hstack([G, np.zeros((G.shape[0], 1))])
    res = solve_lp(LpProblem(obj, lhs, point - Y.c, -np.inf, np.inf, ub_lhs, ub_rhs))
    return res


def _separating_direction(Y, x):
    """A direction ``h`` with ``G^T h = 0`` and ``h . x > 0`` when ``x`` leaves the range of ``G``."""
    Q, _ = np.linalg.qr(Y.G) if Y.n_gen else (np.zeros((Y.dim, 0)), None)
    r = x - Q @ (Q.T @ x)
    return r / max(r @ x, 1e-300)


def verify_input(problems, useq):
    """Separation margin of every pair for the given input.

    Raises:
        ValueError: if the sequence length does not match the problems' horizon.
    """
    certs = []
    for prob in problems:
        seq = _as_sequence(useq, prob.N_mat.shape[1] // (prob.horizon + 1))
        if seq.N != prob.horizon:
            raise ValueError(f"input sequence has horizon {seq.N}, problems were built for {prob.horizon}")
        point = prob.N_mat @ seq.flat
        res = _margin_lp(prob.Y, point)
        if res.status is LpStatus.INFEASIBLE:
            direction = _separating_direction(prob.Y, point - prob.Y.c)
            certs.append(SeparationCertificate(prob.pair, np.inf, np.full(prob.Y.n_gen, np.nan), res.status, direction))
        elif res.status is LpStatus.OPTIMAL:
            certs.append(SeparationCertificate(prob.pair, res.value, res.point[:-1], res.status, res.eq_duals))
        else:
            raise RuntimeError(f"separation LP for pair {prob.pair} is {res.status.value}")
    return certs


@dataclass(frozen=True)
class DesignResult:
    found: bool
    N: int
    useq: InputSequence | None
    certificates: list
    cost: float

    @property
    def min_margin(self):
        return min((c.delta_hat for c in self.certificates), default=np.inf)


def _linearized_step(problems, certs, u, R, lo, hi, eps, rho):
    """Minimise the input cost subject to linearised margins, elastically.

    ``delta_hat`` is a convex function of ``u`` minus one, so the tangent from
    the LP duals is a global under-estimator: meeting the tangent constraint
    with zero slack guarantees the true margin.
    """
    rows, rhs = [], []
    for prob, cert in zip(problems, certs):
        h = cert.direction
        if h is None:
            continue
        # delta_hat(v) >= h . (N v - c) - 1, with equality at the current v
        rows.append(h @ prob.N_mat)
        rhs.append(1.0 + eps + h @ prob.Y.c)
    L = np.array(rows)
    r = np.array(rhs)
    n, q = u.size, len(rows)

    def fun(x):
        v, s = x[:n], x[n:]
        return v @ R @ v + rho * s.sum()

    def jac(x):
        return np.concatenate([2.0 * R @ x[:n], np.full(q, rho)])

    cons = {
        "type": "ineq",
        "fun": lambda x: L @ x[:n] + x[n:] - r,
        "jac": lambda x: np.hstack([L, np.eye(q)]),
    }
    s0 = np.maximum(r - L @ u, 0.0)
    res = minimize(
        fun,
        np.concatenate([u, s0]),
        jac=jac,
        constraints=[cons],
        bounds=list(zip(lo, hi)) + [(0.0, None)] * q,
        method="SLSQP",
        options={"maxiter": 300, "ftol": 1e-12},
    )
    return np.clip(res.x[:n], lo, hi)


def _polish(problems, u, R, lo, hi, eps, tol=1e-6):
    """Snap near-zero and near-bound entries left by the QP solver, if still certified."""
    v = np.where(np.abs(u) < tol, 0.0, u)
    v = np.where(np.abs(v - lo) < tol, lo, np.where(np.abs(v - hi) < tol, hi, v))
    if np.array_equal(v, u):
        return None
    certs = verify_input(problems, v)
    if all(c.delta_hat >= eps for c in certs):
        return float(v @ R @ v), v, certs
    return None


def _local_search(problems, u0, R, lo, hi, eps, rho, iters, shrink):
    """Successive tangent approximations from ``u0``; returns the best certified point."""
    u = u0
    best = None
    for _ in range(iters):
        certs = verify_input(problems, u)
        if all(c.delta_hat >= eps for c in certs):
            cost = float(u @ R @ u)
            if best is None or cost < best[0] - 1e-12:
                best = (cost, u, certs)
            elif best is not None:
                break
        # aim slightly above eps so the certified point survives LP round-off
        u_next = _linearized_step(problems, certs, u, R, lo, hi, eps * (1.0 + shrink), rho)
        if np.max(np.abs(u_next - u)) < 1e-9:
            break
        u = u_next
    if best is None:
        certs = verify_input(problems, u)
        if all(c.delta_hat >= eps for c in certs):
            best = (float(u @ R @ u), u, certs)
    if best is not None:
        best = _polish(problems, best[1], R, lo, hi, eps) or best
    return best


def design_input(bank: ModelBank, N_max=6, eps=0.01, R_weight=None, starts=32, seed=0, iters=40, aug=None):
    """Shortest input sequence certified to separate every pair by at least ``eps``.

    For ``N = 0, 1, ..`` a multistart local search minimises ``sum u_k^T R u_k``
    over the input box subject to the separation margins; every reported
    sequence is re-checked with :func:`verify_input`. Returns a
    :class:`DesignResult` with ``found=False`` if no horizon up to ``N_max``
    produced a certified sequence.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n_u = bank.n_u
    R = np.eye(n_u) if R_weight is None else np.asarray(R_weight, dtype=float)
    if R.shape != (n_u, n_u) or np.min(np.linalg.eigvalsh((R + R.T) / 2)) < -1e-12:
        raise ValueError("R_weight must be a positive semidefinite n_u x n_u matrix")
    lo_u, hi_u = bank.U_box.lower, bank.U_box.upper
    if not (np.all(np.isfinite(lo_u)) and np.all(np.isfinite(hi_u))):
        raise ValueError("the input box must be bounded")
    aug = augment(bank) if aug is None else aug
    for N in range(N_max + 1):
        seq0 = InputSequence.zeros(N, n_u)
        if bank.n_models < 2:
            return DesignResult(True, N, seq0, [], 0.0)
        tensors = [build_tensors(am, bank.X0, bank.W, N) for am in aug]
        problems = separation_problem(bank, aug, tensors, N)
        lo, hi = np.tile(lo_u, N + 1), np.tile(hi_u, N + 1)
        RN = np.kron(np.eye(N + 1), R)
        rng = np.random.default_rng(seed)
        candidates = [np.clip(np.zeros((N + 1) * n_u), lo, hi)]
        candidates += [rng.uniform(lo, hi) for _ in range(starts - 1)]
        best = None
        for idx, u0 in enumerate(candidates):
            got = _local_search(problems, u0, RN, lo, hi, eps, rho=1e3, iters=iters, shrink=1e-3)
            if got is not None and (best is None or got[0] < best[0] - 1e-12):
                best = got
        log.info("horizon %d: %s", N, "certified" if best else "no certified input")
        if best is not None:
            cost, u, certs = best
            return DesignResult(True, N, InputSequence.from_flat(u, n_u), certs, cost)
    return DesignResult(False, N_max, None, [], np.inf)


def sample_outputs(bank: ModelBank, aug, index, useq, count, seed=0):
    """Outputs at time ``N`` of simulated trajectories of model ``index``.

    ``(x_0, w_0)`` is drawn from the initial feasible set, later disturbances
    uniformly from ``W``, and the static coordinates are solved from the
    static relations at each step.

    Raises:
        RegularityError: if the static relations cannot be solved for the
            static state coordinates.
    """
    am = aug[index]
    m = am.model
    seq = _as_sequence(useq, m.n_u)
    rng = np.random.default_rng(seed)
    n_z, n = am.n_z, m.n
    S = am.Az_static[:, n_z:n]
    if S.shape[0] and (S.shape[0] != S.shape[1] or np.linalg.cond(S) > 1e12):
        raise RegularityError("static coordinates are not determined by the static relations")
    Z0 = initial_feasible_set(am, bank.X0, bank.W, seq.u[0])
    z = sample_points(Z0, count, rng=rng)
    for k in range(1, seq.N + 1):
        dyn = z @ am.Az_dyn.T + am.B_dyn @ seq.u[k - 1]
        w = sample_points(bank.W, count, rng=rng)
        if S.shape[0]:
            rhs = -(dyn @ am.Az_static[:, :n_z].T + w @ am.Az_static[:, n:].T + am.B_static @ seq.u[k])
            static = np.linalg.solve(S, rhs.T).T
        else:
            static = np.zeros((count, 0))
        z = np.hstack([dyn, static, w])
    v = sample_points(bank.V, count, rng=rng)
    return z @ am.F.T + m.D @ seq.u[-1] + v @ m.Dv.T
