"""Set-valued state estimation for linear descriptor systems.

The model is ``E x_k = A x_{k-1} + B u_{k-1} + Bw w_{k-1}``,
``y_k = C x_k + D u_k + Dv v_k`` with a possibly singular ``E``. An SVD of ``E``
splits the transformed state ``z = T^-1 x`` into a dynamic part (first ``n_z``
coordinates) and a part fixed only through static relations. The estimator
propagates constrained zonotopes in ``z`` coordinates so the static relations
stay as equality constraints instead of being enclosed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .numerics import as_matrix, as_vector, rank_of, svd
from .reduction import ReductionLimits, reduce, relax_to_zonotope
from .setops import (
    ConstrainedZonotope,
    EmptySetError,
    generalized_intersection,
    is_empty,
    linear_map,
    sample_points,
)

__all__ = [
    "DescriptorModel",
    "SvdTransform",
    "UncertaintyBounds",
    "EstimatorState",
    "InconsistentMeasurementError",
    "RegularityError",
    "decompose",
    "admissible_split",
    "initial_set",
    "predict",
    "update",
    "step",
    "zonotope_baseline_step",
    "Trajectory",
    "simulate_truth",
    "DescriptorEstimator",
]


class InconsistentMeasurementError(EmptySetError):
    """The measurement-consistent set came out empty."""


class RegularityError(ValueError):
    """The static relations do not determine the non-dynamic states."""


@dataclass(frozen=True, eq=False)
class DescriptorModel:
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    Bw: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Dv: np.ndarray

    def __post_init__(self):
        E = as_matrix(self.E, name="E")
        n = E.shape[0]
        if E.shape != (n, n):
            raise ValueError(f"E must be square, got shape {E.shape}")
        A = as_matrix(self.A, rows=n, cols=n, name="A")
        B = as_matrix(self.B, rows=n, name="B")
        Bw = as_matrix(self.Bw, rows=n, name="Bw")
        C = as_matrix(self.C, cols=n, name="C")
        n_y = C.shape[0]
        D = as_matrix(self.D, rows=n_y, cols=B.shape[1], name="D")
        Dv = as_matrix(self.Dv, rows=n_y, name="Dv")
        for name, arr in zip("E A B Bw C D Dv".split(), (E, A, B, Bw, C, D, Dv)):
            object.__setattr__(self, name, arr)

    n = property(lambda self: self.E.shape[0])
    n_u = property(lambda self: self.B.shape[1])
    n_w = property(lambda self: self.Bw.shape[1])
    n_y = property(lambda self: self.C.shape[0])
    n_v = property(lambda self: self.Dv.shape[1])


@dataclass(frozen=True, eq=False)
class SvdTransform:
    """Products of ``E = U diag(S) V^T`` used to decouple the dynamics.

    ``T = V`` (the inverse of ``V^T``); the ``t``/``c`` suffixes are the dynamic
    and static row blocks of ``blkdiag(S~^-1, I) U^T [A T, B, Bw]``.
    """

    T: np.ndarray
    T_inv: np.ndarray
    U: np.ndarray
    n_z: int
    sigma: np.ndarray
    At: np.ndarray
    Ac: np.ndarray
    Bt: np.ndarray
    Bc: np.ndarray
    Bwt: np.ndarray
    Bwc: np.ndarray

    @property
    def n(self):
        return self.T.shape[0]

    @property
    def n_static(self):
        return self.n - self.n_z


@dataclass(frozen=True)
class UncertaintyBounds:
    X0: ConstrainedZonotope
    W: ConstrainedZonotope
    V: ConstrainedZonotope
    Xa: ConstrainedZonotope

    def check(self, m: DescriptorModel):
        for name, Z, dim in (("X0", self.X0, m.n), ("W", self.W, m.n_w), ("V", self.V, m.n_v), ("Xa", self.Xa, m.n)):
            if Z.dim != dim:
                raise ValueError(f"{name} has dimension {Z.dim}, model needs {dim}")


def decompose(m: DescriptorModel, tol=1e-9) -> SvdTransform:
    U, S, V = svd(m.E)
    n_z = rank_of(m.E, tol)
    T = V
    T_inv = V.T
    scale = np.ones(m.n)
    scale[:n_z] = 1.0 / S[:n_z]
    Ui = U.T * scale[:, None]
    AT = Ui @ m.A @ T
    B = Ui @ m.B
    Bw = Ui @ m.Bw
    return SvdTransform(
        T=T,
        T_inv=T_inv,
        U=U,
        n_z=n_z,
        sigma=S[:n_z].copy(),
        At=AT[:n_z],
        Ac=AT[n_z:],
        Bt=B[:n_z],
        Bc=B[n_z:],
        Bwt=Bw[:n_z],
        Bwc=Bw[n_z:],
    )


def admissible_split(t: SvdTransform, Xa: ConstrainedZonotope):
    """``T^-1 Xa`` split into dynamic/static rows: ``(Za, c_dyn, c_static, G_dyn, G_static)``."""
    Za = linear_map(t.T_inv, Xa)
    return Za, Za.c[: t.n_z], Za.c[t.n_z :], Za.G[: t.n_z], Za.G[t.n_z :]


def _measurement_set(m, V, u, y):
    """``(y - D u) + (-Dv V)``."""
    return linear_map(-m.Dv, V) + (as_vector(y, m.n_y, "y") - m.D @ as_vector(u, m.n_u, "u"))


def initial_set(m: DescriptorModel, t: SvdTransform, bounds: UncertaintyBounds, u0, y0):
    """Measurement-consistent initial set in ``z`` coordinates with the k=0 static rows.

    Raises:
        InconsistentMeasurementError: if the result is empty.
    """
    u0 = as_vector(u0, m.n_u, "u0")
    X0hat = generalized_intersection(bounds.X0, m.C, _measurement_set(m, bounds.V, u0, y0))
    Z0 = linear_map(t.T_inv, X0hat)
    W = bounds.W
    if t.n_static == 0:
        Zhat = Z0
    else:
        G = np.hstack([Z0.G, np.zeros((m.n, W.n_gen))])
        A = np.vstack(
            [
                block_diag(Z0.A, W.A),
                np.hstack([t.Ac @ Z0.G, t.Bwc @ W.G]),
            ]
        )
        b = np.concatenate([Z0.b, W.b, -t.Ac @ Z0.c - t.Bwc @ W.c - t.Bc @ u0])
        Zhat = ConstrainedZonotope(G, Z0.c, A, b)
    if is_empty(Zhat):
        raise InconsistentMeasurementError("initial measurement is inconsistent with X0, W and V")
    return Zhat


def predict(Zhat_prev: ConstrainedZonotope, t: SvdTransform, bounds: UncertaintyBounds, u_prev, u_now):
    """Predicted set at time k containing every ``z_k`` reachable from ``Zhat_prev``.

    Generator blocks are, in order: the mapped previous factors, ``w_{k-1}``,
    the admissible-set factors for the static coordinates, and ``w_k`` (which
    only enters the static rows shifted to time k).
    """
    W = bounds.W
    n_z, n_s = t.n_z, t.n_static
    ng, nw = Zhat_prev.n_gen, W.n_gen
    c_dyn = t.At @ Zhat_prev.c + t.Bt @ as_vector(u_prev, name="u_prev") + t.Bwt @ W.c
    G_prev = t.At @ Zhat_prev.G
    G_w = t.Bwt @ W.G
    if n_s == 0:
        return ConstrainedZonotope(
            np.hstack([G_prev, G_w]), c_dyn, block_diag(Zhat_prev.A, W.A), np.concatenate([Zhat_prev.b, W.b])
        )
    Za, _, ca_s, _, Ga_s = admissible_split(t, bounds.Xa)
    na = Za.n_gen
    G = np.vstack(
        [
            np.hstack([G_prev, G_w, np.zeros((n_z, na + nw))]),
            np.hstack([np.zeros((n_s, ng + nw)), Ga_s, np.zeros((n_s, nw))]),
        ]
    )
    c = np.concatenate([c_dyn, ca_s])
    static_rows = t.Ac @ G
    static_rows[:, ng + nw + na :] += t.Bwc @ W.G
    A = np.vstack([block_diag(Zhat_prev.A, W.A, Za.A, W.A), static_rows])
    b = np.concatenate(
        [
            Zhat_prev.b,
            W.b,
            Za.b,
            W.b,
            -t.Ac @ c - t.Bc @ as_vector(u_now, name="u_now") - t.Bwc @ W.c,
        ]
    )
    return ConstrainedZonotope(G, c, A, b)


def update(Zbar: ConstrainedZonotope, t: SvdTransform, m: DescriptorModel, bounds: UncertaintyBounds, u_now, y_now):
    """Restrict the prediction to states consistent with ``y_now``."""
    return generalized_intersection(Zbar, m.C @ t.T, _measurement_set(m, bounds.V, u_now, y_now))


@dataclass(frozen=True)
class EstimatorState:
    k: int
    Zhat: ConstrainedZonotope
    Xhat: ConstrainedZonotope


def step(state, m, t, bounds, u_prev, u_now, y_now, lim, check_empty=True):
    """One prediction-update-reduction cycle; returns the state at ``k + 1``.

    Raises:
        InconsistentMeasurementError: if ``check_empty`` and the update is empty.
    """
    Zbar = predict(state.Zhat, t, bounds, u_prev, u_now)
    Zhat = update(Zbar, t, m, bounds, u_now, y_now)
    if check_empty and is_empty(Zhat):
        raise InconsistentMeasurementError(f"empty estimate at k={state.k + 1}")
    Zhat = reduce(Zhat, lim)
    return EstimatorState(state.k + 1, Zhat, linear_map(t.T, Zhat))


BASELINE_GENERATORS = 15


def zonotope_baseline_step(state, m, t, bounds, u_prev, u_now, y_now, max_generators=BASELINE_GENERATORS):
    """Zonotope estimate at ``k + 1`` obtained by relaxing the CZ pipeline.

    ``state`` is the constrained-zonotope state at ``k``. The prediction and
    update are the same as in :func:`step`; the result is then relaxed to a
    plain zonotope by eliminating every constraint and capping the generators.
    The constraint eliminations follow the same greedy sequence as
    :func:`~czkit.reduction.reduce`, so the baseline always contains the CZ
    estimate of the same step.
    """
    Zbar = predict(state.Zhat, t, bounds, u_prev, u_now)
    Zhat = update(Zbar, t, m, bounds, u_now, y_now)
    Zhat = relax_to_zonotope(Zhat, max(max_generators, m.n))
    return EstimatorState(state.k + 1, Zhat, linear_map(t.T, Zhat))


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    outputs: np.ndarray
    disturbances: np.ndarray
    noises: np.ndarray
    inputs: np.ndarray


def _static_block(t: SvdTransform):
    Acs = t.Ac[:, t.n_z :]
    if Acs.shape[0] and (Acs.shape[0] != Acs.shape[1] or np.linalg.cond(Acs) > 1e12):
        raise RegularityError(
            "the static relations do not determine the static coordinates "
            "(singular static block of the transformed A)"
        )
    return Acs


def _input_sequence(useq, horizon, n_u):
    if useq is None:
        return np.zeros((horizon + 1, n_u))
    U = np.asarray(useq, dtype=float)
    if U.ndim == 1:
        U = np.tile(U.reshape(1, n_u), (horizon + 1, 1))
    if U.shape != (horizon + 1, n_u):
        raise ValueError(f"input sequence must have shape {(horizon + 1, n_u)}, got {U.shape}")
    return U


def simulate_truth(m, t, bounds, x0, useq=None, horizon=100, seed=0):
    """Simulate one admissible trajectory with noises drawn uniformly in factor space.

    ``w_0`` is drawn among the disturbances consistent with ``x0`` through the
    k=0 static relation; afterwards each static block of ``z_k`` is solved from
    the static relation at time k.

    Raises:
        RegularityError: if the static block cannot be solved for.
        ValueError: if no admissible ``w_0`` matches ``x0``.
    """
    rng = np.random.default_rng(seed)
    Acs = _static_block(t)
    U = _input_sequence(useq, horizon, m.n_u)
    x0 = as_vector(x0, m.n, "x0")
    z = t.T_inv @ x0
    W, V = bounds.W, bounds.V
    if t.n_static:
        target = ConstrainedZonotope.from_point(-t.Ac @ z - t.Bc @ U[0])
        W0 = generalized_intersection(W, t.Bwc, target)
        if is_empty(W0):
            raise ValueError("x0 violates the static relation for every admissible w_0")
        w = sample_points(W0, 1, rng=rng)[0]
    else:
        w = sample_points(W, 1, rng=rng)[0]
    states = np.empty((horizon + 1, m.n))
    outputs = np.empty((horizon + 1, m.n_y))
    ws = np.empty((horizon + 1, m.n_w))
    vs = sample_points(V, horizon + 1, rng=rng)
    for k in range(horizon + 1):
        if k > 0:
            z_dyn = t.At @ z + t.Bt @ U[k - 1] + t.Bwt @ w
            w = sample_points(W, 1, rng=rng)[0]
            if t.n_static:
                rhs = -(t.Ac[:, : t.n_z] @ z_dyn + t.Bc @ U[k] + t.Bwc @ w)
                z = np.concatenate([z_dyn, np.linalg.solve(Acs, rhs)])
            else:
                z = z_dyn
        x = t.T @ z
        states[k] = x
        ws[k] = w
        outputs[k] = m.C @ x + m.D @ U[k] + m.Dv @ vs[k]
    return Trajectory(states, outputs, ws, vs, U)


@dataclass
class DescriptorEstimator:
    """Convenience wrapper bundling model, transform, bounds and limits."""

    model: DescriptorModel
    bounds: UncertaintyBounds
    limits: ReductionLimits = field(default_factory=ReductionLimits.unlimited)
    tol: float = 1e-9

    def __post_init__(self):
        self.bounds.check(self.model)
        self.transform = decompose(self.model, self.tol)

    def start(self, u0, y0) -> EstimatorState:
        Zhat = reduce(initial_set(self.model, self.transform, self.bounds, u0, y0), self.limits)
        return EstimatorState(0, Zhat, linear_map(self.transform.T, Zhat))

    def start_baseline(self, cz_state: EstimatorState, max_generators=BASELINE_GENERATORS) -> EstimatorState:
        Zhat = relax_to_zonotope(cz_state.Zhat, max(max_generators, self.model.n))
        return EstimatorState(0, Zhat, linear_map(self.transform.T, Zhat))

    def step(self, state, u_prev, u_now, y_now) -> EstimatorState:
        return step(state, self.model, self.transform, self.bounds, u_prev, u_now, y_now, self.limits)

    def baseline_step(self, cz_state, u_prev, u_now, y_now, max_generators=BASELINE_GENERATORS) -> EstimatorState:
        return zonotope_baseline_step(
            cz_state, self.model, self.transform, self.bounds, u_prev, u_now, y_now, max_generators
        )

    def simulate(self, x0, useq=None, horizon=100, seed=0) -> Trajectory:
        return simulate_truth(self.model, self.transform, self.bounds, x0, useq, horizon, seed)

    def run(self, traj: Trajectory, baseline=False):
        """Estimate along a simulated trajectory; returns the list of CZ states
        (and baseline states if requested)."""
        U, Y = traj.inputs, traj.outputs
        st = self.start(U[0], Y[0])
        cz = [st]
        zb = [self.start_baseline(st)] if baseline else None
        for k in range(1, len(Y)):
            if baseline:
                zb.append(self.baseline_step(cz[-1], U[k - 1], U[k], Y[k]))
            cz.append(self.step(cz[-1], U[k - 1], U[k], Y[k]))
        return (cz, zb) if baseline else cz
