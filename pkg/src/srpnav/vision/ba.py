"""Robust bundle adjustment with Levenberg-Marquardt.

Observations are RGB-D triples (u, v, Z); each residual is the 3-vector
obs - pi(R X + t) with identity information, and the cost per observation is
the Huber function of its squared norm. Poses use the left update
R <- Exp(phi) R, t <- t + rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .camera import CameraIntrinsics, RigidPose3D, hat

HUBER_DELTA = 1.345


class NotConverged(RuntimeError):
    pass


class UnderconstrainedPoint(ValueError):
    pass


class DegenerateLandmarks(ValueError):
    pass


def huber(s, delta: float = HUBER_DELTA):
    """Huber cost of a squared residual norm ``s``."""
    s = np.asarray(s, dtype=float)
    r = np.sqrt(s)
    return np.where(r <= delta, s, 2.0 * delta * r - delta * delta)


def huber_weight(s, delta: float = HUBER_DELTA):
    """d huber / d s, the IRLS weight."""
    r = np.sqrt(np.asarray(s, dtype=float))
    with np.errstate(divide="ignore"):
        return np.where(r <= delta, 1.0, delta / r)


def predict(Pc: np.ndarray, K: CameraIntrinsics) -> np.ndarray:
    Z = Pc[..., 2]
    return np.stack([K.fx * Pc[..., 0] / Z + K.cx, K.fy * Pc[..., 1] / Z + K.cy, Z], axis=-1)


def _dpi(Pc: np.ndarray, K: CameraIntrinsics) -> np.ndarray:
    X, Y, Z = Pc[..., 0], Pc[..., 1], Pc[..., 2]
    J = np.zeros(Pc.shape[:-1] + (3, 3))
    J[..., 0, 0] = K.fx / Z
    J[..., 0, 2] = -K.fx * X / Z**2
    J[..., 1, 1] = K.fy / Z
    J[..., 1, 2] = -K.fy * Y / Z**2
    J[..., 2, 2] = 1.0
    return J


def reprojection_jacobian(pose: RigidPose3D, X, K: CameraIntrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of pi(R X + t) w.r.t. the pose increment (phi, rho) and the point X."""
    RX = pose.R @ np.asarray(X, dtype=float)
    Jp = _dpi(RX + pose.t, K)
    J_pose = np.hstack([Jp @ -hat(RX), Jp])
    return J_pose, Jp @ pose.R


@dataclass
class LMResult:
    x: object
    initial_cost: float
    cost: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)  # robust cost after each accepted step


def _levenberg_marquardt(
    state,
    residuals: Callable,  # state -> (k, 3)
    jacobian: Callable,  # state -> (3k, n)
    update: Callable,  # (state, dx) -> state
    delta: float,
    max_iters: int,
    tol: float,
) -> LMResult:
    def cost_of(r):
        return float(np.sum(huber(np.sum(r * r, axis=1), delta)))

    r = residuals(state)
    cost = cost_of(r)
    initial = cost
    history = [cost]
    mu = 1e-3
    it = 0
    converged = False
    while it < max_iters:
        it += 1
        J = jacobian(state)
        w = np.repeat(huber_weight(np.sum(r * r, axis=1), delta), 3)
        A = J.T @ (w[:, None] * J)
        g = -J.T @ (w * r.ravel())
        if np.max(np.abs(g), initial=0.0) <= tol:
            converged = True
            break
        diag = np.diag(A).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        while mu < 1e12:
            try:
                dx = np.linalg.solve(A + mu * np.diag(diag), g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            cand = update(state, dx)
            r_c = residuals(cand)
            c_c = cost_of(r_c)
            if c_c <= cost:
                accepted = True
                state, r, step_cost = cand, r_c, cost
                cost = c_c
                history.append(cost)
                mu = max(mu / 3.0, 1e-12)
                break
            mu *= 4.0
        if not accepted:
            converged = True  # no descent direction left at machine precision
            break
        if np.linalg.norm(dx) <= tol or step_cost - cost <= tol * max(step_cost, 1e-300):
            converged = True
            break
    return LMResult(state, initial, cost, it, converged, history)


def _check_landmarks(X: np.ndarray):
    if len(X) < 3:
        raise DegenerateLandmarks("need at least 3 landmarks")
    _, s, _ = np.linalg.svd(X - X.mean(axis=0))
    if s[1] <= 1e-9 * max(s[0], 1e-300):
        raise DegenerateLandmarks("landmarks are collinear")


def motion_only_ba(
    landmarks,
    observations,
    init: RigidPose3D,
    K: CameraIntrinsics,
    huber_delta: float = HUBER_DELTA,
    max_iters: int = 50,
    tol: float = 1e-12,
) -> LMResult:
    """Refine one camera pose against fixed landmarks; ``result.x`` is the pose."""
    X = np.asarray(landmarks, dtype=float).reshape(-1, 3)
    obs = np.asarray(observations, dtype=float).reshape(-1, 3)
    if len(obs) != len(X):
        raise ValueError("one observation per landmark expected")
    _check_landmarks(X)

    def residuals(pose):
        return obs - predict(pose.apply(X), K)

    def jacobian(pose):
        RX = X @ pose.R.T
        Jp = _dpi(RX + pose.t, K)
        J_phi = -np.einsum("kij,kjl->kil", Jp, np.stack([hat(v) for v in RX]))
        # residual = obs - pi, so the sign flips
        return -np.concatenate([J_phi, Jp], axis=2).reshape(-1, 6)

    def update(pose, dx):
        return pose.perturbed(dx[:3], dx[3:])

    return _levenberg_marquardt(init, residuals, jacobian, update, huber_delta, max_iters, tol)


@dataclass(frozen=True)
class Observation:
    frame: int
    point: int
    uvz: tuple[float, float, float]


@dataclass
class LocalBAResult:
    poses: dict  # frame id -> RigidPose3D; fixed frames are the input objects
    points: np.ndarray
    initial_cost: float
    cost: float
    iterations: int
    converged: bool
    history: list


def local_ba(
    local_poses: Mapping[int, RigidPose3D],
    fixed_poses: Mapping[int, RigidPose3D],
    points,
    observations: Sequence[Observation],
    K: CameraIntrinsics,
    huber_delta: float = HUBER_DELTA,
    max_iters: int = 100,
    tol: float = 1e-12,
) -> LocalBAResult:
    """Jointly refine the poses in ``local_poses`` and all ``points``.

    Frames in ``fixed_poses`` contribute residuals but never move; at least
    one is required to pin the gauge. Observations of other frames are
    ignored.
    """
    if not fixed_poses:
        raise ValueError("at least one fixed keyframe is required")
    overlap = set(local_poses) & set(fixed_poses)
    if overlap:
        raise ValueError(f"frames {sorted(overlap)} are both local and fixed")
    P0 = np.array(points, dtype=float).reshape(-1, 3)
    frames = {**fixed_poses, **local_poses}
    obs = [o for o in observations if o.frame in frames]
    counts = np.bincount([o.point for o in obs], minlength=len(P0))
    if np.any(counts < 2):
        raise UnderconstrainedPoint(f"points {np.flatnonzero(counts < 2).tolist()} have fewer than 2 observations")

    local_ids = sorted(local_poses)
    slot = {f: i for i, f in enumerate(local_ids)}
    nL, nP = len(local_ids), len(P0)
    n = 6 * nL + 3 * nP
    o_frame = np.array([o.frame for o in obs])
    o_point = np.array([o.point for o in obs])
    o_uvz = np.array([o.uvz for o in obs], dtype=float)
    o_local = np.array([f in slot for f in o_frame])
    o_slot = np.array([slot.get(f, -1) for f in o_frame])
    rows = np.arange(len(obs))

    def residuals(state):
        poses, P = state
        Rs = np.stack([poses[f].R for f in o_frame])
        ts = np.stack([poses[f].t for f in o_frame])
        Pc = np.einsum("kij,kj->ki", Rs, P[o_point]) + ts
        return o_uvz - predict(Pc, K)

    def jacobian(state):
        poses, P = state
        Rs = np.stack([poses[f].R for f in o_frame])
        ts = np.stack([poses[f].t for f in o_frame])
        RX = np.einsum("kij,kj->ki", Rs, P[o_point])
        Jp = _dpi(RX + ts, K)
        J = np.zeros((len(obs), 3, n))
        J_pt = -np.einsum("kij,kjl->kil", Jp, Rs)
        for a in range(3):
            J[rows, :, 6 * nL + 3 * o_point + a] = J_pt[:, :, a]
        if nL:
            J_phi = np.einsum("kij,kjl->kil", Jp, np.stack([hat(v) for v in RX]))
            J_pose = np.concatenate([J_phi, -Jp], axis=2)
            loc = rows[o_local]
            for a in range(6):
                J[loc, :, 6 * o_slot[o_local] + a] = J_pose[o_local, :, a]
        return J.reshape(-1, n)

    def update(state, dx):
        poses, P = state
        new = dict(poses)
        for f, i in slot.items():
            new[f] = poses[f].perturbed(dx[6 * i : 6 * i + 3], dx[6 * i + 3 : 6 * i + 6])
        return new, P + dx[6 * nL :].reshape(nP, 3)

    res = _levenberg_marquardt((frames, P0), residuals, jacobian, update, huber_delta, max_iters, tol)
    poses, P = res.x
    out = {f: (fixed_poses[f] if f in fixed_poses else poses[f]) for f in frames}
    return LocalBAResult(out, P, res.initial_cost, res.cost, res.iterations, res.converged, res.history)


def rms_reprojection(poses: Mapping[int, RigidPose3D], points, observations: Sequence[Observation], K) -> float:
    """RMS pixel error over the (u, v) components."""
    P = np.asarray(points, dtype=float)
    err = []
    for o in observations:
        if o.frame in poses:
            pred = predict(poses[o.frame].apply(P[o.point]), K)
            err.append(np.asarray(o.uvz[:2]) - pred[:2])
    return float(np.sqrt(np.mean(np.square(err)))) if err else 0.0
