"""CLF-CBF-QP controller for the unicycle with disk-shaped (reconstructed) obstacles.

Decision vector is (v, omega, delta). Each step solves

    min  1/2 u'Hu + p delta^2 + (u - u_l)'Q(u - u_l)
    s.t. LfV + LgV u + lambda V <= delta          (soft stability)
         Lfh_i + Lgh_i u + gamma h_i >= 0         (hard safety, one per disk)
         u_min <= u <= u_max,  delta >= 0

The kinematics are driftless, so both Lf terms vanish. The barrier is
evaluated at a point ``lookahead`` metres ahead of the axle; with the axle
point itself omega would not appear in Lgh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import input_matrix, integrate
from .geometry import Disk, ErrorVec, Pose2D, Twist, pose_error
from .qp import QPProblem, QPSolution, solve_qp


class NonPositiveDefiniteP(ValueError):
    pass


def clf_matrix(p1: float, p2: float, p3: float, p4: float, p5: float) -> np.ndarray:
    return np.array([[p1, 0.0, p2], [0.0, p3, p4], [p2, p4, p5]], dtype=float)


def _check_spd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape[0] != M.shape[1] or np.max(np.abs(M - M.T)) > 1e-12:
        raise ValueError(f"{name} must be square and symmetric")
    for k in range(1, M.shape[0] + 1):
        if np.linalg.det(M[:k, :k]) <= 0:
            raise ValueError(f"{name} is not positive definite (leading minor {k})")
    return M


@dataclass(frozen=True)
class ClfParams:
    P: np.ndarray = field(default_factory=lambda: clf_matrix(1.0, 0.0, 1.0, 0.0, 1.0))
    rate: float = 1.0  # lambda in K(V) = lambda V

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.shape != (3, 3) or P[0, 1] != 0.0 or P[1, 0] != 0.0:
            raise NonPositiveDefiniteP("P must be 3x3 with zero (x, y) coupling")
        try:
            _check_spd(P, "P")
        except ValueError as exc:
            raise NonPositiveDefiniteP(str(exc)) from exc
        object.__setattr__(self, "P", P)
        if not self.rate > 0:
            raise ValueError("CLF rate must be positive")


@dataclass(frozen=True)
class CbfParams:
    gamma: float = 1.0
    lookahead: float = 0.2  # m

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.lookahead > 0:
            raise ValueError("lookahead distance must be positive")


@dataclass(frozen=True)
class ControllerParams:
    clf: ClfParams = field(default_factory=ClfParams)
    cbf: CbfParams = field(default_factory=CbfParams)
    H: np.ndarray = field(default_factory=lambda: np.eye(2))
    Q: np.ndarray = field(default_factory=lambda: 4.0 * np.eye(2))
    p: float = 0.5
    u_min: tuple[float, float] = (0.0, -2.0)
    u_max: tuple[float, float] = (1.0, 2.0)
    safe_radius: float = 0.1  # r_s, m
    heading_radius: float = 0.5  # m; inside it the target heading replaces the bearing

    def __post_init__(self):
        object.__setattr__(self, "H", _check_spd(self.H, "H"))
        object.__setattr__(self, "Q", _check_spd(self.Q, "Q"))
        if not self.p > 0:
            raise ValueError("relaxation weight p must be positive")
        lo, hi = np.asarray(self.u_min, float), np.asarray(self.u_max, float)
        if lo.shape != (2,) or hi.shape != (2,) or np.any(lo >= hi):
            raise ValueError("need u_min < u_max componentwise")
        if np.any(lo > 0) or np.any(hi < 0):
            raise ValueError("input box must contain the zero twist")
        if self.safe_radius < 0:
            raise ValueError("safe radius must be non-negative")


@dataclass
class ControllerState:
    u_l: Twist = field(default_factory=Twist)
    infeasible: bool = False
    last_solution: QPSolution | None = None
    step_scale: float = 1.0  # fraction of the QP twist applied after the step check


def clf_value(e: ErrorVec, params: ClfParams) -> float:
    ev = e.as_array()
    return float(ev @ params.P @ ev)


def clf_constraint_row(state: Pose2D, target: Pose2D, params: ClfParams):
    """(LfV, LgV, rhs) with rhs = -lambda V, for V = e P e' and a fixed target."""
    e = pose_error(state, target)
    ev = e.as_array()
    V = float(ev @ params.P @ ev)
    grad = 2.0 * params.P @ ev
    LgV = grad @ input_matrix(state.theta)
    return 0.0, LgV, -params.rate * V


def lookahead_point(state: Pose2D, d: float) -> np.ndarray:
    return np.array([state.x + d * math.cos(state.theta), state.y + d * math.sin(state.theta)])


def cbf_value(state: Pose2D, obstacle: Disk, r_s: float, d: float) -> float:
    q = lookahead_point(state, d)
    dx = q[0] - obstacle.center[0]
    dy = q[1] - obstacle.center[1]
    r = r_s + obstacle.radius
    return dx * dx + dy * dy - r * r


def cbf_constraint_row(state: Pose2D, obstacle: Disk, r_s: float, params: CbfParams):
    """(Lfh, Lgh, rhs) with rhs = -gamma h; the row reads Lgh u >= rhs."""
    d = params.lookahead
    q = lookahead_point(state, d)
    dx = q[0] - obstacle.center[0]
    dy = q[1] - obstacle.center[1]
    c, s = math.cos(state.theta), math.sin(state.theta)
    Lgh = np.array([2.0 * (dx * c + dy * s), 2.0 * d * (-dx * s + dy * c)])
    h = cbf_value(state, obstacle, r_s, d)
    return 0.0, Lgh, -params.gamma * h


def min_barrier(state: Pose2D, obstacles, r_s: float, d: float) -> float:
    if not obstacles:
        return math.inf
    return min(cbf_value(state, ob, r_s, d) for ob in obstacles)


def reference_pose(state: Pose2D, target: Pose2D, heading_radius: float) -> Pose2D:
    """Target position with the heading the CLF should track right now.

    Far from the goal the heading reference is the bearing to it; inside
    ``heading_radius`` it is the target's own heading.
    """
    dx, dy = target.x - state.x, target.y - state.y
    if math.hypot(dx, dy) > heading_radius:
        return Pose2D(target.x, target.y, math.atan2(dy, dx))
    return target


def assemble_qp(
    state: Pose2D,
    target: Pose2D,
    obstacles,
    controller_state: ControllerState,
    params: ControllerParams,
) -> QPProblem:
    """Build the QP in (v, omega, delta). ``target`` is used as given (no bearing logic)."""
    Q = params.Q
    u_l = controller_state.u_l.as_array()
    Hq = np.zeros((3, 3))
    Hq[:2, :2] = params.H + 2.0 * Q
    Hq[2, 2] = 2.0 * params.p
    fq = np.zeros(3)
    fq[:2] = -2.0 * Q @ u_l

    rows = []
    rhs = []
    LfV, LgV, clf_rhs = clf_constraint_row(state, target, params.clf)
    # LfV + LgV u + lambda V <= delta  ->  LgV u - delta <= -lambda V - LfV
    rows.append([LgV[0], LgV[1], -1.0])
    rhs.append(clf_rhs - LfV)
    for ob in obstacles:
        Lfh, Lgh, cbf_rhs = cbf_constraint_row(state, ob, params.safe_radius, params.cbf)
        # Lfh + Lgh u >= rhs  ->  -Lgh u <= Lfh - rhs
        rows.append([-Lgh[0], -Lgh[1], 0.0])
        rhs.append(Lfh - cbf_rhs)
    lb = np.array([params.u_min[0], params.u_min[1], 0.0])
    ub = np.array([params.u_max[0], params.u_max[1], np.inf])
    return QPProblem(Hq, fq, np.array(rows), np.array(rhs), lb, ub)


def control_step(
    state: Pose2D,
    target: Pose2D,
    obstacles,
    controller_state: ControllerState,
    params: ControllerParams,
    dt: float | None = None,
) -> Twist:
    """One control update; mutates ``controller_state``.

    With ``dt`` given, the QP twist is checked by integrating one step: if
    any barrier would go negative the twist is scaled toward zero until it
    does not. Scaling preserves every QP row because the rows are
    homogeneous in u and the zero twist lies in the input box.
    """
    ref = reference_pose(state, target, params.heading_radius)
    problem = assemble_qp(state, ref, obstacles, controller_state, params)
    sol = solve_qp(problem)
    controller_state.last_solution = sol
    if not sol.ok:
        controller_state.infeasible = True
        controller_state.u_l = Twist(0.0, 0.0)
        controller_state.step_scale = 0.0
        return controller_state.u_l

    v = float(np.clip(sol.u[0], params.u_min[0], params.u_max[0]))
    w = float(np.clip(sol.u[1], params.u_min[1], params.u_max[1]))
    twist = Twist(v, w)
    scale = 1.0
    if dt is not None and obstacles:
        d = params.cbf.lookahead
        for _ in range(30):
            nxt = integrate(state, twist, dt)
            if min_barrier(nxt, obstacles, params.safe_radius, d) >= 0.0:
                break
            scale *= 0.5
            twist = Twist(v * scale, w * scale)
        else:
            scale = 0.0
            twist = Twist(0.0, 0.0)
    controller_state.step_scale = scale
    controller_state.u_l = twist
    return twist
