"""Comparison planners: artificial potential field and a Voronoi roadmap.

Both work on the true obstacle rectangles (walls included), not on the
reconstructed disks, and drive the same unicycle under the same input box
as the CLF-CBF controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import Voronoi

from .geometry import Disk, Pose2D, Twist, point_rect_distance_grad, wrap_angle
from .trajectory import EpisodeStop, RolloutConfig, Termination, Trajectory, rollout


class InsideObstacle(ValueError):
    pass


class NoPath(RuntimeError):
    pass


@dataclass(frozen=True)
class ApfParams:
    k_att: float = 1.0
    k_rep: float = 0.5
    rho0: float = 0.6  # m, influence radius
    step_gain: float = 1.0  # v = step_gain * |F| (projected on the heading)
    heading_gain: float = 2.0  # omega = heading_gain * bearing error

    def __post_init__(self):
        for name in ("k_att", "k_rep", "rho0", "step_gain", "heading_gain"):
            if not getattr(self, name) > 0:
                raise ValueError(f"APF parameter {name} must be positive")


@dataclass(frozen=True)
class VoronoiParams:
    sample_spacing: float = 0.1  # m, boundary sampling for the diagram
    tracker_lookahead: float = 0.3  # m, pure pursuit
    max_cross_track: float = 1.0  # m

    def __post_init__(self):
        if not (self.sample_spacing > 0 and self.tracker_lookahead > 0 and self.max_cross_track > 0):
            raise ValueError("Voronoi parameters must be positive")


# --- APF ---------------------------------------------------------------------


def _surface_distance(p: np.ndarray, ob) -> tuple[float, np.ndarray]:
    if isinstance(ob, Disk):
        diff = p - np.asarray(ob.center)
        n = float(np.hypot(*diff))
        if n == 0.0:
            return -ob.radius, np.zeros(2)
        return n - ob.radius, diff / n
    return point_rect_distance_grad(p, ob)


def apf_potential(position, target, obstacles, params: ApfParams) -> float:
    p = np.asarray(position, dtype=float)
    U = 0.5 * params.k_att * float(np.sum((p - np.asarray(target, float)) ** 2))
    for ob in obstacles:
        rho, _ = _surface_distance(p, ob)
        if rho <= 0:
            return math.inf
        if rho < params.rho0:
            U += 0.5 * params.k_rep * (1.0 / rho - 1.0 / params.rho0) ** 2
    return U


def apf_force(position, target, obstacles, params: ApfParams) -> np.ndarray:
    """Negative gradient of ``apf_potential``; obstacles may be rectangles or disks."""
    p = np.asarray(position, dtype=float)
    F = -params.k_att * (p - np.asarray(target, dtype=float))
    for ob in obstacles:
        rho, grad = _surface_distance(p, ob)
        if rho <= 0:
            raise InsideObstacle(f"position {tuple(p)} is inside obstacle {ob}")
        if rho < params.rho0:
            F = F + params.k_rep * (1.0 / rho - 1.0 / params.rho0) / rho**2 * grad
    return F


class _ApfPolicy:
    def __init__(self, target, obstacles, params: ApfParams, u_min, u_max, capture_radius):
        self.target = np.asarray(target, dtype=float)
        self.obstacles = obstacles
        self.params = params
        self.u_min, self.u_max = u_min, u_max
        self.capture_radius = capture_radius
        self.slow_steps = 0

    def __call__(self, state: Pose2D) -> Twist:
        try:
            F = apf_force(state.position, self.target, self.obstacles, self.params)
        except InsideObstacle as exc:
            raise EpisodeStop(Termination.COLLISION, str(exc)) from None
        mag = float(np.hypot(*F))
        err = wrap_angle(math.atan2(F[1], F[0]) - state.theta) if mag > 0 else 0.0
        v = self.params.step_gain * mag * max(math.cos(err), 0.0)
        w = self.params.heading_gain * err
        v = min(max(v, self.u_min[0]), self.u_max[0])
        w = min(max(w, self.u_min[1]), self.u_max[1])
        if abs(v) < 1e-3 and np.hypot(*(state.position - self.target)) > self.capture_radius:
            self.slow_steps += 1
            if self.slow_steps >= 100:
                raise EpisodeStop(Termination.LOCAL_MINIMUM, "speed below 1e-3 m/s for 100 steps")
        else:
            self.slow_steps = 0
        return Twist(v, w)


def apf_plan(scenario, params: ApfParams | None = None, dt: float | None = None, max_steps: int | None = None) -> Trajectory:
    params = params or scenario.apf
    sim = scenario.sim
    ctrl = scenario.controller
    policy = _ApfPolicy(
        (scenario.target.x, scenario.target.y),
        scenario.obstacles,
        params,
        ctrl.u_min,
        ctrl.u_max,
        sim.capture_radius,
    )
    cfg = RolloutConfig(
        dt=dt or sim.dt,
        max_steps=sim.max_steps if max_steps is None else max_steps,
        capture_radius=sim.capture_radius,
        disks=scenario.disks,
        safe_radius=scenario.safe_radius,
        lookahead=ctrl.cbf.lookahead,
    )
    return rollout(scenario.start, (scenario.target.x, scenario.target.y), policy, cfg)


# --- Voronoi roadmap ---------------------------------------------------------


@dataclass(frozen=True)
class RoadmapGraph:
    vertices: np.ndarray  # (V, 2)
    edges: np.ndarray  # (E, 2) vertex indices, undirected
    lengths: np.ndarray  # (E,)
    clearance: np.ndarray  # (E,)
    sites: np.ndarray  # boundary samples the diagram was built from
    site_owner: np.ndarray  # obstacle index of each site


def sample_boundaries(rects, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    pts, owner = [], []
    for i, rect in enumerate(rects):
        c = rect.corners()
        for a, b in zip(c, np.roll(c, -1, axis=0)):
            n = max(int(math.ceil(np.hypot(*(b - a)) / spacing)), 1)
            s = np.arange(n)[:, None] / n
            pts.append(a + s * (b - a))
            owner.append(np.full(n, i))
    return np.vstack(pts), np.concatenate(owner)


def _rect_arrays(rects):
    lo = np.array([[r.bounds[0], r.bounds[2]] for r in rects])
    hi = np.array([[r.bounds[1], r.bounds[3]] for r in rects])
    return lo, hi


def points_clearance(P: np.ndarray, rects) -> np.ndarray:
    """Distance from each point to the nearest rectangle (0 inside)."""
    lo, hi = _rect_arrays(rects)
    d = np.maximum(np.maximum(lo[None] - P[:, None], P[:, None] - hi[None]), 0.0)
    return np.min(np.hypot(d[..., 0], d[..., 1]), axis=1)


def segments_clearance(A: np.ndarray, B: np.ndarray, rects) -> np.ndarray:
    """Exact distance from each segment A[i]B[i] to the nearest rectangle."""
    lo, hi = _rect_arrays(rects)
    E, R = len(A), len(rects)
    best = np.minimum(points_clearance(A, rects), points_clearance(B, rects))[:, None] * np.ones((1, R))
    D = B - A
    DD = np.einsum("ij,ij->i", D, D)
    corners = np.stack([lo, np.c_[hi[:, 0], lo[:, 1]], hi, np.c_[lo[:, 0], hi[:, 1]]], axis=1)  # (R,4,2)
    for k in range(4):
        C = corners[:, k]  # (R,2)
        AC = C[None] - A[:, None]  # (E,R,2)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(DD[:, None] > 0, np.einsum("erj,ej->er", AC, D) / DD[:, None], 0.0)
        s = np.clip(s, 0.0, 1.0)
        closest = A[:, None] + s[..., None] * D[:, None]
        best = np.minimum(best, np.hypot(*(closest - C[None]).transpose(2, 0, 1)))
    # Liang-Barsky intersection test, vectorized over (E, R)
    t0 = np.zeros((E, R))
    t1 = np.ones((E, R))
    hit = np.ones((E, R), dtype=bool)
    for axis in range(2):
        d = D[:, axis][:, None]
        a = A[:, axis][:, None]
        for p, q in ((-d, a - lo[None, :, axis]), (d, hi[None, :, axis] - a)):
            p = np.broadcast_to(p, (E, R))
            zero = p == 0.0
            hit &= ~(zero & (q < 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(zero, 0.0, q / np.where(zero, 1.0, p))
            t0 = np.where(~zero & (p < 0.0), np.maximum(t0, r), t0)
            t1 = np.where(~zero & (p > 0.0), np.minimum(t1, r), t1)
    hit &= t0 <= t1
    best = np.where(hit, 0.0, best)
    return np.min(best, axis=1)


def build_roadmap(scenario) -> RoadmapGraph:
    rects = list(scenario.obstacles)
    r_s = scenario.safe_radius
    room = scenario.room
    sites, owner = sample_boundaries(rects, scenario.voronoi.sample_spacing)
    # only the room-facing side of a wall shapes the free-space diagram
    is_wall = np.array([r.is_wall for r in rects])
    tol = 1e-9
    on_room = (
        (sites[:, 0] >= room.xmin - tol) & (sites[:, 0] <= room.xmax + tol)
        & (sites[:, 1] >= room.ymin - tol) & (sites[:, 1] <= room.ymax + tol)
    )
    keep_site = ~is_wall[owner] | on_room
    sites, owner = sites[keep_site], owner[keep_site]
    vor = Voronoi(sites)
    rp = np.asarray(vor.ridge_points)
    rv = np.asarray(vor.ridge_vertices)
    keep = (rv[:, 0] >= 0) & (rv[:, 1] >= 0) & (owner[rp[:, 0]] != owner[rp[:, 1]])
    rv = rv[keep]
    V = vor.vertices
    inside_room = (
        (V[:, 0] >= room.xmin - tol) & (V[:, 0] <= room.xmax + tol)
        & (V[:, 1] >= room.ymin - tol) & (V[:, 1] <= room.ymax + tol)
    )
    rv = rv[inside_room[rv[:, 0]] & inside_room[rv[:, 1]]]
    if len(rv) == 0:
        raise NoPath("empty roadmap")
    clear = segments_clearance(V[rv[:, 0]], V[rv[:, 1]], rects)
    ok = clear >= r_s
    rv, clear = rv[ok], clear[ok]
    used, inv = np.unique(rv.ravel(), return_inverse=True)
    edges = inv.reshape(-1, 2)
    verts = V[used]
    lengths = np.hypot(*(verts[edges[:, 0]] - verts[edges[:, 1]]).T)
    return RoadmapGraph(verts, edges, lengths, clear, sites, owner)


def _connect(point: np.ndarray, graph: RoadmapGraph, rects, r_s: float) -> int:
    order = np.argsort(np.hypot(*(graph.vertices - point).T), kind="stable")
    # test candidates nearest-first in batches so the common case stays cheap
    for start in range(0, len(order), 32):
        idx = order[start : start + 32]
        A = np.repeat(point[None], len(idx), axis=0)
        ok = segments_clearance(A, graph.vertices[idx], rects) >= r_s
        if ok.any():
            return int(idx[np.argmax(ok)])
    raise NoPath(f"no roadmap vertex reachable from {tuple(point)}")


def voronoi_plan(scenario, graph: RoadmapGraph | None = None) -> np.ndarray:
    """Shortest roadmap path from start to target as an (N, 2) polyline."""
    graph = graph or build_roadmap(scenario)
    if len(graph.edges) == 0:
        raise NoPath("roadmap has no edges with enough clearance")
    rects = list(scenario.obstacles)
    r_s = scenario.safe_radius
    start = scenario.start.position
    goal = np.array([scenario.target.x, scenario.target.y])
    s_idx = _connect(start, graph, rects, r_s)
    g_idx = _connect(goal, graph, rects, r_s)
    n = len(graph.vertices)
    W = coo_matrix(
        (np.r_[graph.lengths, graph.lengths], (np.r_[graph.edges[:, 0], graph.edges[:, 1]], np.r_[graph.edges[:, 1], graph.edges[:, 0]])),
        shape=(n, n),
    ).tocsr()
    dist, pred = dijkstra(W, directed=True, indices=s_idx, return_predecessors=True)
    if not np.isfinite(dist[g_idx]):
        raise NoPath("start and target lie in disconnected roadmap components")
    chain = [g_idx]
    while chain[-1] != s_idx:
        chain.append(int(pred[chain[-1]]))
    chain.reverse()
    path = np.vstack([start, graph.vertices[chain], goal])
    # drop zero-length hops (start or goal exactly on a vertex)
    keep = np.r_[True, np.hypot(*np.diff(path, axis=0).T) > 1e-12]
    return path[keep]


# --- path tracking -------------------------------------------------------------


class _PurePursuit:
    def __init__(self, path: np.ndarray, lookahead: float, u_min, u_max, max_cross_track: float):
        self.path = path
        seg = np.diff(path, axis=0)
        self.seg_len = np.hypot(*seg.T)
        self.cum = np.r_[0.0, np.cumsum(self.seg_len)]
        self.L = lookahead
        self.u_min, self.u_max = u_min, u_max
        self.max_cross_track = max_cross_track
        self.progress = 0.0  # arc length of the last projection; never decreases

    def _project(self, p: np.ndarray) -> tuple[float, float]:
        best_d, best_s = math.inf, self.progress
        for i in range(len(self.seg_len)):
            if self.cum[i + 1] < self.progress - 1e-9:
                continue
            a, b = self.path[i], self.path[i + 1]
            L = self.seg_len[i]
            s = 0.0 if L == 0 else float(np.clip((p - a) @ (b - a) / L**2, 0.0, 1.0))
            s_arc = max(self.cum[i] + s * L, self.progress)
            q = self._point_at(s_arc)
            d = float(np.hypot(*(p - q)))
            if d < best_d - 1e-12:
                best_d, best_s = d, s_arc
            if self.cum[i] > self.progress + 3.0 * self.L + best_d:
                break
        return best_s, best_d

    def _point_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.cum[-1])
        i = min(int(np.searchsorted(self.cum, s, side="right")) - 1, len(self.seg_len) - 1)
        L = self.seg_len[i]
        f = 0.0 if L == 0 else (s - self.cum[i]) / L
        return self.path[i] + f * (self.path[i + 1] - self.path[i])

    def __call__(self, state: Pose2D) -> Twist:
        p = state.position
        s, cross = self._project(p)
        if cross > self.max_cross_track:
            raise EpisodeStop(Termination.DIVERGED, f"cross-track error {cross:.3f} m")
        self.progress = s
        goal = self.path[-1]
        aim = self._point_at(s + self.L)
        dx, dy = aim - p
        dist = math.hypot(dx, dy)
        if dist < 1e-9:
            return Twist(0.0, 0.0)
        alpha = wrap_angle(math.atan2(dy, dx) - state.theta)
        w_max = min(-self.u_min[1], self.u_max[1])
        if abs(alpha) > math.pi / 2:
            return Twist(0.0, math.copysign(w_max, alpha))
        kappa = 2.0 * math.sin(alpha) / dist
        v = self.u_max[0]
        if abs(kappa) > 1e-12:
            v = min(v, w_max / abs(kappa))
        v = min(v, max(float(np.hypot(*(goal - p))), 0.05))
        return Twist(v, v * kappa)


def follow_path(path, scenario, dt: float | None = None, max_steps: int | None = None) -> Trajectory:
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[0] < 2 or path.shape[1] != 2:
        raise ValueError("path needs at least two 2D points")
    sim = scenario.sim
    ctrl = scenario.controller
    vp = scenario.voronoi
    policy = _PurePursuit(path, vp.tracker_lookahead, ctrl.u_min, ctrl.u_max, vp.max_cross_track)
    cfg = RolloutConfig(
        dt=dt or sim.dt,
        max_steps=sim.max_steps if max_steps is None else max_steps,
        capture_radius=sim.capture_radius,
        disks=scenario.disks,
        safe_radius=scenario.safe_radius,
        lookahead=ctrl.cbf.lookahead,
    )
    traj = rollout(scenario.start, path[-1], policy, cfg)
    traj.path = path
    return traj
