"""Slow reference computations used only by the tests.

None of these share code with the package paths they check.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def stack(H, f, A, b, lb, ub):
    n = len(f)
    rows, rhs = [np.asarray(A, float).reshape(-1, n)], [np.asarray(b, float)]
    for i in range(n):
        if math.isfinite(ub[i]):
            e = np.zeros(n)
            e[i] = 1
            rows.append(e[None])
            rhs.append([ub[i]])
        if math.isfinite(lb[i]):
            e = np.zeros(n)
            e[i] = -1
            rows.append(e[None])
            rhs.append([-lb[i]])
    return np.vstack(rows), np.concatenate([np.atleast_1d(r) for r in rhs])


def qp_enumerate(H, f, G, h, tol=1e-9):
    """Exact minimizer of a strictly convex QP by trying every active set of size <= n.

    Returns (x, objective) or None when no candidate is KKT-feasible.
    """
    H = np.asarray(H, float)
    f = np.asarray(f, float)
    n = len(f)
    m = G.shape[0]
    best = None
    for k in range(0, min(n, m) + 1):
        for S in itertools.combinations(range(m), k):
            S = list(S)
            K = np.zeros((n + k, n + k))
            K[:n, :n] = H
            K[:n, n:] = G[S].T
            K[n:, :n] = G[S]
            rhs = np.concatenate([-f, h[S]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(sol)):
                continue
            x, lam = sol[:n], sol[n:]
            if np.any(lam < -tol):
                continue
            if np.any(G @ x - h > tol * (1 + np.abs(h))):
                continue
            obj = 0.5 * x @ H @ x + f @ x
            if best is None or obj < best[1]:
                best = (x, obj)
    return best


def qp_dual_projected_gradient(H, f, G, h, iters=200000, tol=1e-13):
    """Accelerated projected gradient ascent on the QP dual (projection = clip at 0).

    Returns the primal point recovered from the dual iterate.
    """
    Hinv = np.linalg.inv(H)
    Q = G @ Hinv @ G.T
    c = G @ Hinv @ f + h
    L = max(np.linalg.eigvalsh(Q).max(), 1e-12)
    lam = np.zeros(G.shape[0])
    y = lam.copy()
    t = 1.0
    for _ in range(iters):
        grad = -(Q @ y) - c
        new = np.maximum(y + grad / L, 0.0)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = new + (t - 1) / t_new * (new - lam)
        if np.max(np.abs(new - lam)) < tol:
            lam = new
            break
        lam, t = new, t_new
    return -Hinv @ (f + G.T @ lam)


def lp_feasible(G, h):
    """True when {x : G x <= h} is non-empty (HiGHS)."""
    n = G.shape[1]
    res = linprog(np.zeros(n), A_ub=G, b_ub=h, bounds=[(None, None)] * n, method="highs")
    return res.status == 0


def central_difference(fun, x, step=1e-5):
    x = np.asarray(x, float)
    f0 = np.atleast_1d(fun(x))
    J = np.zeros((f0.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        J[:, i] = (np.atleast_1d(fun(x + e)) - np.atleast_1d(fun(x - e))) / (2 * step)
    return J


def rect_boundary_points(rect, step=0.005):
    """Dense samples on the rectangle outline (and the filled interior marker)."""
    x0, x1, y0, y1 = rect.bounds
    xs = np.linspace(x0, x1, max(int((x1 - x0) / step), 1) + 1)
    ys = np.linspace(y0, y1, max(int((y1 - y0) / step), 1) + 1)
    return np.vstack([
        np.column_stack([xs, np.full_like(xs, y0)]),
        np.column_stack([xs, np.full_like(xs, y1)]),
        np.column_stack([np.full_like(ys, x0), ys]),
        np.column_stack([np.full_like(ys, x1), ys]),
    ])


def dense_clearance(polyline, rects, step=0.01):
    """Minimum distance from a polyline to a set of rectangles by sampling both at ``step``."""
    pts = []
    P = np.asarray(polyline, float)
    for a, b in zip(P[:-1], P[1:]):
        n = max(int(math.ceil(np.hypot(*(b - a)) / step)), 1)
        pts.append(a + np.linspace(0, 1, n + 1)[:, None] * (b - a))
    pts = np.vstack(pts)
    best = np.inf
    for r in rects:
        x0, x1, y0, y1 = r.bounds
        inside = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
        if inside.any():
            return 0.0
        B = rect_boundary_points(r, step)
        for chunk in np.array_split(pts, max(len(pts) // 2000, 1)):
            d = np.sqrt(((chunk[:, None, :] - B[None]) ** 2).sum(-1)).min()
            best = min(best, d)
    return best


def arc_pose(x, y, theta, v, w, t):
    """Closed-form unicycle pose after time t with constant (v, w), w != 0."""
    return (
        x + v / w * (math.sin(theta + w * t) - math.sin(theta)),
        y - v / w * (math.cos(theta + w * t) - math.cos(theta)),
        theta + w * t,
    )


def triangulate_least_squares(poses, observations, K, x0):
    """Point minimizing the plain (u, v, Z) residual by scipy's trust-region solver."""
    from scipy.optimize import least_squares

    def fun(X):
        r = []
        for pose, obs in zip(poses, observations):
            Pc = pose.R @ X + pose.t
            r.extend([
                obs[0] - (K.fx * Pc[0] / Pc[2] + K.cx),
                obs[1] - (K.fy * Pc[1] / Pc[2] + K.cy),
                obs[2] - Pc[2],
            ])
        return np.array(r)

    return least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15).x


def V_oracle(s, target, P):
    e = np.array(s, float) - np.array(target, float)
    e[2] = (e[2] + math.pi) % (2 * math.pi) - math.pi
    return float(e @ P @ e)


def h_oracle(s, c, r, d):
    px = s[0] + d * math.cos(s[2])
    py = s[1] + d * math.sin(s[2])
    return (px - c[0]) ** 2 + (py - c[1]) ** 2 - r**2


def flow_derivative(fun, s, column, eps=1e-5):
    """d/dt of fun along the unicycle flow under a unit input on one channel."""
    def shift(sign):
        s2 = np.array(s, float)
        if column == 0:
            s2[0] += sign * eps * math.cos(s[2])
            s2[1] += sign * eps * math.sin(s[2])
        else:
            s2[2] += sign * eps
        return s2

    return (fun(shift(1)) - fun(shift(-1))) / (2 * eps)
