"""Dense active-set solver for small strictly convex QPs.

    minimize    1/2 u^T H u + f^T u
    subject to  A u <= b,  lb <= u <= ub

The iteration is the dual active-set scheme of Goldfarb and Idnani: start
from the unconstrained minimizer and repeatedly add the most violated
constraint, dropping active constraints whose multiplier would turn
negative. Primal feasibility is only reached at termination, so no phase-1
problem is needed, and an inconsistent constraint set yields an explicit
certificate (the violated normal is a non-positive combination of the
active normals).

Problems here are tiny (n <= 4, a couple dozen rows), so every iteration
recomputes its small linear algebra from scratch instead of updating
factorizations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 100
MAX_CONDITION = 1e12


class QPStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"


class InvalidQP(ValueError):
    pass


@dataclass(frozen=True)
class QPProblem:
    H: np.ndarray
    f: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        n = H.shape[0]
        f = np.asarray(self.f, dtype=float).reshape(n)
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        b = np.asarray(self.b, dtype=float).reshape(A.shape[0])
        lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        for name, val in (("H", H), ("f", f), ("A", A), ("b", b)):
            object.__setattr__(self, name, val)
            val.setflags(write=False)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        lb.setflags(write=False)
        ub.setflags(write=False)
        if H.shape != (n, n):
            raise InvalidQP(f"H must be square, got {H.shape}")
        if not np.all(np.isfinite(H)) or not np.all(np.isfinite(f)):
            raise InvalidQP("non-finite cost")
        if not np.all(np.isfinite(A)) or np.any(np.isnan(b)):
            raise InvalidQP("non-finite constraints")
        if np.max(np.abs(H - H.T), initial=0.0) > 1e-10:
            raise InvalidQP("H is not symmetric")
        try:
            np.linalg.cholesky(H)
        except np.linalg.LinAlgError as exc:
            raise InvalidQP("H is not positive definite") from exc

    @property
    def n(self) -> int:
        return self.H.shape[0]

    def objective(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(0.5 * u @ self.H @ u + self.f @ u)

    def stacked_constraints(self) -> tuple[np.ndarray, np.ndarray]:
        """All rows as ``G u <= h``: general rows, then finite upper, then finite lower bounds."""
        n = self.n
        eye = np.eye(n)
        up = np.isfinite(self.ub)
        lo = np.isfinite(self.lb)
        G = np.vstack([self.A, eye[up], -eye[lo]])
        h = np.concatenate([self.b, self.ub[up], -self.lb[lo]])
        return G, h

    def max_violation(self, u) -> float:
        G, h = self.stacked_constraints()
        if G.shape[0] == 0:
            return 0.0
        return float(max(np.max(G @ np.asarray(u, dtype=float) - h), 0.0))


@dataclass(frozen=True)
class QPSolution:
    u: np.ndarray
    objective: float
    status: QPStatus
    multipliers: np.ndarray  # one per row of stacked_constraints()
    active: tuple[int, ...]
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status is QPStatus.OPTIMAL


def solve_qp(
    problem: QPProblem,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> QPSolution:
    H, f = problem.H, problem.f
    G, h = problem.stacked_constraints()
    m = G.shape[0]

    def result(x, status, active, lam, it):
        mult = np.zeros(m)
        for j, l in zip(active, lam):
            mult[j] = l
        x = np.array(x, dtype=float)
        return QPSolution(x, problem.objective(x), status, mult, tuple(active), it)

    if np.linalg.cond(H) > MAX_CONDITION:
        return result(np.zeros(problem.n), QPStatus.ITERATION_LIMIT, [], [], 0)

    L = np.linalg.cholesky(H)
    Linv = np.linalg.inv(L)
    Hinv = Linv.T @ Linv
    x = -Hinv @ f
    active: list[int] = []
    lam: list[float] = []
    iterations = 0

    while True:
        slack = G @ x - h
        if active:
            slack[active] = -np.inf
        if m == 0 or np.max(slack) <= tolerance:
            return result(x, QPStatus.OPTIMAL, active, lam, iterations)
        p = int(np.argmax(slack))
        lam_p = 0.0
        n_p = G[p]
        Hinv_np = Hinv @ n_p
        scale_p = float(n_p @ Hinv_np)

        while True:
            iterations += 1
            if iterations > max_iterations:
                return result(x, QPStatus.ITERATION_LIMIT, active, lam, iterations - 1)
            if active:
                N = G[active].T
                Hinv_N = Hinv @ N
                M = N.T @ Hinv_N
                if np.linalg.cond(M) > MAX_CONDITION:
                    return result(x, QPStatus.ITERATION_LIMIT, active, lam, iterations)
                r = np.linalg.solve(M, N.T @ Hinv_np)
                z = Hinv_np - Hinv_N @ r
            else:
                r = np.zeros(0)
                z = Hinv_np
            zn = float(z @ n_p)
            # zn / scale_p is the squared sine between n_p and span(active)
            primal_step = len(active) < problem.n and zn > 1e-10 * scale_p

            t1, k = np.inf, -1
            for idx, rj in enumerate(r):
                if rj > 1e-14 and lam[idx] / rj < t1:
                    t1, k = lam[idx] / rj, idx
            t2 = (float(n_p @ x - h[p]) / zn) if primal_step else np.inf

            if not primal_step and k < 0:
                # n_p is a non-positive combination of active normals
                return result(x, QPStatus.INFEASIBLE, active, lam, iterations)

            t = min(t1, t2)
            if primal_step:
                x = x - t * z
            lam = [l - t * rj for l, rj in zip(lam, r)]
            lam_p += t
            if primal_step and t2 <= t1:
                active.append(p)
                lam.append(lam_p)
                break
            # partial step: constraint k leaves the active set
            del active[k]
            del lam[k]
