"""Scenario and problem builders shared by the tests."""

import numpy as np

from srpnav.qp import QPProblem
from srpnav.scenario import parse_scenario

INF = np.inf


def scenario(obstacles=(), start=(-3.0, -3.0, 0.0), targets=((3.0, 3.0),), **sections):
    data = {
        "room": {"x": [-5.0, 5.0], "y": [-5.0, 5.0]},
        "obstacles": [{"center": list(c), "size": list(s)} for c, s in obstacles],
        "start": list(start),
        "targets": [list(t) for t in targets],
    }
    data.update(sections)
    return parse_scenario(data)


def random_problem(rng, n, m, feasible=True):
    M = rng.normal(size=(n, n))
    H = M.T @ M + 0.1 * np.eye(n)
    f = rng.normal(size=n) * 3
    A = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    if feasible:
        b = A @ x0 + rng.uniform(0.0, 1.0, size=m)
    else:
        b = rng.normal(size=m)
    lb = np.where(rng.random(n) < 0.5, x0 - rng.uniform(0.1, 2, n), -INF)
    ub = np.where(rng.random(n) < 0.5, x0 + rng.uniform(0.1, 2, n), INF)
    if not feasible:
        lb = np.where(rng.random(n) < 0.3, ub + 0.5, lb)
    return QPProblem(H, f, A, b, lb, ub)
