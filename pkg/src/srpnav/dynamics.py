"""Unicycle kinematics: x' = v cos(theta), y' = v sin(theta), theta' = omega."""

from __future__ import annotations

import math

import numpy as np

from .geometry import Pose2D, Twist


def unicycle_rhs(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.array([u[0] * math.cos(s[2]), u[0] * math.sin(s[2]), u[1]])


def input_matrix(theta: float) -> np.ndarray:
    """g(s): columns are the state velocity for unit v and unit omega."""
    return np.array([[math.cos(theta), 0.0], [math.sin(theta), 0.0], [0.0, 1.0]])


def integrate(state: Pose2D, twist: Twist, dt: float) -> Pose2D:
    """One classical RK4 step with the twist held constant over ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    s = state.as_array()
    u = twist.as_array()
    k1 = unicycle_rhs(s, u)
    k2 = unicycle_rhs(s + 0.5 * dt * k1, u)
    k3 = unicycle_rhs(s + 0.5 * dt * k2, u)
    k4 = unicycle_rhs(s + dt * k3, u)
    nxt = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Pose2D(float(nxt[0]), float(nxt[1]), float(nxt[2]))
