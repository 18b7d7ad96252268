"""Pinhole RGB-D camera, rigid and similarity transforms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation


class BehindCamera(ValueError):
    pass


def hat(w) -> np.ndarray:
    """Skew-symmetric matrix with hat(w) @ v == cross(w, v)."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def so3_exp(phi) -> np.ndarray:
    return Rotation.from_rotvec(np.asarray(phi, dtype=float)).as_matrix()


def so3_log(R) -> np.ndarray:
    return Rotation.from_matrix(np.asarray(R, dtype=float)).as_rotvec()


def _check_rotation(R: np.ndarray, tol: float = 1e-10):
    if R.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("matrix is not a rotation")


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class RigidPose3D:
    """World-to-camera transform: X_c = R X_w + t."""

    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        t = np.array(self.t, dtype=float).reshape(3)
        _check_rotation(R)
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def apply(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.R.T + self.t

    def perturbed(self, phi, rho) -> "RigidPose3D":
        """Left update: R <- Exp(phi) R, t <- t + rho."""
        return RigidPose3D(so3_exp(phi) @ self.R, self.t + np.asarray(rho, dtype=float))

    def rotation_error(self, other: "RigidPose3D") -> float:
        return float(np.linalg.norm(so3_log(self.R @ other.R.T)))

    def translation_error(self, other: "RigidPose3D") -> float:
        return float(np.linalg.norm(self.t - other.t))


@dataclass(frozen=True)
class Sim3:
    """Similarity transform p -> s R p + t."""

    s: float = 1.0
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("Sim3 scale must be positive")
        R = np.array(self.R, dtype=float)
        _check_rotation(R)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", np.array(self.t, dtype=float).reshape(3))

    def apply(self, points) -> np.ndarray:
        return self.s * (np.asarray(points, dtype=float) @ self.R.T) + self.t

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.s * self.R
        M[:3, 3] = self.t
        return M

    def compose(self, other: "Sim3") -> "Sim3":
        """``self`` after ``other``."""
        return Sim3(self.s * other.s, self.R @ other.R, self.s * self.R @ other.t + self.t)


def correct_points_sim3(points, S_rw: Sim3, corS_wr: Sim3) -> np.ndarray:
    """Map world points into the reference keyframe with ``S_rw``, then back with the corrected ``corS_wr``."""
    return corS_wr.apply(S_rw.apply(points))


def project_rgbd(point_world, pose: RigidPose3D, K: CameraIntrinsics) -> np.ndarray:
    """(u, v, Z) of a world point; Z is the camera-frame depth."""
    X, Y, Z = pose.apply(point_world)
    if not Z > 0:
        raise BehindCamera(f"camera-frame depth {Z} is not positive")
    return np.array([K.fx * X / Z + K.cx, K.fy * Y / Z + K.cy, Z])


def project_many(points_world, pose: RigidPose3D, K: CameraIntrinsics) -> np.ndarray:
    """Vectorized ``project_rgbd``; rows are (u, v, Z)."""
    Pc = pose.apply(points_world)
    Z = Pc[:, 2]
    if np.any(Z <= 0):
        raise BehindCamera(f"{int(np.sum(Z <= 0))} points behind the camera")
    return np.column_stack([K.fx * Pc[:, 0] / Z + K.cx, K.fy * Pc[:, 1] / Z + K.cy, Z])
