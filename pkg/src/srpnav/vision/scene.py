"""Seeded synthetic scenes with ground truth for the vision checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ba import Observation
from .camera import CameraIntrinsics, RigidPose3D, project_many, so3_exp
from .features import GRID_CELL, IMAGE_SIZE, FeatureSet


@dataclass(frozen=True)
class SceneSpec:
    n_landmarks: int = 200
    n_frames: int = 2
    noise_sigma: float = 0.5  # px, on (u, v) of every observation
    outlier_fraction: float = 0.3  # of the frame 0 <-> frame 1 correspondences
    descriptor_dim: int = 32
    baseline: float = 0.3  # m between consecutive camera centres
    intrinsics: CameraIntrinsics = CameraIntrinsics(500.0, 500.0, 320.0, 240.0)
    image_size: tuple[int, int] = IMAGE_SIZE
    margin: float = 10.0  # px kept clear of the image border

    def __post_init__(self):
        if self.n_landmarks < 1 or self.n_frames < 1:
            raise ValueError("need at least one landmark and one frame")
        if self.noise_sigma < 0 or not 0 <= self.outlier_fraction <= 1:
            raise ValueError("noise must be non-negative and the outlier fraction in [0, 1]")


@dataclass(frozen=True)
class SyntheticScene:
    spec: SceneSpec
    seed: int
    landmarks: np.ndarray  # (N, 3) world
    poses: tuple[RigidPose3D, ...]  # world-to-camera
    clean: tuple[np.ndarray, ...]  # per frame (N, 3) noiseless (u, v, Z)
    observed: tuple[np.ndarray, ...]  # per frame (N, 3) with pixel noise
    p1: np.ndarray  # (N, 2) frame 0 pixels of the correspondence set
    p2: np.ndarray  # (N, 2) frame 1 pixels, planted outliers replaced
    outliers: np.ndarray  # (N,) bool ground truth
    descriptors: tuple[np.ndarray, ...]
    directions: tuple[np.ndarray, ...]

    @property
    def K(self) -> CameraIntrinsics:
        return self.spec.intrinsics

    def feature_set(self, frame: int) -> FeatureSet:
        return FeatureSet.build(
            self.observed[frame][:, :2], self.descriptors[frame], self.directions[frame], GRID_CELL, self.spec.image_size
        )

    def observations(self, frames=None, noisy: bool = True) -> list[Observation]:
        frames = range(self.spec.n_frames) if frames is None else frames
        src = self.observed if noisy else self.clean
        return [Observation(f, i, tuple(src[f][i])) for f in frames for i in range(len(self.landmarks))]


def _camera_poses(spec: SceneSpec, rng) -> list[RigidPose3D]:
    poses = []
    for k in range(spec.n_frames):
        if k == 0:
            poses.append(RigidPose3D())
            continue
        centre = np.array([spec.baseline * k, 0.0, 0.0]) + rng.normal(0.0, 0.05, 3)
        R = so3_exp(rng.normal(0.0, 0.03, 3))
        poses.append(RigidPose3D(R, -R @ centre))
    return poses


def _visible(points, pose, spec) -> np.ndarray:
    Pc = pose.apply(points)
    ok = Pc[:, 2] > 0.5
    uv = np.full((len(points), 2), -np.inf)
    K = spec.intrinsics
    uv[ok] = np.column_stack([K.fx * Pc[ok, 0] / Pc[ok, 2] + K.cx, K.fy * Pc[ok, 1] / Pc[ok, 2] + K.cy])
    w, h = spec.image_size
    m = spec.margin
    return ok & (uv[:, 0] >= m) & (uv[:, 0] <= w - m) & (uv[:, 1] >= m) & (uv[:, 1] <= h - m)


def generate_scene(spec: SceneSpec = SceneSpec(), seed: int = 0) -> SyntheticScene:
    rng = np.random.default_rng(seed)
    poses = _camera_poses(spec, rng)
    N = spec.n_landmarks
    pts = np.zeros((0, 3))
    lo, hi = np.array([-3.0, -2.2, 4.0]), np.array([3.0, 2.2, 10.0])
    while len(pts) < N:
        cand = rng.uniform(lo, hi, size=(2 * N, 3))
        ok = np.ones(len(cand), dtype=bool)
        for pose in poses:
            ok &= _visible(cand, pose, spec)
        pts = np.vstack([pts, cand[ok]])
    pts = pts[:N]

    clean = [project_many(pts, pose, spec.intrinsics) for pose in poses]
    observed = []
    for c in clean:
        o = c.copy()
        if spec.noise_sigma > 0:
            o[:, :2] += rng.normal(0.0, spec.noise_sigma, (N, 2))
        observed.append(o)

    base_desc = rng.normal(0.0, 1.0, (N, spec.descriptor_dim))
    base_ang = rng.uniform(-np.pi, np.pi, N)
    descriptors, directions = [], []
    for _ in poses:
        descriptors.append(base_desc + rng.normal(0.0, 0.05, base_desc.shape))
        a = base_ang + rng.normal(0.0, 0.05, N)
        directions.append(np.column_stack([np.cos(a), np.sin(a)]))

    p1 = observed[0][:, :2].copy()
    p2 = (observed[1] if spec.n_frames > 1 else observed[0])[:, :2].copy()
    n_out = int(round(spec.outlier_fraction * N))
    outliers = np.zeros(N, dtype=bool)
    if n_out:
        idx = rng.choice(N, n_out, replace=False)
        outliers[idx] = True
        w, h = spec.image_size
        p2[idx] = rng.uniform([0.0, 0.0], [w, h], size=(n_out, 2))

    return SyntheticScene(
        spec, seed, pts, tuple(poses), tuple(clean), tuple(observed), p1, p2, outliers,
        tuple(descriptors), tuple(directions),
    )
