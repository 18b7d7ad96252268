"""Matching, epipolar filtering and bundle adjustment on synthetic correspondences."""

from .ba import (
    HUBER_DELTA,
    DegenerateLandmarks,
    NotConverged,
    Observation,
    UnderconstrainedPoint,
    huber,
    local_ba,
    motion_only_ba,
    reprojection_jacobian,
)
from .camera import BehindCamera, CameraIntrinsics, RigidPose3D, Sim3, correct_points_sim3, project_rgbd
from .epipolar import (
    DegenerateConfiguration,
    DegenerateLine,
    TooFewMatches,
    epipolar_distance,
    estimate_fundamental_ransac,
    filter_outliers,
)
from .features import FeatureSet, Matches, match_features
from .scene import SceneSpec, SyntheticScene, generate_scene

__all__ = [
    "HUBER_DELTA",
    "BehindCamera",
    "CameraIntrinsics",
    "DegenerateConfiguration",
    "DegenerateLandmarks",
    "DegenerateLine",
    "FeatureSet",
    "Matches",
    "NotConverged",
    "Observation",
    "RigidPose3D",
    "SceneSpec",
    "Sim3",
    "SyntheticScene",
    "TooFewMatches",
    "UnderconstrainedPoint",
    "correct_points_sim3",
    "epipolar_distance",
    "estimate_fundamental_ransac",
    "filter_outliers",
    "generate_scene",
    "huber",
    "local_ba",
    "match_features",
    "motion_only_ba",
    "project_rgbd",
    "reprojection_jacobian",
]
