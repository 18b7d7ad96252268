"""Planar domain types shared by the planners and the simulator.

Obstacles are axis-aligned rectangles. The CBF controller never sees them
directly: each one is replaced by its enclosing disk (the shape
reconstruction step), while the baselines measure distances to the true
rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InvalidObstacle(ValueError):
    """Raised for rectangles that cannot be enclosed (zero extent, bad sizes)."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)  # in [-pi, pi]
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class Pose2D:
    x: float  # m
    y: float  # m
    theta: float = 0.0  # rad, stored wrapped

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose {self}")
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class Twist:
    v: float = 0.0  # m/s
    omega: float = 0.0  # rad/s

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.omega)):
            raise ValueError(f"non-finite twist {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.omega])


@dataclass(frozen=True)
class ErrorVec:
    e_x: float
    e_y: float
    e_theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e_x, self.e_y, self.e_theta])


@dataclass(frozen=True)
class ObstacleRect:
    """Axis-aligned rectangle; ``length`` spans x and ``width`` spans y."""

    center: tuple[float, float]
    length: float
    width: float
    is_wall: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.length < 0 or self.width < 0 or not (math.isfinite(self.length) and math.isfinite(self.width)):
            raise InvalidObstacle(f"negative or non-finite size: {self.length} x {self.width}")
        if self.length == 0 and self.width == 0:
            raise InvalidObstacle("rectangle with zero length and zero width")

    @property
    def half_extents(self) -> np.ndarray:
        return np.array([self.length / 2.0, self.width / 2.0])

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax)."""
        cx, cy = self.center
        hl, hw = self.length / 2.0, self.width / 2.0
        return cx - hl, cx + hl, cy - hw, cy + hw

    def corners(self) -> np.ndarray:
        x0, x1, y0, y1 = self.bounds
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Room:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"empty room {self}")

    def contains(self, p) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax

    @property
    def center(self) -> np.ndarray:
        return np.array([(self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0])


def enclosing_disk(rect: ObstacleRect) -> Disk:
    """Smallest disk containing ``rect``: same center, radius = half diagonal."""
    r = math.hypot(rect.length / 2.0, rect.width / 2.0)
    return Disk(rect.center, r)


# A wall's enclosing disk would swallow half the room, so walls get a disk
# whose boundary is tangent to the inner face at its midpoint. Sagitta over a
# 10 m face is 25 / (2 * WALL_DISK_RADIUS) = 1.25 mm.
WALL_DISK_RADIUS = 1.0e4


def wall_disk(rect: ObstacleRect, room: Room, radius: float = WALL_DISK_RADIUS) -> Disk:
    """Large disk standing in for a wall rectangle on the outside of ``room``."""
    x0, x1, y0, y1 = rect.bounds
    cx, cy = rect.center
    rc = room.center
    if rect.length >= rect.width:
        # horizontal wall: inner face is the side facing the room center
        face_y = y0 if cy > rc[1] else y1
        sign = 1.0 if cy > rc[1] else -1.0
        return Disk((cx, face_y + sign * radius), radius)
    face_x = x0 if cx > rc[0] else x1
    sign = 1.0 if cx > rc[0] else -1.0
    return Disk((face_x + sign * radius, cy), radius)


def barrier_disk(rect: ObstacleRect, room: Room) -> Disk:
    return wall_disk(rect, room) if rect.is_wall else enclosing_disk(rect)


def pose_error(current: Pose2D, target: Pose2D) -> ErrorVec:
    return ErrorVec(
        current.x - target.x,
        current.y - target.y,
        wrap_angle(current.theta - target.theta),
    )


def point_rect_distance(p, rect: ObstacleRect) -> float:
    """Euclidean distance from ``p`` to the rectangle (0 on or inside it)."""
    d = np.abs(np.asarray(p, dtype=float) - np.asarray(rect.center)) - rect.half_extents
    return float(np.hypot(max(d[0], 0.0), max(d[1], 0.0)))


def point_rect_distance_grad(p, rect: ObstacleRect) -> tuple[float, np.ndarray]:
    """Distance to the rectangle and its gradient w.r.t. ``p`` (outside only)."""
    p = np.asarray(p, dtype=float)
    c = np.asarray(rect.center)
    q = np.clip(p, c - rect.half_extents, c + rect.half_extents)
    diff = p - q
    dist = float(np.hypot(*diff))
    if dist == 0.0:
        return 0.0, np.zeros(2)
    return dist, diff / dist


def point_in_rect(p, rect: ObstacleRect) -> bool:
    x0, x1, y0, y1 = rect.bounds
    return x0 < p[0] < x1 and y0 < p[1] < y1


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    s = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.hypot(*(a + s * ab - p)))


def _segment_hits_rect(a: np.ndarray, b: np.ndarray, rect: ObstacleRect) -> bool:
    # Liang-Barsky clip against the closed rectangle
    x0, x1, y0, y1 = rect.bounds
    d = b - a
    t0, t1 = 0.0, 1.0
    for p, q in ((-d[0], a[0] - x0), (d[0], x1 - a[0]), (-d[1], a[1] - y0), (d[1], y1 - a[1])):
        if p == 0.0:
            if q < 0.0:
                return False
            continue
        with np.errstate(over="ignore"):  # a huge ratio just means "never crosses"
            r = q / p
        if p < 0.0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return False
    return True


def segment_rect_distance(a, b, rect: ObstacleRect) -> float:
    """Exact distance between segment ``ab`` and a rectangle (0 if they touch)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if _segment_hits_rect(a, b, rect):
        return 0.0
    best = min(point_rect_distance(a, rect), point_rect_distance(b, rect))
    for c in rect.corners():
        best = min(best, _point_segment_distance(c, a, b))
    return best
