"""Trajectory records and the closed-loop rollout shared by every planner."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dynamics import integrate
from .geometry import Disk, Pose2D, Twist
from .planner import min_barrier


class Termination(enum.Enum):
    REACHED = "Reached"
    TIMED_OUT = "TimedOut"
    QP_INFEASIBLE = "QPInfeasible"
    LOCAL_MINIMUM = "LocalMinimum"
    DIVERGED = "Diverged"
    COLLISION = "Collision"
    NO_PATH = "NoPath"


class EpisodeStop(Exception):
    """Raised by a policy to end the rollout with a given status.

    ``twist`` is recorded on the final sample (e.g. the zero fallback when
    the QP is infeasible).
    """

    def __init__(self, termination: Termination, message: str = "", twist: Twist | None = None):
        super().__init__(message or termination.value)
        self.termination = termination
        self.message = message
        self.twist = twist if twist is not None else Twist(0.0, 0.0)


@dataclass(frozen=True)
class Sample:
    t: float
    pose: Pose2D
    twist: Twist  # command applied from this sample to the next; zero on the last one
    min_h: float


@dataclass
class Trajectory:
    samples: list[Sample]
    termination: Termination
    planning_time: float = 0.0  # s, summed over planner calls only
    message: str = ""
    path: object = None  # reference polyline for path-following planners

    def __post_init__(self):
        if not self.samples:
            raise ValueError("trajectory must hold at least one sample")

    @property
    def final_pose(self) -> Pose2D:
        return self.samples[-1].pose

    @property
    def steps(self) -> int:
        return len(self.samples) - 1


@dataclass(frozen=True)
class RolloutConfig:
    dt: float
    max_steps: int
    capture_radius: float
    disks: Sequence[Disk] = field(default_factory=tuple)
    safe_radius: float = 0.0
    lookahead: float = 0.0


Policy = Callable[[Pose2D], Twist]


def rollout(start: Pose2D, goal_xy, policy: Policy, cfg: RolloutConfig) -> Trajectory:
    """Run plan -> integrate -> record until capture, a policy stop or ``max_steps``.

    Only time spent inside ``policy`` counts as planning time.
    """
    if not cfg.dt > 0:
        raise ValueError("dt must be positive")
    gx, gy = float(goal_xy[0]), float(goal_xy[1])
    samples: list[Sample] = []
    state = start
    planning = 0.0
    zero = Twist(0.0, 0.0)

    def h_of(pose):
        return min_barrier(pose, cfg.disks, cfg.safe_radius, cfg.lookahead)

    for k in range(cfg.max_steps + 1):
        t = k * cfg.dt
        h = h_of(state)
        if math.hypot(state.x - gx, state.y - gy) < cfg.capture_radius:
            samples.append(Sample(t, state, zero, h))
            return Trajectory(samples, Termination.REACHED, planning)
        if k == cfg.max_steps:
            samples.append(Sample(t, state, zero, h))
            return Trajectory(samples, Termination.TIMED_OUT, planning)
        t0 = time.perf_counter()
        try:
            twist = policy(state)
        except EpisodeStop as stop:
            planning += time.perf_counter() - t0
            samples.append(Sample(t, state, stop.twist, h))
            return Trajectory(samples, stop.termination, planning, stop.message)
        planning += time.perf_counter() - t0
        samples.append(Sample(t, state, twist, h))
        state = integrate(state, twist, cfg.dt)
    raise AssertionError("unreachable")
