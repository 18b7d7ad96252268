"""Episode execution, trajectory metrics and CSV export."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import NoPath, apf_plan, follow_path, voronoi_plan
from .dynamics import integrate
from .geometry import Pose2D, Twist
from .planner import ControllerState, control_step, min_barrier
from .trajectory import EpisodeStop, RolloutConfig, Sample, Termination, Trajectory, rollout

__all__ = [
    "PLANNERS",
    "Metrics",
    "compute_metrics",
    "integrate",
    "read_csv",
    "run_episode",
    "trajectory_csv",
    "write_csv",
]

PLANNERS = ("clf-cbf", "apf", "voronoi")
CSV_HEADER = ("t", "x", "y", "theta", "v", "omega", "min_h")


@dataclass(frozen=True)
class Metrics:
    path_length: float  # m
    min_barrier: float
    max_domega: float  # rad/s per step
    steps: int
    wall_time: float  # s, planner calls only
    success: bool
    omega_sign_changes: int
    termination: Termination


def compute_metrics(trajectory: Trajectory, scenario) -> Metrics:
    P = np.array([s.pose.position for s in trajectory.samples])
    length = float(np.sum(np.hypot(*np.diff(P, axis=0).T))) if len(P) > 1 else 0.0
    # the final sample holds a zero twist that is never applied
    applied = trajectory.samples[:-1]
    w = np.array([s.twist.omega for s in applied])
    dw = float(np.max(np.abs(np.diff(w)))) if len(w) > 1 else 0.0
    signs = np.sign(w[np.abs(w) > 1e-6])
    flips = int(np.count_nonzero(signs[1:] != signs[:-1])) if len(signs) > 1 else 0
    final = trajectory.final_pose
    tgt = scenario.target
    reached = trajectory.termination is Termination.REACHED and (
        math.hypot(final.x - tgt.x, final.y - tgt.y) < scenario.sim.capture_radius
    )
    return Metrics(
        path_length=length,
        min_barrier=min(s.min_h for s in trajectory.samples),
        max_domega=dw,
        steps=trajectory.steps,
        wall_time=trajectory.planning_time,
        success=reached,
        omega_sign_changes=flips,
        termination=trajectory.termination,
    )


def _rollout_config(scenario, dt, max_steps) -> RolloutConfig:
    sim = scenario.sim
    return RolloutConfig(
        dt=sim.dt if dt is None else dt,
        max_steps=sim.max_steps if max_steps is None else max_steps,
        capture_radius=sim.capture_radius,
        disks=scenario.disks,
        safe_radius=scenario.safe_radius,
        lookahead=scenario.controller.cbf.lookahead,
    )


def clf_cbf_plan(scenario, dt: float | None = None, max_steps: int | None = None) -> Trajectory:
    params = scenario.controller
    if not scenario.target_has_heading:
        params = dataclasses.replace(params, heading_radius=0.0)
    cfg = _rollout_config(scenario, dt, max_steps)
    disks = scenario.disks
    target = scenario.target
    cstate = ControllerState()

    def policy(state: Pose2D) -> Twist:
        twist = control_step(state, target, disks, cstate, params, cfg.dt)
        if cstate.infeasible:
            status = cstate.last_solution.status.value if cstate.last_solution else "?"
            raise EpisodeStop(Termination.QP_INFEASIBLE, f"QP status {status}", twist)
        return twist

    return rollout(scenario.start, (target.x, target.y), policy, cfg)


def run_episode(scenario, planner: str = "clf-cbf", dt: float | None = None, max_steps: int | None = None):
    """Run one planner on the scenario's selected target; returns (Trajectory, Metrics)."""
    if planner == "clf-cbf":
        traj = clf_cbf_plan(scenario, dt, max_steps)
    elif planner == "apf":
        traj = apf_plan(scenario, dt=dt, max_steps=max_steps)
    elif planner == "voronoi":
        traj = _voronoi_episode(scenario, dt, max_steps)
    else:
        raise ValueError(f"unknown planner {planner!r}; choose from {', '.join(PLANNERS)}")
    return traj, compute_metrics(traj, scenario)


def _voronoi_episode(scenario, dt, max_steps) -> Trajectory:
    import time

    t0 = time.perf_counter()
    try:
        path = voronoi_plan(scenario)
    except NoPath as exc:
        s = scenario.start
        h = min_barrier(s, scenario.disks, scenario.safe_radius, scenario.controller.cbf.lookahead)
        return Trajectory([Sample(0.0, s, Twist(0.0, 0.0), h)], Termination.NO_PATH, time.perf_counter() - t0, str(exc))
    plan_time = time.perf_counter() - t0
    traj = follow_path(path, scenario, dt=dt, max_steps=max_steps)
    # global planning is the comparable cost; tracking is a cheap geometric loop
    traj.planning_time = plan_time
    return traj


# --- CSV -----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return "%.9g" % x


def trajectory_csv(trajectory: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in trajectory.samples:
        p, u = s.pose, s.twist
        w.writerow([_fmt(v) for v in (s.t, p.x, p.y, p.theta, u.v, u.omega, s.min_h)])
    return buf.getvalue()


def write_csv(trajectory: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(trajectory_csv(trajectory))
    return path


def read_csv(path_or_text, termination: Termination = Termination.REACHED) -> Trajectory:
    text = path_or_text if "\n" in str(path_or_text) else Path(path_or_text).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"expected CSV header {','.join(CSV_HEADER)}")
    samples = []
    for r in rows[1:]:
        t, x, y, th, v, w, h = (float(c) for c in r)
        samples.append(Sample(t, Pose2D(x, y, th), Twist(v, w), h))
    return Trajectory(samples, termination)
