import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srpnav.geometry import Pose2D, Twist
from srpnav.planner import min_barrier
from srpnav.scenario import default_scenario
from srpnav.sim import compute_metrics, integrate, read_csv, run_episode, trajectory_csv, write_csv
from srpnav.trajectory import Sample, Termination, Trajectory

from oracles import arc_pose


def make_traj(poses, omegas=None):
    omegas = omegas if omegas is not None else [0.0] * len(poses)
    samples = [Sample(0.05 * k, p, Twist(0.5, w), 1.0) for k, (p, w) in enumerate(zip(poses, omegas))]
    return Trajectory(samples, Termination.REACHED)


class TestIntegrate:
    def test_straight_line(self):
        s = integrate(Pose2D(0, 0, 0), Twist(1, 0), 0.1)
        assert (s.x, s.y, s.theta) == (pytest.approx(0.1), 0.0, 0.0)

    def test_zero_twist(self):
        s0 = Pose2D(1.5, -2.0, 0.3)
        assert integrate(s0, Twist(0, 0), 0.1) == s0

    def test_full_circle(self):
        n = 1000
        s = Pose2D(0, 0, 0)
        for _ in range(n):
            s = integrate(s, Twist(1, 1), 2 * math.pi / n)
        assert math.hypot(s.x, s.y) < 1e-6
        assert abs(s.theta) < 1e-9

    def test_nonpositive_dt(self):
        with pytest.raises(ValueError):
            integrate(Pose2D(0, 0, 0), Twist(1, 0), 0.0)

    def test_fourth_order(self):
        errors = []
        for dt in (0.2, 0.1, 0.05):
            s = Pose2D(0, 0, 0.3)
            for _ in range(round(2.0 / dt)):
                s = integrate(s, Twist(1.0, 1.3), dt)
            ref = arc_pose(0, 0, 0.3, 1.0, 1.3, 2.0)
            errors.append(math.hypot(s.x - ref[0], s.y - ref[1]))
        assert errors[0] / errors[1] >= 8
        assert errors[1] / errors[2] >= 8

    @settings(max_examples=50)
    @given(st.floats(0, 1), st.floats(-2, 2), st.floats(-3, 3), st.floats(0.001, 0.1))
    def test_matches_closed_form_arc(self, v, w, th, dt):
        if abs(w) < 1e-3:
            return
        s = integrate(Pose2D(0, 0, th), Twist(v, w), dt)
        ref = arc_pose(0, 0, th, v, w, dt)
        # one RK4 step on a circular arc errs by about v dt (w dt)^4 / 2880;
        # the closed form itself cancels to roughly eps * v / w
        bound = 1e-3 * v * dt * (w * dt) ** 4 + 1e-14 * (1 + v / abs(w))
        assert math.hypot(s.x - ref[0], s.y - ref[1]) <= bound


class TestMetrics:
    sc = default_scenario()

    def test_straight_segment_length(self):
        m = compute_metrics(make_traj([Pose2D(0, 0), Pose2D(1, 0)]), self.sc)
        assert m.path_length == pytest.approx(1.0)

    def test_constant_omega(self):
        poses = [Pose2D(0.1 * k, 0) for k in range(6)]
        m = compute_metrics(make_traj(poses, [0.7] * 6), self.sc)
        assert m.max_domega == 0.0

    def test_square_wave_omega(self):
        poses = [Pose2D(0.1 * k, 0) for k in range(7)]
        m = compute_metrics(make_traj(poses, [1, -1, 1, -1, 1, -1, 0]), self.sc)
        assert m.max_domega == pytest.approx(2.0)
        assert m.omega_sign_changes == 5

    def test_success_requires_capture(self):
        m = compute_metrics(make_traj([Pose2D(0, 0), Pose2D(1, 0)]), self.sc)
        assert not m.success


class TestEpisodes:
    def test_third_target_reached_safely(self):
        traj, m = run_episode(default_scenario().with_target(2))
        assert m.termination is Termination.REACHED
        assert m.success
        assert m.min_barrier > 0

    def test_one_step_times_out(self):
        traj, m = run_episode(default_scenario(), max_steps=1)
        assert m.termination is Termination.TIMED_OUT
        assert m.steps == 1

    @pytest.mark.parametrize("planner", ["clf-cbf", "apf"])
    def test_start_at_target(self, planner):
        sc = default_scenario()
        sc = dataclasses.replace(sc, start=Pose2D(sc.target.x + 0.05, sc.target.y, 0.0))
        traj, m = run_episode(sc, planner)
        assert m.termination is Termination.REACHED
        assert m.steps == 0
        assert m.path_length == 0.0

    def test_unknown_planner(self):
        with pytest.raises(ValueError):
            run_episode(default_scenario(), "rrt")

    def test_fixed_time_step(self):
        traj, _ = run_episode(default_scenario(), max_steps=50)
        t = np.array([s.t for s in traj.samples])
        np.testing.assert_allclose(np.diff(t), 0.05, atol=1e-12)

    def test_recorded_barrier_is_fresh(self):
        sc = default_scenario()
        traj, _ = run_episode(sc.with_target(1))
        d = sc.controller.cbf.lookahead
        for s in traj.samples:
            assert s.min_h == min_barrier(s.pose, sc.disks, sc.safe_radius, d)

    @pytest.mark.parametrize("planner", ["clf-cbf", "apf", "voronoi"])
    def test_deterministic(self, planner):
        sc = default_scenario().with_target(0)
        a, _ = run_episode(sc, planner)
        b, _ = run_episode(sc, planner)
        assert trajectory_csv(a) == trajectory_csv(b)
        assert [(s.pose, s.twist) for s in a.samples] == [(s.pose, s.twist) for s in b.samples]


class TestCsv:
    def test_round_trip(self, tmp_path):
        traj, _ = run_episode(default_scenario(), max_steps=80)
        path = write_csv(traj, tmp_path / "t.csv")
        back = read_csv(path)
        assert trajectory_csv(back) == path.read_text()
        for a, b in zip(traj.samples, back.samples):
            np.testing.assert_allclose(
                [b.t, b.pose.x, b.pose.y, b.pose.theta, b.twist.v, b.twist.omega, b.min_h],
                [a.t, a.pose.x, a.pose.y, a.pose.theta, a.twist.v, a.twist.omega, a.min_h],
                rtol=1e-8, atol=1e-12,
            )

    def test_header(self):
        text = trajectory_csv(make_traj([Pose2D(0, 0)]))
        assert text.splitlines()[0] == "t,x,y,theta,v,omega,min_h"

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(p)
