import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from srpnav.geometry import (
    Disk,
    InvalidObstacle,
    ObstacleRect,
    Pose2D,
    Room,
    enclosing_disk,
    point_rect_distance,
    point_rect_distance_grad,
    pose_error,
    segment_rect_distance,
    wall_disk,
    wrap_angle,
)

from oracles import central_difference, dense_clearance

coord = st.floats(-10, 10, allow_nan=False)
side = st.one_of(st.just(0.0), st.floats(1e-6, 5))
angle = st.floats(-20, 20, allow_nan=False)


class TestEnclosingDisk:
    def test_unit_square(self):
        assert enclosing_disk(ObstacleRect((0, 0), 1, 1)).radius == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_three_four_five(self):
        d = enclosing_disk(ObstacleRect((1.5, -2.0), 3, 4))
        assert d.radius == pytest.approx(2.5, abs=1e-12)
        assert d.center == (1.5, -2.0)

    def test_degenerate_segment(self):
        assert enclosing_disk(ObstacleRect((0, 0), 2, 0)).radius == pytest.approx(1.0)

    def test_point_obstacle_rejected(self):
        with pytest.raises(InvalidObstacle):
            ObstacleRect((0, 0), 0, 0)

    def test_negative_size_rejected(self):
        with pytest.raises(InvalidObstacle):
            ObstacleRect((0, 0), -1, 1)

    @given(st.tuples(coord, coord), side, side)
    def test_corners_on_circle(self, c, l, w):
        if l == 0 and w == 0:
            return
        rect = ObstacleRect(c, l, w)
        d = enclosing_disk(rect)
        for corner in rect.corners():
            assert math.dist(corner, d.center) == pytest.approx(d.radius, abs=1e-12)

    @given(side, side)
    def test_radius_at_least_half_longest_side(self, l, w):
        if l == 0 and w == 0:
            return
        r = enclosing_disk(ObstacleRect((0, 0), l, w)).radius
        assert r >= max(l, w) / 2 - 1e-15
        if min(l, w) == 0:
            assert r == pytest.approx(max(l, w) / 2, abs=1e-15)
        elif min(l, w) > 1e-6 * max(l, w):
            assert r > max(l, w) / 2

    def test_disk_needs_positive_radius(self):
        with pytest.raises(ValueError):
            Disk((0, 0), 0.0)


class TestPoseError:
    def test_identity(self):
        e = pose_error(Pose2D(1, 2, 0.3), Pose2D(1, 2, 0.3))
        assert e.as_array().tolist() == [0, 0, 0]

    def test_start_to_third_target(self):
        e = pose_error(Pose2D(-4, -4, 0), Pose2D(0, 1.5, 0))
        assert (e.e_x, e.e_y, e.e_theta) == (-4.0, -5.5, 0.0)

    def test_angle_wraps(self):
        assert pose_error(Pose2D(0, 0, 3.0), Pose2D(0, 0, -3.0)).e_theta == pytest.approx(6.0 - 2 * math.pi, abs=1e-12)

    @given(coord, coord, angle, coord, coord, angle)
    def test_antisymmetric_position(self, x1, y1, t1, x2, y2, t2):
        a, b = Pose2D(x1, y1, t1), Pose2D(x2, y2, t2)
        assert pose_error(a, b).e_x == -pose_error(b, a).e_x
        assert pose_error(a, b).e_y == -pose_error(b, a).e_y
        assert -math.pi < pose_error(a, b).e_theta <= math.pi


class TestAngles:
    @given(angle)
    def test_wrap_range(self, a):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)

    def test_pi_maps_to_pi(self):
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi

    def test_pose_wraps_on_construction(self):
        assert Pose2D(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Pose2D(math.nan, 0, 0)


class TestWalls:
    def test_wall_disk_is_tangent_to_inner_face(self):
        room = Room(-5, 5, -5, 5)
        top = ObstacleRect((0, 5.05), 10.2, 0.1, True)
        d = wall_disk(top, room)
        assert d.center[1] - d.radius == pytest.approx(5.0)
        left = ObstacleRect((-5.05, 0), 0.1, 10.2, True)
        d = wall_disk(left, room)
        assert d.center[0] + d.radius == pytest.approx(-5.0)


class TestDistances:
    rect = ObstacleRect((1.0, 2.0), 2.0, 1.0)

    def test_point_distance_cases(self):
        assert point_rect_distance((1.0, 2.0), self.rect) == 0.0
        assert point_rect_distance((4.0, 2.0), self.rect) == pytest.approx(2.0)
        assert point_rect_distance((5.0, 6.5), self.rect) == pytest.approx(5.0)

    @given(coord, coord)
    def test_gradient_matches_finite_difference(self, x, y):
        p = np.array([x, y])
        d, g = point_rect_distance_grad(p, self.rect)
        x0, x1, y0, y1 = self.rect.bounds
        # the distance has kinks along the extended edges
        if d < 1e-3 or min(abs(x - x0), abs(x - x1), abs(y - y0), abs(y - y1)) < 1e-4:
            return
        fd = central_difference(lambda q: point_rect_distance(q, self.rect), p, 1e-6)
        np.testing.assert_allclose(g, fd[0], atol=1e-6)

    def test_segment_crossing_is_zero(self):
        assert segment_rect_distance((-5, 2), (5, 2), self.rect) == 0.0

    @given(st.tuples(coord, coord), st.tuples(coord, coord))
    def test_segment_distance_matches_dense_sampling(self, a, b):
        exact = segment_rect_distance(a, b, self.rect)
        approx = dense_clearance([a, b], [self.rect], step=0.01)
        # sampling can only overestimate, by at most about one step
        assert exact <= approx + 1e-9
        assert approx - exact <= 0.015
