"""Scenario description and its YAML configuration format.

Sections: ``room``, ``obstacles``, ``start``, ``targets``, ``controller``,
``apf``, ``voronoi``, ``sim``. Every key is optional except the ones that
describe the scene itself (room bounds, start, at least one target); absent
parameters take the dataclass defaults.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .baselines import ApfParams, VoronoiParams
from .geometry import Disk, InvalidObstacle, ObstacleRect, Pose2D, Room, barrier_disk
from .planner import CbfParams, ClfParams, ControllerParams, clf_matrix


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.05  # s
    capture_radius: float = 0.1  # m
    max_steps: int = 4000
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0 or not self.capture_radius > 0:
            raise ValueError("dt and capture radius must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")


@dataclass(frozen=True)
class Target:
    pose: Pose2D
    has_heading: bool = False  # False: only the position matters, heading follows the bearing


@dataclass(frozen=True)
class Scenario:
    room: Room
    obstacles: tuple[ObstacleRect, ...]  # walls included, flagged with is_wall
    start: Pose2D
    targets: tuple[Target, ...]
    target_index: int = 0
    controller: ControllerParams = field(default_factory=ControllerParams)
    apf: ApfParams = field(default_factory=ApfParams)
    voronoi: VoronoiParams = field(default_factory=VoronoiParams)
    sim: SimParams = field(default_factory=SimParams)

    def __post_init__(self):
        if not self.targets:
            raise ValidationError("scenario needs at least one target")
        if not 0 <= self.target_index < len(self.targets):
            raise ValidationError(f"target index {self.target_index} out of range")
        object.__setattr__(self, "_disks", tuple(barrier_disk(r, self.room) for r in self.obstacles))
        self._validate()

    @property
    def disks(self) -> tuple[Disk, ...]:
        """Barrier disks: the enclosing disk of each obstacle, a large tangent disk per wall."""
        return self._disks

    @property
    def safe_radius(self) -> float:
        return self.controller.safe_radius

    @property
    def target(self) -> Pose2D:
        return self.targets[self.target_index].pose

    @property
    def target_has_heading(self) -> bool:
        return self.targets[self.target_index].has_heading

    @property
    def interior_obstacles(self) -> tuple[ObstacleRect, ...]:
        return tuple(r for r in self.obstacles if not r.is_wall)

    def with_target(self, target) -> "Scenario":
        """Select target ``i`` (0-based int) or replace the target list with one (x, y[, theta])."""
        if isinstance(target, (int, np.integer)):
            return dataclasses.replace(self, target_index=int(target))
        vals = [float(v) for v in target]
        tgt = Target(Pose2D(*vals[:2], vals[2] if len(vals) > 2 else 0.0), len(vals) > 2)
        return dataclasses.replace(self, targets=(tgt,), target_index=0)

    def _validate(self):
        r_s = self.safe_radius
        points = [("start", self.start)] + [(f"target {i + 1}", t.pose) for i, t in enumerate(self.targets)]
        for name, pose in points:
            if not self.room.contains(pose.position):
                raise ValidationError(f"{name} {tuple(pose.position)} lies outside the room")
            for rect, disk in zip(self.obstacles, self.disks):
                gap = math.dist(pose.position, disk.center) - (disk.radius + r_s)
                if gap <= 0:
                    raise ValidationError(f"{name} {tuple(pose.position)} lies inside the inflated disk of {rect}")


def room_walls(room: Room, thickness: float) -> list[ObstacleRect]:
    """Four rectangles hugging the room from outside (inner faces on the room boundary)."""
    w = room.xmax - room.xmin
    h = room.ymax - room.ymin
    cx, cy = room.center
    t = thickness
    return [
        ObstacleRect((cx, room.ymax + t / 2), w + 2 * t, t, True),
        ObstacleRect((cx, room.ymin - t / 2), w + 2 * t, t, True),
        ObstacleRect((room.xmax + t / 2, cy), t, h + 2 * t, True),
        ObstacleRect((room.xmin - t / 2, cy), t, h + 2 * t, True),
    ]


# --- parsing -------------------------------------------------------------------

_SECTIONS = {"room", "obstacles", "start", "targets", "controller", "apf", "voronoi", "sim"}
_CONTROLLER_KEYS = {"P", "rate", "gamma", "lookahead", "H", "Q", "p", "u_min", "u_max", "safe_radius", "heading_radius"}


def _mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ParseError(f"{where}: expected a mapping")
    return value


def _check_keys(d: dict, allowed, where: str):
    extra = set(d) - set(allowed)
    if extra:
        raise ParseError(f"{where}: unknown keys {sorted(extra)}")


def _numbers(value, n: int | tuple[int, ...], where: str) -> list[float]:
    sizes = (n,) if isinstance(n, int) else n
    if not isinstance(value, (list, tuple)) or len(value) not in sizes:
        raise ParseError(f"{where}: expected a list of {' or '.join(map(str, sizes))} numbers")
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from None
    if not all(math.isfinite(v) for v in out):
        raise ParseError(f"{where}: non-finite value")
    return out


def _matrix(value, where: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return float(value) * np.eye(2)
    rows = value if isinstance(value, list) else None
    if rows is None or len(rows) != 2:
        raise ParseError(f"{where}: expected a scalar (times identity) or a 2x2 list")
    return np.array([_numbers(r, 2, where) for r in rows])


def _params(cls, d: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    _check_keys(d, names, where)
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _controller(d: dict) -> ControllerParams:
    _check_keys(d, _CONTROLLER_KEYS, "controller")
    clf_kw, cbf_kw, kw = {}, {}, {}
    if "P" in d:
        P = _mapping(d["P"], "controller.P")
        _check_keys(P, {"p1", "p2", "p3", "p4", "p5"}, "controller.P")
        base = dict(p1=1.0, p2=0.0, p3=1.0, p4=0.0, p5=1.0)
        base.update({k: float(v) for k, v in P.items()})
        clf_kw["P"] = clf_matrix(**base)
    if "rate" in d:
        clf_kw["rate"] = float(d["rate"])
    for key in ("gamma", "lookahead"):
        if key in d:
            cbf_kw[key] = float(d[key])
    for key in ("H", "Q"):
        if key in d:
            kw[key] = _matrix(d[key], f"controller.{key}")
    for key in ("u_min", "u_max"):
        if key in d:
            kw[key] = tuple(_numbers(d[key], 2, f"controller.{key}"))
    for key in ("p", "safe_radius", "heading_radius"):
        if key in d:
            kw[key] = float(d[key])
    try:
        return ControllerParams(clf=ClfParams(**clf_kw), cbf=CbfParams(**cbf_kw), **kw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"controller: {exc}") from None


def parse_scenario(data) -> Scenario:
    if data is None:
        raise ParseError("empty scenario")
    if not isinstance(data, dict):
        raise ParseError("scenario must be a mapping of sections")
    _check_keys(data, _SECTIONS, "scenario")
    for required in ("room", "start", "targets"):
        if required not in data:
            raise ParseError(f"missing section '{required}'")

    room_d = _mapping(data["room"], "room")
    _check_keys(room_d, {"x", "y", "wall_thickness"}, "room")
    try:
        xs = _numbers(room_d["x"], 2, "room.x")
        ys = _numbers(room_d["y"], 2, "room.y")
    except KeyError as exc:
        raise ParseError(f"room: missing {exc}") from None
    try:
        room = Room(xs[0], xs[1], ys[0], ys[1])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    thickness = float(room_d.get("wall_thickness", 0.1))

    raw_obs = data.get("obstacles") or []
    if not isinstance(raw_obs, list):
        raise ParseError("obstacles: expected a list")
    rects = []
    for i, ob in enumerate(raw_obs):
        ob = _mapping(ob, f"obstacles[{i}]")
        _check_keys(ob, {"center", "size"}, f"obstacles[{i}]")
        if "center" not in ob or "size" not in ob:
            raise ParseError(f"obstacles[{i}]: needs center and size")
        c = _numbers(ob["center"], 2, f"obstacles[{i}].center")
        size = ob["size"]
        lw = [float(size)] * 2 if isinstance(size, (int, float)) else _numbers(size, 2, f"obstacles[{i}].size")
        try:
            rects.append(ObstacleRect(tuple(c), lw[0], lw[1]))
        except (InvalidObstacle, ValueError) as exc:
            raise ValidationError(f"obstacles[{i}]: {exc}") from None
    if thickness > 0:
        rects.extend(room_walls(room, thickness))

    start_v = _numbers(data["start"], (2, 3), "start")
    start = Pose2D(*start_v[:2], start_v[2] if len(start_v) == 3 else 0.0)

    raw_t = data["targets"]
    if not isinstance(raw_t, list) or not raw_t:
        raise ParseError("targets: expected a non-empty list")
    targets = []
    for i, t in enumerate(raw_t):
        v = _numbers(t, (2, 3), f"targets[{i}]")
        targets.append(Target(Pose2D(v[0], v[1], v[2] if len(v) == 3 else 0.0), len(v) == 3))

    controller = _controller(_mapping(data.get("controller"), "controller"))
    apf = _params(ApfParams, _mapping(data.get("apf"), "apf"), "apf")
    voronoi = _params(VoronoiParams, _mapping(data.get("voronoi"), "voronoi"), "voronoi")
    sim = _params(SimParams, _mapping(data.get("sim"), "sim"), "sim")
    try:
        return Scenario(room, tuple(rects), start, tuple(targets), 0, controller, apf, voronoi, sim)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def load_scenario(path=None) -> Scenario:
    """Read a scenario file; ``None`` loads the bundled default room."""
    if path is None:
        text = resources.files("srpnav").joinpath("data/default_room.yaml").read_text()
    else:
        text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed scenario: {exc}") from None
    return parse_scenario(data)


def default_scenario() -> Scenario:
    return load_scenario(None)
