"""Scene description for the desk-scale corridor simulator.

A scene is a 2.5-D world: axis-aligned wall segments and box/cylinder
obstacles extruded vertically, an optional constant-speed pedestrian proxy
following a waypoint path, a navigation graph whose edges are corridor
centerlines, and evaluation routes expressed as direction-command sequences
consumed at junctions.  Everything is an immutable value object; scenes are
hashable so derived geometry can be cached.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

SCENE_FORMAT = "depthnav-scene"
SCENE_VERSION = 1

#: Kinematic limits of the robot platform.
V_MAX = 0.6  # m/s
W_MAX = 1.0  # rad/s
ROBOT_RADIUS = 0.2  # m


class DirectionCommand(Enum):
    """Global guidance at intersections; encoded one-hot for the network."""

    MOVE_FORWARD = "forward"
    TURN_LEFT = "left"
    TURN_RIGHT = "right"
    STOP = "stop"

    def one_hot(self) -> np.ndarray:
        vec = np.zeros(4, dtype=np.float32)
        vec[_COMMAND_ORDER.index(self)] = 1.0
        return vec

    @classmethod
    def parse(cls, name: str) -> "DirectionCommand":
        key = name.strip().lower()
        for cmd in cls:
            if cmd.value == key:
                return cmd
        raise ValueError(f"unknown direction command {name!r}")


_COMMAND_ORDER = (
    DirectionCommand.MOVE_FORWARD,
    DirectionCommand.TURN_LEFT,
    DirectionCommand.TURN_RIGHT,
    DirectionCommand.STOP,
)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class RobotState:
    """Planar pose plus commanded body velocities."""

    x: float
    y: float
    heading: float
    v: float = 0.0
    w: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.v) > V_MAX + 1e-9:
            raise ValueError(f"|v|={abs(self.v)} exceeds v_max={V_MAX}")
        if abs(self.w) > W_MAX + 1e-9:
            raise ValueError(f"|w|={abs(self.w)} exceeds w_max={W_MAX}")

    @property
    def pose(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.heading)

    def step(self, v: float, w: float, dt: float) -> "RobotState":
        """Kinematic unicycle update with clamped commands."""
        v = float(np.clip(v, 0.0, V_MAX))
        w = float(np.clip(w, -W_MAX, W_MAX))
        return RobotState(
            x=self.x + v * math.cos(self.heading) * dt,
            y=self.y + v * math.sin(self.heading) * dt,
            heading=wrap_angle(self.heading + w * dt),
            v=v,
            w=w,
        )


@dataclass(frozen=True)
class Wall:
    """Vertical wall panel over a 2-D segment, z in [0, height]."""

    x0: float
    y0: float
    x1: float
    y1: float
    height: float = 2.5


@dataclass(frozen=True)
class BoxObstacle:
    class_name: str
    cx: float
    cy: float
    sx: float  # full footprint size along x
    sy: float
    height: float = 1.0

    def corners(self) -> Tuple[Tuple[float, float], ...]:
        hx, hy = self.sx / 2.0, self.sy / 2.0
        return (
            (self.cx - hx, self.cy - hy),
            (self.cx + hx, self.cy - hy),
            (self.cx + hx, self.cy + hy),
            (self.cx - hx, self.cy + hy),
        )

    def surface_distance(self, x: float, y: float) -> float:
        """Signed distance from a point to the footprint (negative inside)."""
        dx = abs(x - self.cx) - self.sx / 2.0
        dy = abs(y - self.cy) - self.sy / 2.0
        outside = math.hypot(max(dx, 0.0), max(dy, 0.0))
        inside = min(max(dx, dy), 0.0)
        return outside + inside


@dataclass(frozen=True)
class CylinderObstacle:
    class_name: str
    cx: float
    cy: float
    radius: float
    height: float = 1.2

    def surface_distance(self, x: float, y: float) -> float:
        return math.hypot(x - self.cx, y - self.cy) - self.radius


Obstacle = "BoxObstacle | CylinderObstacle"


@dataclass(frozen=True)
class PedestrianPath:
    """Constant-speed waypoint follower, ping-ponging along its polyline."""

    waypoints: Tuple[Tuple[float, float], ...]
    speed: float = 0.5
    radius: float = 0.3
    height: float = 1.7
    class_name: str = "person"

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError("pedestrian path needs at least two waypoints")
        if self.speed <= 0:
            raise ValueError("pedestrian speed must be positive")

    def _cumulative(self) -> Tuple[float, ...]:
        acc = [0.0]
        for (x0, y0), (x1, y1) in zip(self.waypoints, self.waypoints[1:]):
            acc.append(acc[-1] + math.hypot(x1 - x0, y1 - y0))
        return tuple(acc)

    def position(self, t: float) -> Tuple[float, float]:
        cum = self._cumulative()
        total = cum[-1]
        if total <= 0.0:
            return self.waypoints[0]
        s = math.fmod(self.speed * max(t, 0.0), 2.0 * total)
        if s > total:  # ping-pong back
            s = 2.0 * total - s
        for i in range(len(cum) - 1):
            if s <= cum[i + 1] or i == len(cum) - 2:
                seg = cum[i + 1] - cum[i]
                u = 0.0 if seg <= 0 else (s - cum[i]) / seg
                (x0, y0), (x1, y1) = self.waypoints[i], self.waypoints[i + 1]
                return (x0 + u * (x1 - x0), y0 + u * (y1 - y0))
        return self.waypoints[-1]


@dataclass(frozen=True)
class Route:
    """Junction command sequence for evaluation; pedestrian marks routes that
    pass the pedestrian crossing."""

    name: str
    commands: Tuple[DirectionCommand, ...]
    pedestrian: bool = False


@dataclass(frozen=True)
class Scene:
    name: str
    walls: Tuple[Wall, ...]
    obstacles: Tuple["BoxObstacle | CylinderObstacle", ...]
    nav_nodes: Tuple[Tuple[float, float], ...]
    nav_edges: Tuple[Tuple[int, int], ...]
    start: Tuple[float, float, float]
    corridor_width: float = 2.2
    ceiling_height: float = 2.5
    intersection_radius: float = 1.8
    pedestrian: Optional[PedestrianPath] = None
    routes: Tuple[Route, ...] = ()

    def __post_init__(self) -> None:
        for a, b in self.nav_edges:
            if not (0 <= a < len(self.nav_nodes) and 0 <= b < len(self.nav_nodes)):
                raise ValueError(f"nav edge ({a}, {b}) references missing node")

    # -- navigation graph helpers ------------------------------------------

    def node_degree(self, i: int) -> int:
        return sum(1 for a, b in self.nav_edges if a == i or b == i)

    def junction_nodes(self) -> Tuple[int, ...]:
        return tuple(i for i in range(len(self.nav_nodes)) if self.node_degree(i) >= 3)

    def zone_nodes(self) -> Tuple[int, ...]:
        """Nodes where a direction command is consumed: junctions (degree >= 3)
        and dead ends (degree 1, where only Stop makes sense)."""
        return tuple(i for i in range(len(self.nav_nodes)) if self.node_degree(i) != 2)

    def node_neighbors(self, i: int) -> Tuple[int, ...]:
        out = []
        for a, b in self.nav_edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return tuple(out)

    def pedestrian_position(self, t: float) -> Optional[Tuple[float, float]]:
        if self.pedestrian is None:
            return None
        return self.pedestrian.position(t)

    def pedestrian_path_clearance(self, x: float, y: float) -> float:
        """Distance from a point to the pedestrian's sweep (path polyline
        minus body radius); inf when the scene has no pedestrian."""
        if self.pedestrian is None:
            return math.inf
        wps = self.pedestrian.waypoints
        d = min(
            _seg_distance(x, y, x0, y0, x1, y1)
            for (x0, y0), (x1, y1) in zip(wps, wps[1:])
        )
        return d - self.pedestrian.radius

    def bounds(self) -> Tuple[float, float, float, float]:
        xs = [w.x0 for w in self.walls] + [w.x1 for w in self.walls]
        ys = [w.y0 for w in self.walls] + [w.y1 for w in self.walls]
        return (min(xs), min(ys), max(xs), max(ys))

    # -- clearance / collision ---------------------------------------------

    def wall_clearance(self, x: float, y: float) -> float:
        return min(
            (_seg_distance(x, y, w.x0, w.y0, w.x1, w.y1) for w in self.walls),
            default=math.inf,
        )

    def obstacle_clearance(self, x: float, y: float, t: float = 0.0) -> float:
        dists = [ob.surface_distance(x, y) for ob in self.obstacles]
        ped = self.pedestrian_position(t)
        if ped is not None:
            dists.append(math.hypot(x - ped[0], y - ped[1]) - self.pedestrian.radius)
        return min(dists, default=math.inf)

    def clearance(self, x: float, y: float, t: float = 0.0) -> float:
        """Distance from a point to the nearest solid surface."""
        return min(self.wall_clearance(x, y), self.obstacle_clearance(x, y, t))

    def collides(self, x: float, y: float, t: float = 0.0, radius: float = ROBOT_RADIUS) -> bool:
        return self.clearance(x, y, t) < radius

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        def _obstacle(ob) -> dict:
            if isinstance(ob, BoxObstacle):
                return {
                    "shape": "box",
                    "class_name": ob.class_name,
                    "cx": ob.cx,
                    "cy": ob.cy,
                    "sx": ob.sx,
                    "sy": ob.sy,
                    "height": ob.height,
                }
            return {
                "shape": "cylinder",
                "class_name": ob.class_name,
                "cx": ob.cx,
                "cy": ob.cy,
                "radius": ob.radius,
                "height": ob.height,
            }

        d = {
            "format": SCENE_FORMAT,
            "version": SCENE_VERSION,
            "name": self.name,
            "corridor_width": self.corridor_width,
            "ceiling_height": self.ceiling_height,
            "intersection_radius": self.intersection_radius,
            "start": list(self.start),
            "walls": [
                {"x0": w.x0, "y0": w.y0, "x1": w.x1, "y1": w.y1, "height": w.height}
                for w in self.walls
            ],
            "obstacles": [_obstacle(ob) for ob in self.obstacles],
            "nav": {
                "nodes": [list(p) for p in self.nav_nodes],
                "edges": [list(e) for e in self.nav_edges],
            },
            "intersections": [
                {"node": i, "radius": self.intersection_radius} for i in self.junction_nodes()
            ],
            "routes": [
                {
                    "name": r.name,
                    "commands": [c.value for c in r.commands],
                    "pedestrian": r.pedestrian,
                }
                for r in self.routes
            ],
        }
        if self.pedestrian is not None:
            p = self.pedestrian
            d["pedestrian"] = {
                "waypoints": [list(w) for w in p.waypoints],
                "speed": p.speed,
                "radius": p.radius,
                "height": p.height,
                "class_name": p.class_name,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        if d.get("format") != SCENE_FORMAT:
            raise ValueError(f"not a {SCENE_FORMAT} document")
        if d.get("version") != SCENE_VERSION:
            raise ValueError(f"scene version {d.get('version')} != supported {SCENE_VERSION}")
        obstacles = []
        for ob in d.get("obstacles", []):
            if ob["shape"] == "box":
                obstacles.append(
                    BoxObstacle(ob["class_name"], ob["cx"], ob["cy"], ob["sx"], ob["sy"], ob["height"])
                )
            elif ob["shape"] == "cylinder":
                obstacles.append(
                    CylinderObstacle(ob["class_name"], ob["cx"], ob["cy"], ob["radius"], ob["height"])
                )
            else:
                raise ValueError(f"unknown obstacle shape {ob['shape']!r}")
        ped = None
        if d.get("pedestrian") is not None:
            p = d["pedestrian"]
            ped = PedestrianPath(
                waypoints=tuple(tuple(w) for w in p["waypoints"]),
                speed=p["speed"],
                radius=p["radius"],
                height=p["height"],
                class_name=p.get("class_name", "person"),
            )
        return cls(
            name=d["name"],
            walls=tuple(Wall(**w) for w in d.get("walls", [])),
            obstacles=tuple(obstacles),
            nav_nodes=tuple(tuple(p) for p in d["nav"]["nodes"]),
            nav_edges=tuple(tuple(e) for e in d["nav"]["edges"]),
            start=tuple(d["start"]),
            corridor_width=d.get("corridor_width", 2.2),
            ceiling_height=d.get("ceiling_height", 2.5),
            intersection_radius=d.get("intersection_radius", 1.8),
            pedestrian=ped,
            routes=tuple(
                Route(
                    r["name"],
                    tuple(DirectionCommand.parse(c) for c in r["commands"]),
                    r.get("pedestrian", False),
                )
                for r in d.get("routes", [])
            ),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")
        return path

    def without_pedestrian(self) -> "Scene":
        return replace(self, pedestrian=None)


def _seg_distance(px: float, py: float, x0: float, y0: float, x1: float, y1: float) -> float:
    vx, vy = x1 - x0, y1 - y0
    L2 = vx * vx + vy * vy
    if L2 <= 0.0:
        return math.hypot(px - x0, py - y0)
    u = max(0.0, min(1.0, ((px - x0) * vx + (py - y0) * vy) / L2))
    return math.hypot(px - (x0 + u * vx), py - (y0 + u * vy))


def list_builtin_scenes() -> Tuple[str, ...]:
    files = resources.files("depthnav.scenes")
    return tuple(sorted(p.name[: -len(".json")] for p in files.iterdir() if p.name.endswith(".json")))


def load_scene(name_or_path) -> Scene:
    """Load a scene from a JSON file path or a built-in scene name."""
    p = Path(str(name_or_path))
    if p.suffix == ".json" and p.exists():
        return Scene.from_dict(json.loads(p.read_text("utf-8")))
    builtin = resources.files("depthnav.scenes").joinpath(f"{name_or_path}.json")
    if builtin.is_file():
        return Scene.from_dict(json.loads(builtin.read_text("utf-8")))
    if p.exists():
        return Scene.from_dict(json.loads(p.read_text("utf-8")))
    raise FileNotFoundError(
        f"scene {name_or_path!r} is neither a file nor a built-in scene "
        f"(built-ins: {', '.join(list_builtin_scenes())})"
    )
