"""Expert episode generation with recovery-state initialization.

Episodes roll the scripted expert at a fixed control period, recording the
observation, the active direction command and the expert action at every
step.  A configurable fraction of episodes starts in a bad state (adjacent
to or touching geometry) so the dataset contains recovery behavior; the
actions that would have led into the bad state are never part of the data
because the episode simply begins there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..images import Detection, DepthImage
from ..rng import RngStream
from ..semantic import CategoryMap, default_category_map
from .expert import Action, expert_policy
from .render import CameraIntrinsics, MIN_DETECTION_PIXELS, detections_from_ids, render_depth_ids
from .scene import ROBOT_RADIUS, BoxObstacle, CylinderObstacle, DirectionCommand, RobotState, Scene


@dataclass(frozen=True)
class EpisodeConfig:
    camera: CameraIntrinsics
    dt: float = 0.1
    max_steps: int = 120
    recovery_fraction: float = 0.2
    stop_prob: float = 0.15
    stop_hold_steps: int = 8
    min_det_pixels: int = MIN_DETECTION_PIXELS

    def __post_init__(self) -> None:
        if not 0.0 <= self.recovery_fraction <= 1.0:
            raise ValueError(f"recovery_fraction must be in [0, 1], got {self.recovery_fraction}")
        if self.dt <= 0 or self.max_steps <= 0:
            raise ValueError("dt and max_steps must be positive")


@dataclass(frozen=True)
class StepSample:
    """One recorded timestep: observation, command, expert action."""

    t: float
    state: RobotState
    command: DirectionCommand
    action: Action
    depth: DepthImage
    detections: Tuple[Detection, ...]
    ped_pos: Optional[Tuple[float, float]]


@dataclass(frozen=True)
class Episode:
    samples: Tuple[StepSample, ...]
    start_recovery: bool
    truncated: bool = False


#: starts keep this much surface gap to the pedestrian's whole sweep, so an
#: episode never begins inside a walker's lane
SPAWN_PED_GAP = ROBOT_RADIUS + 0.15


def _sample_on_graph_pose(scene: Scene, gen: np.random.Generator) -> Tuple[float, float, float]:
    for _ in range(200):
        a, b = scene.nav_edges[int(gen.integers(len(scene.nav_edges)))]
        (ax, ay), (bx, by) = scene.nav_nodes[a], scene.nav_nodes[b]
        u = gen.uniform(0.1, 0.9)
        px, py = ax + u * (bx - ax), ay + u * (by - ay)
        # lateral jitter within the corridor
        ex, ey = bx - ax, by - ay
        norm = math.hypot(ex, ey)
        ex, ey = (ex / norm, ey / norm) if norm > 0 else (1.0, 0.0)
        lat = gen.uniform(-0.3, 0.3)
        px, py = px - ey * lat, py + ex * lat
        heading = math.atan2(ey, ex) + gen.normal(0.0, 0.3)
        if gen.random() < 0.5:
            heading += math.pi
        if (
            scene.clearance(px, py, 0.0) >= ROBOT_RADIUS + 0.05
            and scene.pedestrian_path_clearance(px, py) >= SPAWN_PED_GAP
        ):
            return (px, py, heading)
    return scene.start


def _sample_recovery_pose(scene: Scene, gen: np.random.Generator) -> Tuple[float, float, float]:
    """Pose with surface clearance in [R, R + 0.1]: touching-ish geometry."""
    elements: List = list(scene.obstacles) + list(scene.walls)
    for _ in range(300):
        el = elements[int(gen.integers(len(elements)))]
        margin = ROBOT_RADIUS + gen.uniform(0.0, 0.1)
        if isinstance(el, CylinderObstacle):
            ang = gen.uniform(-math.pi, math.pi)
            px = el.cx + (el.radius + margin) * math.cos(ang)
            py = el.cy + (el.radius + margin) * math.sin(ang)
        elif isinstance(el, BoxObstacle):
            side = int(gen.integers(4))
            hx, hy = el.sx / 2.0, el.sy / 2.0
            u = gen.uniform(-1.0, 1.0)
            if side == 0:
                px, py = el.cx + u * hx, el.cy - hy - margin
            elif side == 1:
                px, py = el.cx + u * hx, el.cy + hy + margin
            elif side == 2:
                px, py = el.cx - hx - margin, el.cy + u * hy
            else:
                px, py = el.cx + hx + margin, el.cy + u * hy
        else:  # wall segment: random point, random side
            u = gen.uniform(0.0, 1.0)
            wx, wy = el.x0 + u * (el.x1 - el.x0), el.y0 + u * (el.y1 - el.y0)
            nx, ny = el.y1 - el.y0, -(el.x1 - el.x0)
            norm = math.hypot(nx, ny)
            if norm <= 0:
                continue
            nx, ny = nx / norm, ny / norm
            if gen.random() < 0.5:
                nx, ny = -nx, -ny
            px, py = wx + nx * margin, wy + ny * margin
        heading = gen.uniform(-math.pi, math.pi)
        near_graph = min(
            _dist_to_edge(scene, px, py, a, b) for a, b in scene.nav_edges
        ) <= scene.corridor_width / 2.0
        if (
            near_graph
            and scene.clearance(px, py, 0.0) >= ROBOT_RADIUS
            and scene.pedestrian_path_clearance(px, py) >= SPAWN_PED_GAP
        ):
            return (px, py, heading)
    return _sample_on_graph_pose(scene, gen)


def _dist_to_edge(scene: Scene, x, y, a, b) -> float:
    (ax, ay), (bx, by) = scene.nav_nodes[a], scene.nav_nodes[b]
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    u = 0.0 if L2 <= 0 else max(0.0, min(1.0, ((x - ax) * vx + (y - ay) * vy) / L2))
    return math.hypot(x - (ax + u * vx), y - (ay + u * vy))


class CommandTracker:
    """Tracks the active direction command through junction zones."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self.zones = scene.zone_nodes()
        self.inside: Optional[int] = None
        self.active = DirectionCommand.MOVE_FORWARD
        self.stopped = False

    def _zone_of(self, x: float, y: float) -> Optional[int]:
        best, best_d = None, math.inf
        for node in self.zones:
            nx, ny = self.scene.nav_nodes[node]
            d = math.hypot(x - nx, y - ny)
            if d <= self.scene.intersection_radius and d < best_d:
                best, best_d = node, d
        return best

    def update(self, x: float, y: float, heading: float, pick) -> DirectionCommand:
        """``pick(node, heading)`` supplies the command on zone entry."""
        if self.stopped:
            return DirectionCommand.STOP
        zone = self._zone_of(x, y)
        if zone is not None and zone != self.inside:
            self.inside = zone
            self.active = pick(zone, heading)
            if self.active is DirectionCommand.STOP:
                self.stopped = True
        elif zone is None and self.inside is not None:
            self.inside = None
            self.active = DirectionCommand.MOVE_FORWARD
        return self.active


def _legal_random_command(
    scene: Scene, node: int, heading: float, gen: np.random.Generator, stop_prob: float
) -> DirectionCommand:
    from .expert import _edge_options

    if gen.random() < stop_prob:
        return DirectionCommand.STOP
    options = _edge_options(scene, node, (math.cos(heading), math.sin(heading)))
    legal = [
        cmd
        for cmd, key in (
            (DirectionCommand.MOVE_FORWARD, "forward"),
            (DirectionCommand.TURN_LEFT, "left"),
            (DirectionCommand.TURN_RIGHT, "right"),
        )
        if options[key]
    ]
    if not legal:  # dead end: stopping is the only sensible demonstration
        return DirectionCommand.STOP
    return legal[int(gen.integers(len(legal)))]


def generate_episode(
    scene: Scene,
    cfg: EpisodeConfig,
    rng: RngStream,
    category_map: Optional[CategoryMap] = None,
) -> Episode:
    """Roll the expert from a (possibly bad) start, recording every step."""
    cmap = category_map if category_map is not None else default_category_map()
    gen = rng.generator()
    recovery = bool(gen.random() < cfg.recovery_fraction)
    if recovery:
        x, y, heading = _sample_recovery_pose(scene, gen)
    else:
        x, y, heading = _sample_on_graph_pose(scene, gen)
    state = RobotState(x, y, heading)

    tracker = CommandTracker(scene)
    samples: List[StepSample] = []
    positions: List[Tuple[float, float]] = []
    stop_steps = 0

    for step in range(cfg.max_steps):
        t = step * cfg.dt
        cmd = tracker.update(
            state.x,
            state.y,
            state.heading,
            lambda node, heading: _legal_random_command(scene, node, heading, gen, cfg.stop_prob),
        )
        depth, ids = render_depth_ids(scene, state, cfg.camera, t)
        dets = detections_from_ids(scene, ids, cmap, cfg.min_det_pixels)
        action = expert_policy(scene, state, cmd, t)
        samples.append(
            StepSample(
                t=t,
                state=state,
                command=cmd,
                action=action,
                depth=depth,
                detections=tuple(dets),
                ped_pos=scene.pedestrian_position(t),
            )
        )
        positions.append((state.x, state.y))

        if cmd is DirectionCommand.STOP:
            stop_steps += 1
            if stop_steps >= cfg.stop_hold_steps:
                break
        nxt = state.step(action.v, action.w, cfg.dt)
        if scene.collides(nxt.x, nxt.y, t + cfg.dt):
            # guard: the expert should never drive into geometry; keep the
            # rotation but refuse the translation
            nxt = RobotState(state.x, state.y, nxt.heading, 0.0, nxt.w)
        state = nxt

    truncated = False
    window = int(round(5.0 / cfg.dt))
    if len(samples) >= cfg.max_steps and len(positions) > window and stop_steps == 0:
        x0, y0 = positions[-window - 1]
        x1, y1 = positions[-1]
        truncated = math.hypot(x1 - x0, y1 - y0) < 0.05

    return Episode(samples=tuple(samples), start_recovery=recovery, truncated=truncated)
