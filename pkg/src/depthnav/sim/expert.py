"""Scripted expert: pure pursuit on the corridor centerline graph, biased by
the active direction command at junctions, with repulsive slowdown.

The expert is stateless: each call projects the pose onto the navigation
graph, walks a lookahead distance along it (choosing branches by the
command), and steers toward the resulting point.  Linear velocity scales
down with heading error and with proximity to obstacles or the pedestrian in
front, reaching zero at contact distance, so the expert demonstrates both
smooth cruising and recovery from bad starting states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .scene import (
    ROBOT_RADIUS,
    V_MAX,
    W_MAX,
    BoxObstacle,
    DirectionCommand,
    RobotState,
    Scene,
    wrap_angle,
)

LOOKAHEAD = 1.2  # m along the centerline graph
HEADING_GAIN = 2.5
AVOID_RANGE = 1.6  # m, steering repulsion horizon
AVOID_GAIN = 1.1
SLOW_RANGE = 2.0  # m, the documented linear slowdown horizon
WALL_SLOW_RANGE = 1.3  # m, narrow-cone braking for walls ahead
WALL_AVOID_RANGE = 0.5  # m, steering repulsion from very near walls
FRONT_CONE = math.radians(75.0)
WALL_CONE = math.radians(35.0)
GUARD_DT = 0.12  # s, predictive no-collision horizon (> control period)
GUARD_MARGIN = 0.02  # m, clearance the expert always keeps beyond contact


@dataclass(frozen=True)
class Action:
    """Commanded body velocities in physical units."""

    v: float
    w: float

    def normalized(self) -> Tuple[float, float]:
        return (self.v / V_MAX, self.w / W_MAX)

    @classmethod
    def from_normalized(cls, v_norm: float, w_norm: float) -> "Action":
        return cls(
            v=float(min(max(v_norm, 0.0), 1.0)) * V_MAX,
            w=float(min(max(w_norm, -1.0), 1.0)) * W_MAX,
        )


def _project_to_graph(scene: Scene, x: float, y: float):
    """Nearest point on any nav edge: (edge index, point, param in [0, 1])."""
    best = (math.inf, 0, (0.0, 0.0), 0.0)
    for idx, (a, b) in enumerate(scene.nav_edges):
        (ax, ay), (bx, by) = scene.nav_nodes[a], scene.nav_nodes[b]
        vx, vy = bx - ax, by - ay
        L2 = vx * vx + vy * vy
        u = 0.0 if L2 <= 0 else max(0.0, min(1.0, ((x - ax) * vx + (y - ay) * vy) / L2))
        px, py = ax + u * vx, ay + u * vy
        d = math.hypot(x - px, y - py)
        if d < best[0]:
            best = (d, idx, (px, py), u)
    return best[1], best[2], best[3]


def _edge_options(scene: Scene, node: int, arrive_dir: Tuple[float, float]):
    """Outgoing nodes grouped by relative bearing: forward/left/right."""
    out = {"forward": [], "left": [], "right": []}
    ax, ay = scene.nav_nodes[node]
    for nb in scene.node_neighbors(node):
        bx, by = scene.nav_nodes[nb]
        ex, ey = bx - ax, by - ay
        norm = math.hypot(ex, ey)
        if norm <= 0:
            continue
        ex, ey = ex / norm, ey / norm
        dot = arrive_dir[0] * ex + arrive_dir[1] * ey
        if dot < -math.cos(math.radians(45.0)):
            continue  # going back the way we came
        bearing = math.atan2(arrive_dir[0] * ey - arrive_dir[1] * ex, dot)
        if abs(bearing) <= math.radians(45.0):
            out["forward"].append((abs(bearing), nb))
        elif bearing > 0:
            out["left"].append((abs(bearing - math.pi / 2), nb))
        else:
            out["right"].append((abs(bearing + math.pi / 2), nb))
    return out


def _choose_branch(options, cmd: DirectionCommand) -> Optional[int]:
    prefer = {
        DirectionCommand.MOVE_FORWARD: ("forward", "left", "right"),
        DirectionCommand.TURN_LEFT: ("left",),
        DirectionCommand.TURN_RIGHT: ("right",),
        DirectionCommand.STOP: ("forward", "left", "right"),
    }[cmd]
    for key in prefer:
        if options[key]:
            return min(options[key])[1]
    # no branch matches the command: continue the straightest way available
    remaining = sorted(options["forward"] + options["left"] + options["right"])
    return remaining[0][1] if remaining else None


def lookahead_target(
    scene: Scene, state: RobotState, cmd: DirectionCommand, lookahead: float = LOOKAHEAD
) -> Tuple[Tuple[float, float], float]:
    """Walk ``lookahead`` meters along the graph from the projected pose.

    Returns the target point and the distance actually walked (shorter than
    ``lookahead`` only at dead ends).
    """
    edge_idx, point, _u = _project_to_graph(scene, state.x, state.y)
    a, b = scene.nav_edges[edge_idx]
    (ax, ay), (bx, by) = scene.nav_nodes[a], scene.nav_nodes[b]
    ex, ey = bx - ax, by - ay
    norm = math.hypot(ex, ey)
    ex, ey = (ex / norm, ey / norm) if norm > 0 else (1.0, 0.0)
    hx, hy = math.cos(state.heading), math.sin(state.heading)
    if ex * hx + ey * hy >= 0.0:
        target_node, direction = b, (ex, ey)
    else:
        target_node, direction = a, (-ex, -ey)

    cx, cy = point
    remaining = lookahead
    walked = 0.0
    visited = 0
    while True:
        nx, ny = scene.nav_nodes[target_node]
        seg = math.hypot(nx - cx, ny - cy)
        if seg >= remaining:
            f = remaining / seg if seg > 0 else 0.0
            return (cx + f * (nx - cx), cy + f * (ny - cy)), walked + remaining
        walked += seg
        remaining -= seg
        cx, cy = nx, ny
        options = _edge_options(scene, target_node, direction)
        nxt = _choose_branch(options, cmd)
        if nxt is None or visited > 8:
            return (cx, cy), walked
        nnx, nny = scene.nav_nodes[nxt]
        dn = math.hypot(nnx - cx, nny - cy)
        direction = ((nnx - cx) / dn, (nny - cy) / dn) if dn > 0 else direction
        target_node = nxt
        visited += 1


def _front_hazards(scene: Scene, state: RobotState, t: float) -> Tuple[float, float, List]:
    """(nearest obstacle/pedestrian surface distance in the front cone,
    nearest wall distance in the narrow cone, repulsion list)."""
    hx, hy = math.cos(state.heading), math.sin(state.heading)
    d_obs = math.inf
    d_wall = math.inf
    repulsors: List[Tuple[float, float]] = []  # (bearing, surface distance)

    def bearing_to(px: float, py: float) -> float:
        return wrap_angle(math.atan2(py - state.y, px - state.x) - state.heading)

    items: List[Tuple[float, float, float]] = []  # (surface distance, px, py)
    for ob in scene.obstacles:
        d = ob.surface_distance(state.x, state.y)
        px, py = _closest_point(ob, state.x, state.y)
        items.append((d, px, py))
    ped = scene.pedestrian_position(t)
    if ped is not None:
        d = math.hypot(state.x - ped[0], state.y - ped[1]) - scene.pedestrian.radius
        items.append((d, ped[0], ped[1]))

    for d, px, py in items:
        beta = bearing_to(px, py)
        if abs(beta) <= FRONT_CONE:
            d_obs = min(d_obs, d)
            if d < AVOID_RANGE:
                repulsors.append((beta, d))

    for w in scene.walls:
        px, py = _closest_on_segment(state.x, state.y, w.x0, w.y0, w.x1, w.y1)
        d = math.hypot(state.x - px, state.y - py)
        beta = bearing_to(px, py)
        if abs(beta) <= WALL_CONE:
            d_wall = min(d_wall, d)
        if d < WALL_AVOID_RANGE and abs(beta) <= FRONT_CONE:
            repulsors.append((beta, d))

    return d_obs, d_wall, repulsors


def _closest_point(ob, x: float, y: float) -> Tuple[float, float]:
    if isinstance(ob, BoxObstacle):
        hx, hy = ob.sx / 2.0, ob.sy / 2.0
        return (
            min(max(x, ob.cx - hx), ob.cx + hx),
            min(max(y, ob.cy - hy), ob.cy + hy),
        )
    d = math.hypot(x - ob.cx, y - ob.cy)
    if d <= 1e-9:
        return (ob.cx + ob.radius, ob.cy)
    f = ob.radius / d
    return (ob.cx + (x - ob.cx) * f * 0.999, ob.cy + (y - ob.cy) * f * 0.999)


def _closest_on_segment(px, py, x0, y0, x1, y1) -> Tuple[float, float]:
    vx, vy = x1 - x0, y1 - y0
    L2 = vx * vx + vy * vy
    u = 0.0 if L2 <= 0 else max(0.0, min(1.0, ((px - x0) * vx + (py - y0) * vy) / L2))
    return (x0 + u * vx, y0 + u * vy)


def _slowdown(d: float, horizon: float) -> float:
    """Linear slowdown: 1 beyond the horizon, 0 at contact distance."""
    if d >= horizon:
        return 1.0
    return max(0.0, (d - ROBOT_RADIUS) / (horizon - ROBOT_RADIUS))


def expert_policy(
    scene: Scene, state: RobotState, cmd: DirectionCommand, t: float = 0.0
) -> Action:
    """Demonstration action for the current state and direction command."""
    if cmd is DirectionCommand.STOP:
        return Action(0.0, 0.0)

    (tx, ty), walked = lookahead_target(scene, state, cmd)
    alpha = wrap_angle(math.atan2(ty - state.y, tx - state.x) - state.heading)

    w = HEADING_GAIN * alpha
    d_obs, d_wall, repulsors = _front_hazards(scene, state, t)
    for beta, d in repulsors:
        weight = max(0.0, (AVOID_RANGE - d) / AVOID_RANGE) * max(0.0, math.cos(beta))
        w += -math.copysign(AVOID_GAIN, beta) * weight
    w = max(-W_MAX, min(W_MAX, w))

    v = V_MAX
    v *= max(0.0, math.cos(alpha))
    v *= _slowdown(d_obs, SLOW_RANGE)
    v *= _slowdown(d_wall, WALL_SLOW_RANGE)
    if walked < LOOKAHEAD:  # dead end ahead: creep to a stop at the node
        v *= walked / LOOKAHEAD
    v = max(0.0, min(V_MAX, v))

    # hard guard: never command a translation that would cut clearance below
    # contact + margin within the next control period
    hx, hy = math.cos(state.heading), math.sin(state.heading)
    for _ in range(5):
        if v < 1e-3:
            v = 0.0
            break
        nx, ny = state.x + v * hx * GUARD_DT, state.y + v * hy * GUARD_DT
        if scene.clearance(nx, ny, t + GUARD_DT) >= ROBOT_RADIUS + GUARD_MARGIN:
            break
        v *= 0.5
    else:
        v = 0.0
    return Action(v, w)
