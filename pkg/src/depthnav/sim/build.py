"""Procedural corridor construction: walls from a navigation graph.

Each axis-aligned graph edge becomes a corridor rectangle and each node a
junction square; walls are the boundary of their union.  A candidate wall
piece (a rectangle side) is erased wherever another rectangle either crosses
the side's line or touches it from the outward side.  Corridors may only
meet through shared faces (no side-by-side touching), which the layouts in
this package respect.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

from .scene import (
    BoxObstacle,
    CylinderObstacle,
    PedestrianPath,
    Route,
    Scene,
    Wall,
)

Rect = Tuple[float, float, float, float]  # x0, y0, x1, y1 with x0 < x1, y0 < y1
_EPS = 1e-9


def _corridor_rects(
    nodes: Sequence[Tuple[float, float]], edges: Sequence[Tuple[int, int]], width: float
) -> List[Rect]:
    half = width / 2.0
    rects: List[Rect] = []
    for x, y in nodes:
        rects.append((x - half, y - half, x + half, y + half))
    for a, b in edges:
        (ax, ay), (bx, by) = nodes[a], nodes[b]
        if abs(ax - bx) > _EPS and abs(ay - by) > _EPS:
            raise ValueError(f"nav edge ({a}, {b}) is not axis-aligned")
        x0, x1 = min(ax, bx), max(ax, bx)
        y0, y1 = min(ay, by), max(ay, by)
        rects.append((x0 - half, y0 - half, x1 + half, y1 + half))
    return rects


def _subtract_intervals(
    span: Tuple[float, float], holes: List[Tuple[float, float]]
) -> List[Tuple[float, float]]:
    pieces = [span]
    for h0, h1 in holes:
        nxt: List[Tuple[float, float]] = []
        for p0, p1 in pieces:
            if h1 <= p0 + _EPS or h0 >= p1 - _EPS:
                nxt.append((p0, p1))
                continue
            if h0 > p0 + _EPS:
                nxt.append((p0, h0))
            if h1 < p1 - _EPS:
                nxt.append((h1, p1))
        pieces = nxt
    return [(a, b) for a, b in pieces if b - a > 1e-6]


def _merge_collinear(
    segments: List[Tuple[float, Tuple[float, float]]]
) -> List[Tuple[float, Tuple[float, float]]]:
    by_line: Dict[float, List[Tuple[float, float]]] = {}
    for line, span in segments:
        key = round(line, 9)
        by_line.setdefault(key, []).append(span)
    merged: List[Tuple[float, Tuple[float, float]]] = []
    for line, spans in sorted(by_line.items()):
        spans.sort()
        cur0, cur1 = spans[0]
        for s0, s1 in spans[1:]:
            if s0 <= cur1 + 1e-6:
                cur1 = max(cur1, s1)
            else:
                merged.append((line, (cur0, cur1)))
                cur0, cur1 = s0, s1
        merged.append((line, (cur0, cur1)))
    return merged


def walls_from_graph(
    nodes: Sequence[Tuple[float, float]],
    edges: Sequence[Tuple[int, int]],
    width: float,
    height: float = 2.5,
) -> Tuple[Wall, ...]:
    """Boundary walls of the union of corridor rectangles."""
    rects = _corridor_rects(nodes, edges, width)

    horizontal: List[Tuple[float, Tuple[float, float]]] = []  # (y, (x0, x1))
    vertical: List[Tuple[float, Tuple[float, float]]] = []  # (x, (y0, y1))

    for i, (x0, y0, x1, y1) in enumerate(rects):
        # (line coord, span, outward direction sign along the perpendicular)
        sides = [
            ("h", y0, (x0, x1), -1.0),
            ("h", y1, (x0, x1), +1.0),
            ("v", x0, (y0, y1), -1.0),
            ("v", x1, (y0, y1), +1.0),
        ]
        for axis, line, span, outward in sides:
            holes: List[Tuple[float, float]] = []
            for j, (a0, b0, a1, b1) in enumerate(rects):
                if j == i:
                    continue
                if axis == "h":
                    lo, hi, s0, s1 = b0, b1, a0, a1
                else:
                    lo, hi, s0, s1 = a0, a1, b0, b1
                # strictly inside the other rect's perpendicular extent
                crosses = (line > lo + _EPS) and (line < hi - _EPS)
                # erased if the other rect touches our line from the outward
                # side: its far face coincides with this side's line
                if outward < 0:
                    touches_outside = abs(hi - line) <= _EPS
                else:
                    touches_outside = abs(lo - line) <= _EPS
                if crosses or touches_outside:
                    holes.append((max(span[0], s0), min(span[1], s1)))
            remaining = _subtract_intervals(span, [h for h in holes if h[1] > h[0]])
            target = horizontal if axis == "h" else vertical
            target.extend((line, piece) for piece in remaining)

    walls: List[Wall] = []
    for y, (x0, x1) in _merge_collinear(horizontal):
        walls.append(Wall(x0, y, x1, y, height))
    for x, (y0, y1) in _merge_collinear(vertical):
        walls.append(Wall(x, y0, x, y1, height))
    return tuple(walls)


def build_corridor_scene(
    name: str,
    nodes: Sequence[Tuple[float, float]],
    edges: Sequence[Tuple[int, int]],
    start: Tuple[float, float, float],
    width: float = 2.2,
    wall_height: float = 2.5,
    obstacles: Sequence = (),
    pedestrian: PedestrianPath = None,
    routes: Sequence[Route] = (),
    intersection_radius: float = 1.8,
) -> Scene:
    scene = Scene(
        name=name,
        walls=walls_from_graph(nodes, edges, width, wall_height),
        obstacles=tuple(obstacles),
        nav_nodes=tuple(tuple(p) for p in nodes),
        nav_edges=tuple(tuple(e) for e in edges),
        start=tuple(start),
        corridor_width=width,
        ceiling_height=wall_height,
        intersection_radius=intersection_radius,
        pedestrian=pedestrian,
        routes=tuple(routes),
    )
    _validate_scene(scene)
    return scene


def _validate_scene(scene: Scene) -> None:
    """Cheap sanity checks: obstacles keep the corridor passable and the
    pedestrian path stays clear of static geometry."""
    for ob in scene.obstacles:
        # the obstacle must leave a free gap on the centerline side
        d_center = min(
            _point_to_edge(scene, ob.cx, ob.cy, a, b) for a, b in scene.nav_edges
        )
        if d_center > scene.corridor_width:
            raise ValueError(f"obstacle {ob.class_name} at ({ob.cx}, {ob.cy}) is outside corridors")
    if scene.pedestrian is not None:
        p = scene.pedestrian
        ts = [i * 0.05 for i in range(400)]
        for t in ts:
            x, y = p.position(t)
            dw = scene.wall_clearance(x, y)
            dobs = min((ob.surface_distance(x, y) for ob in scene.obstacles), default=math.inf)
            if min(dw, dobs) < p.radius - 1e-6:
                raise ValueError(f"pedestrian path collides with static geometry near ({x:.2f}, {y:.2f})")


def _point_to_edge(scene: Scene, x: float, y: float, a: int, b: int) -> float:
    (ax, ay), (bx, by) = scene.nav_nodes[a], scene.nav_nodes[b]
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    if L2 <= 0:
        return math.hypot(x - ax, y - ay)
    u = max(0.0, min(1.0, ((x - ax) * vx + (y - ay) * vy) / L2))
    return math.hypot(x - (ax + u * vx), y - (ay + u * vy))
