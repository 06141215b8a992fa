#!/usr/bin/env python3
"""Regenerate the shipped scene JSON files from their builder descriptions.

Usage: python tools/gen_scenes.py [out_dir]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from depthnav.sim.build import build_corridor_scene
from depthnav.sim.scene import (
    BoxObstacle,
    CylinderObstacle,
    DirectionCommand as DC,
    PedestrianPath,
    Route,
)


def train_corridor():
    """Theta-shaped training layout: outer loop plus a middle corridor."""
    nodes = [(0, 0), (5, 0), (10, 0), (10, 8), (5, 8), (0, 8)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)]
    obstacles = [
        BoxObstacle("box", 2.5, 0.6, 0.5, 0.5, 0.8),
        BoxObstacle("chair", 7.5, 0.62, 0.45, 0.45, 1.0),
        CylinderObstacle("trash_can", 10.55, 4.0, 0.25, 0.8),
        BoxObstacle("cabinet", 3.2, 8.6, 0.6, 0.5, 1.6),
        BoxObstacle("foam_board", 5.65, 3.0, 0.5, 0.3, 1.2),
        CylinderObstacle("plant", 0.6, 4.5, 0.2, 1.1),
    ]
    # patrols the south-east corridor lengthwise, like a hallway walker
    ped = PedestrianPath(waypoints=((6.0, -0.68), (9.0, -0.68)), speed=0.5, radius=0.3)
    routes = [
        Route("loop-east", (DC.TURN_RIGHT, DC.TURN_LEFT), pedestrian=True),
        Route("middle-up", (DC.TURN_LEFT, DC.TURN_RIGHT), pedestrian=True),
    ]
    return build_corridor_scene(
        "train_corridor",
        nodes,
        edges,
        start=(0.0, 0.0, 0.0),
        width=2.2,
        obstacles=obstacles,
        pedestrian=ped,
        routes=routes,
    )


def test_corridor():
    """Ladder layout with an extra stub: different structure from training."""
    nodes = [(0, 0), (0, 5), (0, 10), (6, 0), (6, 5), (6, 10), (9.5, 5)]
    edges = [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (2, 5), (1, 4), (4, 6)]
    obstacles = [
        BoxObstacle("foam_board", 3.0, 0.62, 0.9, 0.25, 1.2),
        BoxObstacle("chair", 5.35, 0.9, 0.35, 0.4, 1.0),
        BoxObstacle("chair", -0.55, 7.5, 0.45, 0.45, 1.0),
        BoxObstacle("box", 3.2, 5.6, 0.5, 0.5, 0.8),
        CylinderObstacle("trash_can", 8.3, 4.35, 0.22, 0.8),
        BoxObstacle("suitcase", 5.42, 8.5, 0.45, 0.35, 0.7),
    ]
    # patrols the lower east corridor lengthwise; every route passes it
    ped = PedestrianPath(waypoints=((6.62, 1.4), (6.62, 3.9)), speed=0.5, radius=0.3)
    F, L, R = DC.MOVE_FORWARD, DC.TURN_LEFT, DC.TURN_RIGHT
    routes = [
        Route("r0", (F,), pedestrian=True),
        Route("r1", (L, L), pedestrian=True),
        Route("r2", (R,), pedestrian=True),
        Route("r3", (F, L), pedestrian=True),
        Route("r4", (F, F), pedestrian=True),
        Route("r5", (L, R), pedestrian=True),
        Route("r6", (L, L, R), pedestrian=True),
        Route("r7", (F, L, R), pedestrian=True),
        Route("r8", (L, R, F), pedestrian=True),
        Route("r9", (F, F, L), pedestrian=True),
    ]
    return build_corridor_scene(
        "test_corridor",
        nodes,
        edges,
        start=(0.0, 0.0, 0.0),
        width=2.0,
        obstacles=obstacles,
        pedestrian=ped,
        routes=routes,
    )


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "depthnav" / "scenes"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    for build in (train_corridor, test_corridor):
        scene = build()
        path = scene.save(out_dir / f"{scene.name}.json")
        print(f"wrote {path} ({len(scene.walls)} walls, {len(scene.obstacles)} obstacles)")


if __name__ == "__main__":
    main()
