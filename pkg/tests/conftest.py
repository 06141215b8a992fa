import numpy as np
import pytest

from depthnav.images import DepthImage
from depthnav.sim.build import build_corridor_scene
from depthnav.sim.render import CameraIntrinsics
from depthnav.sim.scene import Scene, Wall


@pytest.fixture()
def small_cam() -> CameraIntrinsics:
    return CameraIntrinsics(32, 24)


@pytest.fixture()
def straight_scene() -> Scene:
    """A single 12 m straight corridor, no obstacles."""
    return build_corridor_scene(
        "straight", nodes=[(0, 0), (12, 0)], edges=[(0, 1)], start=(0.0, 0.0, 0.0), width=2.2
    )


@pytest.fixture()
def wall_scene() -> Scene:
    """One wall 2 m ahead of the origin; minimal nav graph."""
    return Scene(
        name="wall",
        walls=(Wall(2.0, -4.0, 2.0, 4.0, height=2.5),),
        obstacles=(),
        nav_nodes=((0.0, 0.0), (1.0, 0.0)),
        nav_edges=((0, 1),),
        start=(0.0, 0.0, 0.0),
    )


@pytest.fixture()
def ramp_depth() -> DepthImage:
    """Depth image with structure: horizontal ramp plus a block step."""
    h, w = 48, 64
    data = np.tile(np.linspace(1.0, 5.0, w, dtype=np.float32), (h, 1))
    data[12:30, 20:36] = 0.8
    return DepthImage(data)
