"""Desk-scale corridor simulator: scenes, rendering, expert, episodes, eval."""

from .scene import (
    ROBOT_RADIUS,
    V_MAX,
    W_MAX,
    BoxObstacle,
    CylinderObstacle,
    DirectionCommand,
    PedestrianPath,
    RobotState,
    Route,
    Scene,
    Wall,
    list_builtin_scenes,
    load_scene,
)
from .render import (
    CameraIntrinsics,
    ground_truth_detections,
    render_class_gray,
    render_depth,
    render_flat_rgb,
)
from .expert import Action, expert_policy
from .episodes import Episode, EpisodeConfig, StepSample, generate_episode
from .evaluate import EvalConfig, ExpertController, Observation, evaluate

__all__ = [
    "Scene",
    "Wall",
    "BoxObstacle",
    "CylinderObstacle",
    "PedestrianPath",
    "Route",
    "RobotState",
    "DirectionCommand",
    "CameraIntrinsics",
    "Action",
    "Episode",
    "EpisodeConfig",
    "StepSample",
    "EvalConfig",
    "ExpertController",
    "Observation",
    "load_scene",
    "list_builtin_scenes",
    "render_depth",
    "render_class_gray",
    "render_flat_rgb",
    "ground_truth_detections",
    "expert_policy",
    "generate_episode",
    "evaluate",
    "ROBOT_RADIUS",
    "V_MAX",
    "W_MAX",
]
