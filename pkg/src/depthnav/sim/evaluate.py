"""Closed-loop evaluation: roll a controller along a route and log everything.

An intervention is a collision or a stuck phase (displacement below 5 cm
over 5 s); after one, the robot is placed 0.5 m back along its traveled path
and the run continues.  Observations can be noise-augmented independently of
the representation kind, which lets a clean-trained model be stress-tested
on noisy inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Tuple

import numpy as np

from ..images import GrayImage, ReprBundle, ReprKind
from ..metrics import EvalLog, EvalStep
from ..noise import NoiseParams, augment
from ..rng import RngStream
from ..semantic import CategoryMap, default_category_map, rasterize
from .expert import Action, expert_policy
from .render import (
    CameraIntrinsics,
    MIN_DETECTION_PIXELS,
    detections_from_ids,
    render_class_gray,
    render_depth_ids,
    render_flat_rgb,
)
from .scene import ROBOT_RADIUS, DirectionCommand, RobotState, Route, Scene
from .episodes import CommandTracker


@dataclass(frozen=True)
class Observation:
    """What a controller sees at one control step."""

    bundle: Optional[ReprBundle]
    command: DirectionCommand
    state: RobotState
    scene: Scene
    t: float


class Controller(Protocol):
    def act(self, obs: Observation) -> Action: ...


class ExpertController:
    """The scripted expert as an evaluation baseline; ignores the images."""

    def act(self, obs: Observation) -> Action:
        return expert_policy(obs.scene, obs.state, obs.command, obs.t)


@dataclass(frozen=True)
class EvalConfig:
    camera: CameraIntrinsics
    kind: Optional[ReprKind] = None  # None: no observation built (expert)
    noise: NoiseParams = field(default_factory=NoiseParams)
    noisy_obs: Optional[bool] = None  # default: kind.noisy
    dt: float = 0.1
    max_time: float = 60.0
    stuck_window: float = 5.0
    stuck_dist: float = 0.05
    reset_backoff: float = 0.5
    intervention_cap: int = 25
    stop_settle: float = 1.0
    min_det_pixels: int = MIN_DETECTION_PIXELS

    @property
    def apply_noise(self) -> bool:
        if self.noisy_obs is not None:
            return self.noisy_obs
        return bool(self.kind is not None and self.kind.noisy)


def build_live_bundle(
    scene: Scene,
    state: RobotState,
    cfg: EvalConfig,
    t: float,
    rng: RngStream,
    category_map: Optional[CategoryMap] = None,
) -> Tuple[Optional[ReprBundle], Optional[np.ndarray]]:
    """Render the observation for ``cfg.kind`` at the live pose."""
    kind = cfg.kind
    if kind is None:
        return None, None
    cmap = category_map if category_map is not None else default_category_map()
    if kind.uses_depth:
        depth, ids = render_depth_ids(scene, state, cfg.camera, t)
        if cfg.apply_noise:
            depth = augment(depth, cfg.noise, rng)
        semantic = None
        if kind.needs_semantic:
            dets = detections_from_ids(scene, ids, cmap, cfg.min_det_pixels)
            semantic = rasterize(dets, depth.width, depth.height, cmap)
        return ReprBundle(kind, depth, semantic), ids
    if kind in (ReprKind.RGB, ReprKind.RGB_NOISE):
        rgb = render_flat_rgb(scene, state, cfg.camera, t)
        y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        return ReprBundle(kind, GrayImage(np.floor(y + 0.5).astype(np.uint8))), None
    return ReprBundle(kind, render_class_gray(scene, state, cfg.camera, t, cmap)), None


def _walk_back(history: List[Tuple[float, float, float]], dist: float):
    """Pose ``dist`` meters back along the traveled polyline."""
    acc = 0.0
    for i in range(len(history) - 1, 0, -1):
        x1, y1, _ = history[i]
        x0, y0, h0 = history[i - 1]
        acc += math.hypot(x1 - x0, y1 - y0)
        if acc >= dist:
            return history[i - 1]
    return history[0]


def evaluate(
    controller: Controller,
    scene: Scene,
    route: Route,
    cfg: EvalConfig,
    rng: RngStream,
    category_map: Optional[CategoryMap] = None,
) -> EvalLog:
    """Roll ``controller`` through ``route``; every step is logged."""
    cmap = category_map if category_map is not None else default_category_map()
    state = RobotState(*scene.start)
    tracker = CommandTracker(scene)
    queue = list(route.commands)

    def pick(node: int, heading: float) -> DirectionCommand:
        return queue.pop(0) if queue else DirectionCommand.STOP

    steps: List[EvalStep] = []
    history: List[Tuple[float, float, float]] = [state.pose]
    window: List[Tuple[float, float, float]] = [(0.0, state.x, state.y)]
    interventions = 0
    stop_since: Optional[float] = None
    completed = False
    n_steps = int(round(cfg.max_time / cfg.dt))
    hfov2 = cfg.camera.hfov / 2.0

    t = 0.0
    for i in range(n_steps):
        t = i * cfg.dt
        cmd = tracker.update(state.x, state.y, state.heading, pick)
        bundle, _ = build_live_bundle(scene, state, cfg, t, rng.child(i), cmap)
        action = controller.act(Observation(bundle, cmd, state, scene, t))

        ped = scene.pedestrian_position(t)
        ped_dist = None
        ped_fov = False
        if ped is not None:
            center = math.hypot(ped[0] - state.x, ped[1] - state.y)
            ped_dist = center - scene.pedestrian.radius
            bearing = math.atan2(ped[1] - state.y, ped[0] - state.x) - state.heading
            bearing = math.atan2(math.sin(bearing), math.cos(bearing))
            ped_fov = abs(bearing) <= hfov2 and center <= cfg.camera.max_range

        proposed = state.step(action.v, action.w, cfg.dt)
        collision = scene.collides(proposed.x, proposed.y, t + cfg.dt) or scene.collides(
            state.x, state.y, t
        )

        stuck = False
        w0 = window[0]
        if t - w0[0] >= cfg.stuck_window:
            if math.hypot(state.x - w0[1], state.y - w0[2]) < cfg.stuck_dist:
                stuck = True

        steps.append(
            EvalStep(
                t=t,
                pose=state.pose,
                v=proposed.v,
                w=proposed.w,
                command=cmd.value,
                ped_distance=ped_dist,
                ped_in_fov=ped_fov,
                collision=collision,
                stuck=stuck,
            )
        )

        if collision or stuck:
            interventions += 1
            if interventions >= cfg.intervention_cap:
                break
            back = _walk_back(history, cfg.reset_backoff)
            state = RobotState(back[0], back[1], back[2])
            history = [state.pose]
            window = [(t + cfg.dt, state.x, state.y)]
            stop_since = None
            continue

        state = proposed
        history.append(state.pose)
        window.append((t + cfg.dt, state.x, state.y))
        # keep the oldest entry that is at least stuck_window old
        while len(window) > 1 and (t + cfg.dt) - window[1][0] >= cfg.stuck_window:
            window.pop(0)

        if tracker.stopped and not queue:
            if abs(action.v) < 0.05:
                if stop_since is None:
                    stop_since = t
                elif t - stop_since >= cfg.stop_settle:
                    completed = True
                    break
            else:
                stop_since = None

    duration = (len(steps)) * cfg.dt if steps else 0.0
    return EvalLog(
        route=route.name,
        steps=tuple(steps),
        completed=completed,
        duration=duration,
        meta={"interventions_raw": interventions, "scene": scene.name},
    )
