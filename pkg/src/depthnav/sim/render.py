"""Pinhole depth rendering and ground-truth detections by ray casting.

The world is 2.5-D: walls and obstacle footprints extruded vertically, plus
floor and ceiling planes.  Rays are parametrized so the parameter equals the
distance along the optical axis, giving the planar-depth convention of RGB-D
cameras: a flat wall ahead renders at constant depth across the image.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..images import Detection, DepthImage, GrayImage
from ..semantic import CategoryMap, categorize, default_category_map
from .scene import BoxObstacle, CylinderObstacle, Scene

#: Height of the depth camera above the floor, meters.
CAMERA_HEIGHT = 0.55

#: Minimum silhouette size (pixels) for a ground-truth detection.
MIN_DETECTION_PIXELS = 50

# structural surface ids (obstacles use ids >= 0, pedestrian comes last)
ID_NONE = -4
ID_CEILING = -3
ID_FLOOR = -2
ID_WALL = -1

_CHUNK = 16384  # pixels per ray-cast chunk, bounds peak memory


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera: resolution, horizontal FOV and maximum range."""

    width: int
    height: int
    hfov: float = math.radians(70.0)
    max_range: float = 8.0

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("camera resolution must be positive")
        if not 0.0 < self.hfov < math.pi:
            raise ValueError(f"horizontal FOV must be in (0, pi), got {self.hfov}")
        if self.max_range <= 0:
            raise ValueError("max range must be positive")

    @property
    def focal(self) -> float:
        return (self.width / 2.0) / math.tan(self.hfov / 2.0)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "hfov": self.hfov,
            "max_range": self.max_range,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(**d)


@functools.lru_cache(maxsize=16)
def _static_geometry(scene: Scene):
    """Wall + obstacle-footprint segments and cylinders as flat arrays."""
    seg_a: List[Tuple[float, float]] = []
    seg_b: List[Tuple[float, float]] = []
    seg_z: List[float] = []
    seg_id: List[int] = []

    for w in scene.walls:
        seg_a.append((w.x0, w.y0))
        seg_b.append((w.x1, w.y1))
        seg_z.append(w.height)
        seg_id.append(ID_WALL)

    cyl: List[Tuple[float, float, float, float, int]] = []
    for idx, ob in enumerate(scene.obstacles):
        if isinstance(ob, BoxObstacle):
            corners = ob.corners()
            for k in range(4):
                seg_a.append(corners[k])
                seg_b.append(corners[(k + 1) % 4])
                seg_z.append(ob.height)
                seg_id.append(idx)
        elif isinstance(ob, CylinderObstacle):
            cyl.append((ob.cx, ob.cy, ob.radius, ob.height, idx))
        else:
            raise TypeError(f"unknown obstacle type {type(ob)!r}")

    return (
        np.array(seg_a, dtype=np.float64).reshape(-1, 2),
        np.array(seg_b, dtype=np.float64).reshape(-1, 2),
        np.array(seg_z, dtype=np.float64),
        np.array(seg_id, dtype=np.int64),
        np.array([c[:4] for c in cyl], dtype=np.float64).reshape(-1, 4),
        np.array([c[4] for c in cyl], dtype=np.int64),
    )


def _cast(
    scene: Scene,
    pose: Tuple[float, float, float],
    cam: CameraIntrinsics,
    t: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-pixel planar depth (0 where no hit within range) and surface id."""
    x, y, heading = pose
    oz = CAMERA_HEIGHT
    f = cam.focal
    cols = (np.arange(cam.width) + 0.5 - cam.width / 2.0) / f
    rows = (np.arange(cam.height) + 0.5 - cam.height / 2.0) / f
    u = np.broadcast_to(cols[None, :], (cam.height, cam.width)).reshape(-1)
    v = np.broadcast_to(rows[:, None], (cam.height, cam.width)).reshape(-1)

    fx, fy = math.cos(heading), math.sin(heading)
    rx, ry = fy, -fx  # right-hand horizontal basis, z up
    dx = fx + u * rx
    dy = fy + u * ry
    dz = -v  # rows grow downward

    seg_a, seg_b, seg_z, seg_id, cyls, cyl_id = _static_geometry(scene)
    ped = scene.pedestrian_position(t)
    if ped is not None:
        p = scene.pedestrian
        cyls = np.vstack([cyls, [[ped[0], ped[1], p.radius, p.height]]])
        cyl_id = np.concatenate([cyl_id, [len(scene.obstacles)]])

    n_pix = dx.size
    depth = np.zeros(n_pix, dtype=np.float64)
    ids = np.full(n_pix, ID_NONE, dtype=np.int64)

    ab = seg_b - seg_a
    aox = seg_a[:, 0] - x
    aoy = seg_a[:, 1] - y
    eps = 1e-12

    for lo in range(0, n_pix, _CHUNK):
        hi = min(lo + _CHUNK, n_pix)
        cdx, cdy, cdz = dx[lo:hi, None], dy[lo:hi, None], dz[lo:hi]
        best = np.full(hi - lo, np.inf)
        best_id = np.full(hi - lo, ID_NONE, dtype=np.int64)

        if len(seg_a):
            denom = cdx * ab[None, :, 1] - cdy * ab[None, :, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = (aox[None, :] * ab[None, :, 1] - aoy[None, :] * ab[None, :, 0]) / denom
                w = (aox[None, :] * cdy - aoy[None, :] * cdx) / denom
            z_hit = oz + s * cdz[:, None]
            ok = (
                (np.abs(denom) > eps)
                & (s > 1e-9)
                & (w >= 0.0)
                & (w <= 1.0)
                & (z_hit >= 0.0)
                & (z_hit <= seg_z[None, :])
            )
            s_valid = np.where(ok, s, np.inf)
            k = np.argmin(s_valid, axis=1)
            s_min = s_valid[np.arange(hi - lo), k]
            better = s_min < best
            best = np.where(better, s_min, best)
            best_id = np.where(better, seg_id[k], best_id)

        if len(cyls):
            cx = cyls[None, :, 0] - x
            cy = cyls[None, :, 1] - y
            a = cdx**2 + cdy**2
            b = -2.0 * (cx * cdx + cy * cdy)
            c = cx**2 + cy**2 - cyls[None, :, 2] ** 2
            disc = b * b - 4.0 * a * c
            with np.errstate(invalid="ignore", divide="ignore"):
                sq = np.sqrt(np.maximum(disc, 0.0))
                s_near = (-b - sq) / (2.0 * a)
                s_far = (-b + sq) / (2.0 * a)
            s_c = np.where(s_near > 1e-9, s_near, s_far)
            z_hit = oz + s_c * cdz[:, None]
            ok = (disc >= 0.0) & (s_c > 1e-9) & (z_hit >= 0.0) & (z_hit <= cyls[None, :, 3])
            s_valid = np.where(ok, s_c, np.inf)
            k = np.argmin(s_valid, axis=1)
            s_min = s_valid[np.arange(hi - lo), k]
            better = s_min < best
            best = np.where(better, s_min, best)
            best_id = np.where(better, cyl_id[k], best_id)

        with np.errstate(divide="ignore", invalid="ignore"):
            s_floor = np.where(cdz < -eps, oz / -cdz, np.inf)
            s_ceil = np.where(cdz > eps, (scene.ceiling_height - oz) / cdz, np.inf)
        better = s_floor < best
        best = np.where(better, s_floor, best)
        best_id = np.where(better, ID_FLOOR, best_id)
        better = s_ceil < best
        best = np.where(better, s_ceil, best)
        best_id = np.where(better, ID_CEILING, best_id)

        out_of_range = ~np.isfinite(best) | (best > cam.max_range)
        best = np.where(out_of_range, 0.0, best)
        best_id = np.where(out_of_range, ID_NONE, best_id)
        depth[lo:hi] = best
        ids[lo:hi] = best_id

    return depth.reshape(cam.height, cam.width), ids.reshape(cam.height, cam.width)


def render_depth(
    scene: Scene, pose, cam: CameraIntrinsics, t: float = 0.0
) -> DepthImage:
    """Planar depth along the optical axis; 0 where nothing returns in range."""
    pose = _as_pose(pose)
    depth, _ = _cast(scene, pose, cam, t)
    return DepthImage(depth.astype(np.float32))


def render_depth_ids(scene: Scene, pose, cam: CameraIntrinsics, t: float = 0.0):
    pose = _as_pose(pose)
    depth, ids = _cast(scene, pose, cam, t)
    return DepthImage(depth.astype(np.float32)), ids


def detections_from_ids(
    scene: Scene,
    ids: np.ndarray,
    category_map: Optional[CategoryMap] = None,
    min_pixels: int = MIN_DETECTION_PIXELS,
) -> List[Detection]:
    """Detections from a rendered surface-id buffer (occlusion already done)."""
    cmap = category_map if category_map is not None else default_category_map()
    dets: List[Detection] = []
    classes = [ob.class_name for ob in scene.obstacles]
    if scene.pedestrian is not None:
        classes.append(scene.pedestrian.class_name)
    for obj_id in np.unique(ids):
        if obj_id < 0:
            continue
        mask = ids == obj_id
        if int(mask.sum()) < min_pixels:
            continue
        ys, xs = np.nonzero(mask)
        name = classes[int(obj_id)]
        dets.append(
            Detection(
                class_name=name,
                category=categorize(name, cmap),
                bbox=(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1),
            )
        )
    dets.sort(key=lambda d: d.bbox)
    return dets


def ground_truth_detections(
    scene: Scene,
    pose,
    cam: CameraIntrinsics,
    t: float = 0.0,
    category_map: Optional[CategoryMap] = None,
    min_pixels: int = MIN_DETECTION_PIXELS,
) -> List[Detection]:
    """Tight boxes around occlusion-tested silhouettes of visible objects.

    Objects covering fewer than ``min_pixels`` are dropped, standing in for a
    detector's miss on small/far objects.
    """
    pose = _as_pose(pose)
    _, ids = _cast(scene, pose, cam, t)
    return detections_from_ids(scene, ids, category_map, min_pixels)


# flat-shaded class colors for the RGB-tag renders
_STRUCT_COLORS: Dict[int, Tuple[int, int, int]] = {
    ID_NONE: (0, 0, 0),
    ID_FLOOR: (78, 72, 66),
    ID_CEILING: (231, 231, 228),
    ID_WALL: (205, 203, 196),
}
_CLASS_COLORS: Dict[str, Tuple[int, int, int]] = {
    "person": (46, 64, 148),
    "pedestrian": (46, 64, 148),
    "chair": (151, 84, 47),
    "table": (128, 92, 51),
    "sofa": (140, 60, 60),
    "box": (172, 152, 104),
    "cabinet": (116, 88, 58),
    "foam_board": (222, 219, 206),
    "suitcase": (94, 48, 118),
    "trash_can": (70, 122, 74),
    "plant": (52, 138, 60),
    "pillar": (160, 160, 164),
}
_DEFAULT_COLOR = (128, 128, 128)

# class-mask intensities for the segmentation-tag renders; structural
# surfaces stay below the six risk-category levels
_STRUCT_GRAY = {ID_NONE: 0, ID_FLOOR: 12, ID_CEILING: 24, ID_WALL: 36}


def render_flat_rgb(scene: Scene, pose, cam: CameraIntrinsics, t: float = 0.0) -> np.ndarray:
    """Flat-shaded class-color render, (h, w, 3) uint8."""
    pose = _as_pose(pose)
    _, ids = _cast(scene, pose, cam, t)
    out = np.zeros((cam.height, cam.width, 3), dtype=np.uint8)
    for obj_id in np.unique(ids):
        if obj_id < 0:
            color = _STRUCT_COLORS[int(obj_id)]
        else:
            color = _CLASS_COLORS.get(_object_class(scene, int(obj_id)), _DEFAULT_COLOR)
        out[ids == obj_id] = color
    return out


def render_class_gray(
    scene: Scene, pose, cam: CameraIntrinsics, t: float = 0.0, category_map: Optional[CategoryMap] = None
) -> GrayImage:
    """Ground-truth class mask: risk-category intensity per obstacle pixel."""
    pose = _as_pose(pose)
    cmap = category_map if category_map is not None else default_category_map()
    _, ids = _cast(scene, pose, cam, t)
    out = np.zeros((cam.height, cam.width), dtype=np.uint8)
    for obj_id in np.unique(ids):
        if obj_id < 0:
            value = _STRUCT_GRAY[int(obj_id)]
        else:
            name = _object_class(scene, int(obj_id))
            value = cmap.intensity(categorize(name, cmap))
        out[ids == obj_id] = value
    return GrayImage(out)


def _object_class(scene: Scene, obj_id: int) -> str:
    if obj_id < len(scene.obstacles):
        return scene.obstacles[obj_id].class_name
    return scene.pedestrian.class_name


def _as_pose(pose) -> Tuple[float, float, float]:
    if hasattr(pose, "pose"):
        pose = pose.pose
    x, y, heading = pose
    return (float(x), float(y), float(heading))
