"""Persistence: image codecs, episode manifests, representation materialization.

Depth images go to disk as binary 16-bit PGM in millimeters (big-endian
sample order per the PGM spec), gray images as 8-bit PGM.  An episode
manifest is line-delimited JSON: one header line, then one record per
timestep.  All eight observation kinds are derivable from one manifest
without re-simulating, so every compared representation comes from the same
expert run.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .images import Detection, DepthImage, GrayImage, ReprBundle, ReprKind, RiskCategory, resize_nearest
from .noise import NoiseParams, augment, salt_pepper
from .rng import RngStream
from .semantic import CategoryMap, default_category_map, rasterize

MANIFEST_FORMAT = "depthnav-manifest"
MANIFEST_VERSION = 1

MM_PER_M = 1000.0
MAX_PGM16_DEPTH = 65.535  # meters representable in 16-bit millimeters


class PgmError(ValueError):
    """Malformed PGM file; message carries the byte offset of the problem."""


# ---------------------------------------------------------------------------
# PGM codecs


def _encode_pgm(samples: np.ndarray, maxval: int) -> bytes:
    h, w = samples.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    if maxval > 255:
        body = samples.astype(">u2").tobytes()
    else:
        body = samples.astype(np.uint8).tobytes()
    return header + body


def write_depth_pgm(img: DepthImage, path) -> Path:
    """Write depth as 16-bit PGM with millimeter quantization (round half up)."""
    if float(img.data.max(initial=0.0)) > MAX_PGM16_DEPTH:
        raise ValueError(f"depth exceeds {MAX_PGM16_DEPTH} m, not representable in 16-bit mm")
    mm = np.floor(img.data.astype(np.float64) * MM_PER_M + 0.5).astype(np.uint16)
    path = Path(path)
    path.write_bytes(_encode_pgm(mm, 65535))
    return path


def write_gray_pgm(img: GrayImage, path) -> Path:
    path = Path(path)
    path.write_bytes(_encode_pgm(img.data, 255))
    return path


class _PgmScanner:
    """Tracks the byte offset while pulling whitespace/comment-aware tokens."""

    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def fail(self, msg: str):
        raise PgmError(f"{msg} at byte {self.pos}")

    def token(self) -> bytes:
        blob, n = self.blob, len(self.blob)
        while self.pos < n:
            c = blob[self.pos : self.pos + 1]
            if c == b"#":
                while self.pos < n and blob[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif c.isspace():
                self.pos += 1
            else:
                break
        if self.pos >= n:
            self.fail("unexpected end of header")
        start = self.pos
        while self.pos < n and not blob[self.pos : self.pos + 1].isspace():
            self.pos += 1
        return blob[start : self.pos]

    def int_token(self, what: str) -> int:
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            self.fail(f"expected integer {what}, got {tok!r}")


def _read_pgm(path) -> Tuple[np.ndarray, int]:
    blob = Path(path).read_bytes()
    scan = _PgmScanner(blob)
    magic = scan.token()
    if magic != b"P5":
        scan.fail(f"not a binary PGM (magic {magic!r})")
    w = scan.int_token("width")
    h = scan.int_token("height")
    maxval = scan.int_token("maxval")
    if w <= 0 or h <= 0:
        scan.fail(f"bad dimensions {w}x{h}")
    if not 0 < maxval < 65536:
        scan.fail(f"bad maxval {maxval}")
    # exactly one whitespace byte separates header from samples
    scan.pos += 1
    if scan.pos > len(blob):
        scan.fail("missing sample data")
    itemsize = 2 if maxval > 255 else 1
    need = w * h * itemsize
    body = blob[scan.pos : scan.pos + need]
    if len(body) != need:
        raise PgmError(f"truncated sample data ({len(body)} of {need} bytes) at byte {scan.pos}")
    dtype = ">u2" if itemsize == 2 else np.uint8
    samples = np.frombuffer(body, dtype=dtype).reshape(h, w)
    return samples, maxval


def read_depth_pgm(path) -> DepthImage:
    """Inverse of write_depth_pgm; sample 0 maps back to the 0.0 sentinel."""
    samples, maxval = _read_pgm(path)
    if maxval <= 255:
        raise PgmError(f"{path}: expected 16-bit depth PGM, got maxval {maxval} at byte 0")
    return DepthImage(samples.astype(np.float32) / MM_PER_M)


def read_gray_pgm(path) -> GrayImage:
    samples, maxval = _read_pgm(path)
    if maxval > 255:
        raise PgmError(f"{path}: expected 8-bit PGM, got maxval {maxval} at byte 0")
    return GrayImage(samples.astype(np.uint8))


def write_png_rgb(rgb: np.ndarray, path) -> Path:
    """8-bit RGB PNG writer (rows, cols, 3)."""
    from PIL import Image

    arr = np.asarray(rgb, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB array, got {arr.shape}")
    path = Path(path)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")
    return path


# ---------------------------------------------------------------------------
# Episode manifest


@dataclass(frozen=True)
class EpisodeRecord:
    """One timestep of expert data as stored in the manifest."""

    episode: int
    step: int
    t: float
    depth_path: str  # relative to the manifest directory
    pose: Tuple[float, float, float]  # x, y, heading
    command: str
    action: Tuple[float, float]  # normalized (v, omega)
    detections: Tuple[Detection, ...] = ()
    ped_pos: Optional[Tuple[float, float]] = None
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "episode": self.episode,
            "step": self.step,
            "t": self.t,
            "depth": self.depth_path,
            "pose": list(self.pose),
            "command": self.command,
            "action": list(self.action),
            "detections": [
                {"class_name": d.class_name, "level": d.category.level, "bbox": list(d.bbox)}
                for d in self.detections
            ],
            "ped_pos": list(self.ped_pos) if self.ped_pos is not None else None,
            "truncated": self.truncated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeRecord":
        dets = tuple(
            Detection(e["class_name"], RiskCategory(e["level"]), tuple(e["bbox"]))
            for e in d.get("detections", [])
        )
        ped = d.get("ped_pos")
        return cls(
            episode=d["episode"],
            step=d["step"],
            t=d["t"],
            depth_path=d["depth"],
            pose=tuple(d["pose"]),
            command=d["command"],
            action=tuple(d["action"]),
            detections=dets,
            ped_pos=tuple(ped) if ped is not None else None,
            truncated=d.get("truncated", False),
        )


@dataclass(frozen=True)
class ManifestHeader:
    scene: str
    camera: dict
    seed: int
    dt: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "scene": self.scene,
            "camera": self.camera,
            "seed": self.seed,
            "dt": self.dt,
        }
        d.update(self.extra)
        return d


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_manifest(header: ManifestHeader, records: Sequence[EpisodeRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump(header.to_dict()) + "\n")
        for rec in records:
            fh.write(_dump(rec.to_dict()) + "\n")
    return path


def read_manifest(path) -> Tuple[ManifestHeader, List[EpisodeRecord]]:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty manifest")
    head = json.loads(lines[0])
    if head.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a {MANIFEST_FORMAT} file")
    if head.get("version") != MANIFEST_VERSION:
        raise ValueError(
            f"{path}: manifest version {head.get('version')} != supported {MANIFEST_VERSION}"
        )
    known = {"format", "version", "scene", "camera", "seed", "dt"}
    header = ManifestHeader(
        scene=head["scene"],
        camera=head["camera"],
        seed=head["seed"],
        dt=head["dt"],
        extra={k: v for k, v in head.items() if k not in known},
    )
    records = [EpisodeRecord.from_dict(json.loads(ln)) for ln in lines[1:]]
    return header, records


# ---------------------------------------------------------------------------
# Representation materialization


@dataclass(frozen=True)
class MaterializedSample:
    """One training/eval observation derived from a manifest record."""

    index: int
    record: EpisodeRecord
    bundle: ReprBundle


def _luma(rgb: np.ndarray) -> GrayImage:
    # Rec. 601 luma; flat-shaded class colors stay distinguishable in gray.
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return GrayImage(np.floor(y + 0.5).astype(np.uint8))


def _rgb_noise(gray: GrayImage, rng: RngStream) -> GrayImage:
    """Simple intensity noise for the RGB_NOISE tag: additive Gaussian plus
    salt-and-pepper.  A stand-in, not a camera model."""
    gen = rng.generator()
    data = gray.data.astype(np.float64)
    data = data + gen.normal(0.0, 6.0, size=data.shape)
    hit = gen.random(size=data.shape) < 0.005
    salt = gen.random(size=data.shape) < 0.5
    data[hit & salt] = 255.0
    data[hit & ~salt] = 0.0
    return GrayImage(np.clip(np.floor(data + 0.5), 0, 255).astype(np.uint8))


def worker_count() -> int:
    """Worker count for record-parallel stages (DEPTHNAV_WORKERS, default 1)."""
    raw = os.environ.get("DEPTHNAV_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"DEPTHNAV_WORKERS must be an integer, got {raw!r}") from None
    return max(1, n)


def materialize(
    manifest_path,
    kind: ReprKind,
    noise: Optional[NoiseParams] = None,
    seed: int = 0,
    scene=None,
    size: Optional[Tuple[int, int]] = None,
    category_map: Optional[CategoryMap] = None,
    workers: Optional[int] = None,
) -> List[MaterializedSample]:
    """Build per-record observation bundles of the requested kind.

    Depth comes from the stored PGMs; detection images are rasterized from the
    logged detections; RGB/seg kinds are re-rendered from the logged poses
    (``scene`` required for those).  Noise augmentation is keyed on
    (seed, record index), so results do not depend on worker count.
    """
    from .sim.render import CameraIntrinsics, render_class_gray, render_flat_rgb

    header, records = read_manifest(manifest_path)
    base_dir = Path(manifest_path).parent
    noise = noise if noise is not None else NoiseParams()
    cmap = category_map if category_map is not None else default_category_map()
    root = RngStream(seed)

    if kind in (ReprKind.RGB, ReprKind.RGB_NOISE, ReprKind.SEG_FC, ReprKind.SEG_PSP) and scene is None:
        raise ValueError(f"kind {kind.value} re-renders from poses and needs the scene")
    cam = CameraIntrinsics.from_dict(header.camera) if scene is not None else None

    def build(idx_rec) -> MaterializedSample:
        idx, rec = idx_rec
        rng = root.child(idx)
        if kind.uses_depth:
            depth_file = base_dir / rec.depth_path
            if not depth_file.exists():
                raise FileNotFoundError(
                    f"record episode={rec.episode} step={rec.step}: missing depth image {depth_file}"
                )
            depth = read_depth_pgm(depth_file)
            if kind in (ReprKind.DEPTH_NOISE, ReprKind.DEPTH_NOISE_DET):
                depth = augment(depth, noise, rng)
            primary = depth
            semantic = None
            if kind.needs_semantic:
                semantic = rasterize(rec.detections, depth.width, depth.height, cmap)
        elif kind in (ReprKind.RGB, ReprKind.RGB_NOISE):
            rgb = render_flat_rgb(scene, rec.pose, cam, rec.t)
            primary = _luma(rgb)
            if kind is ReprKind.RGB_NOISE:
                primary = _rgb_noise(primary, rng)
            semantic = None
        else:  # SEG_FC / SEG_PSP: ground-truth class masks substitute
            primary = render_class_gray(scene, rec.pose, cam, rec.t)
            semantic = None
        if size is not None:
            w, h = size
            primary = resize_nearest(primary, w, h)
            if semantic is not None:
                semantic = resize_nearest(semantic, w, h)
        return MaterializedSample(idx, rec, ReprBundle(kind, primary, semantic))

    jobs = list(enumerate(records))
    n_workers = workers if workers is not None else worker_count()
    if n_workers <= 1 or len(jobs) < 2:
        return [build(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(build, jobs))
