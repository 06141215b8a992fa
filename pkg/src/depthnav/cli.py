"""Batch command-line entry points.

Subcommands: render (expert episodes to a manifest), augment (materialize a
representation dataset), train, eval, featmap.  Every subcommand takes a
--seed and is byte-reproducible for a given seed regardless of worker count
(DEPTHNAV_WORKERS).  The effective configuration is printed at startup and a
machine-readable status line is the last line on stdout.  Exit codes:
0 success, 1 runtime failure, 2 usage/validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import dataset as ds
from .featmap import extract, recolor
from .images import ReprKind, depth_to_gray
from .metrics import EvalLog, format_report, summarize
from .net.checkpoint import load_checkpoint, save_checkpoint
from .net.model import LossParams, NetworkSpec
from .net.train import AdamState, TrainConfig, TrainingSet, train
from .noise import NoiseParams
from .rng import RngStream
from .semantic import default_category_map
from .sim.evaluate import EvalConfig, ExpertController, Observation, evaluate
from .sim.episodes import EpisodeConfig, generate_episode
from .sim.expert import Action
from .sim.render import CameraIntrinsics
from .sim.scene import DirectionCommand, load_scene


class UsageError(Exception):
    """Validation failure that should exit with code 2."""


def _status(out: dict) -> None:
    print(json.dumps({"status": "ok", **out}, sort_keys=True))


def _print_config(name: str, cfg: dict) -> None:
    print(f"config[{name}]: {json.dumps(cfg, sort_keys=True)}")


def _load_noise(args) -> NoiseParams:
    if getattr(args, "noise_config", None):
        with open(args.noise_config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
        return NoiseParams.from_dict(base)
    return NoiseParams()


def _camera(args) -> CameraIntrinsics:
    return CameraIntrinsics(width=args.width, height=args.height)


# ---------------------------------------------------------------------------
# render


def cmd_render(args) -> None:
    if not 0.0 <= args.recovery_fraction <= 1.0:
        raise UsageError(f"--recovery-fraction must be in [0, 1], got {args.recovery_fraction}")
    if args.episodes < 0:
        raise UsageError("--episodes must be >= 0")
    try:
        scene = load_scene(args.scene)
    except (FileNotFoundError, ValueError) as e:
        raise UsageError(f"bad scene: {e}") from e
    cam = _camera(args)
    cfg = EpisodeConfig(
        camera=cam,
        max_steps=args.max_steps,
        recovery_fraction=args.recovery_fraction,
        min_det_pixels=args.min_det_pixels,
    )
    _print_config(
        "render",
        {
            "scene": scene.name,
            "episodes": args.episodes,
            "seed": args.seed,
            "camera": cam.to_dict(),
            "recovery_fraction": args.recovery_fraction,
            "max_steps": args.max_steps,
        },
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    root = RngStream(args.seed)
    records = []
    for ep in range(args.episodes):
        episode = generate_episode(scene, cfg, root.child(ep))
        ep_dir = out / f"ep{ep:04d}"
        ep_dir.mkdir(exist_ok=True)
        for i, s in enumerate(episode.samples):
            rel = f"ep{ep:04d}/d{i:04d}.pgm"
            ds.write_depth_pgm(s.depth, out / rel)
            records.append(
                ds.EpisodeRecord(
                    episode=ep,
                    step=i,
                    t=s.t,
                    depth_path=rel,
                    pose=(s.state.x, s.state.y, s.state.heading),
                    command=s.command.value,
                    action=s.action.normalized(),
                    detections=s.detections,
                    ped_pos=s.ped_pos,
                    truncated=episode.truncated,
                )
            )
    header = ds.ManifestHeader(scene=scene.name, camera=cam.to_dict(), seed=args.seed, dt=cfg.dt)
    manifest = ds.write_manifest(header, records, out / "manifest.jsonl")
    _status({"manifest": str(manifest), "episodes": args.episodes, "records": len(records)})


# ---------------------------------------------------------------------------
# augment


def cmd_augment(args) -> None:
    try:
        kind = ReprKind.parse(args.kind)
    except ValueError as e:
        raise UsageError(str(e)) from e
    noise = _load_noise(args)
    scene = load_scene(args.scene) if args.scene else None
    if kind in (ReprKind.RGB, ReprKind.RGB_NOISE, ReprKind.SEG_FC, ReprKind.SEG_PSP) and scene is None:
        header, _ = ds.read_manifest(args.manifest)
        scene = load_scene(header.scene)
    _print_config(
        "augment",
        {"manifest": str(args.manifest), "kind": kind.value, "seed": args.seed, "noise": noise.to_dict()},
    )
    samples = ds.materialize(args.manifest, kind, noise, seed=args.seed, scene=scene)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    view_records = []
    for s in samples:
        rec = s.record
        stem = f"ep{rec.episode:04d}_s{rec.step:04d}"
        entry = {"index": s.index, "episode": rec.episode, "step": rec.step}
        primary = s.bundle.primary_image
        if kind.uses_depth:
            p = out / f"{stem}_depth.pgm"
            ds.write_depth_pgm(primary, p)
        else:
            p = out / f"{stem}_gray.pgm"
            ds.write_gray_pgm(primary, p)
        entry["primary"] = p.name
        if s.bundle.semantic_image is not None:
            sp = out / f"{stem}_det.pgm"
            ds.write_gray_pgm(s.bundle.semantic_image, sp)
            entry["semantic"] = sp.name
        view_records.append(entry)
    view = {
        "format": "depthnav-view",
        "version": 1,
        "kind": kind.value,
        "seed": args.seed,
        "source_manifest": str(Path(args.manifest).resolve()),
        "records": view_records,
    }
    view_path = out / "view.json"
    view_path.write_text(json.dumps(view, sort_keys=True, indent=1) + "\n", "utf-8")
    _status({"view": str(view_path), "records": len(view_records), "kind": kind.value})


# ---------------------------------------------------------------------------
# train


def _spec_for(arch: str, kind: ReprKind, width: int, height: int) -> NetworkSpec:
    if arch == "dual":
        if not kind.needs_semantic:
            raise UsageError(f"--arch dual requires a two-image kind, got {kind.value}")
        return NetworkSpec.dual(input_width=width, input_height=height)
    if kind.needs_semantic:
        raise UsageError(f"--arch single cannot consume two-image kind {kind.value}")
    return NetworkSpec.single(input_width=width, input_height=height)


def build_training_set(samples, spec: NetworkSpec) -> TrainingSet:
    from .net.model import bundle_to_arrays
    from .sim.scene import DirectionCommand

    x1s, x2s, cmds, tgts = [], [], [], []
    for s in samples:
        x1, x2 = bundle_to_arrays(s.bundle, spec)
        x1s.append(x1)
        if x2 is not None:
            x2s.append(x2)
        cmds.append(DirectionCommand.parse(s.record.command).one_hot())
        tgts.append(np.asarray(s.record.action, dtype=np.float32))
    return TrainingSet(
        x1=np.stack(x1s),
        cmd=np.stack(cmds),
        targets=np.stack(tgts),
        x2=np.stack(x2s) if x2s else None,
    )


def cmd_train(args) -> None:
    try:
        kind = ReprKind.parse(args.kind)
    except ValueError as e:
        raise UsageError(str(e)) from e
    noise = _load_noise(args)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        loss=LossParams(lam=args.loss_lambda, gamma=args.loss_gamma),
    )

    params = adam = None
    start_epoch = 0
    if args.resume:
        params, spec, meta, adam = load_checkpoint(args.resume)
        start_epoch = meta["epoch"]
        seed = meta["seed"]
        if args.seed is not None and args.seed != seed:
            raise UsageError(f"--seed {args.seed} conflicts with checkpoint seed {seed}")
    else:
        seed = args.seed if args.seed is not None else 0
        spec = _spec_for(args.arch, kind, args.input_width, args.input_height)

    _print_config(
        "train",
        {
            "dataset": str(args.dataset),
            "kind": kind.value,
            "arch": "dual" if spec.dual_encoder else "single",
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "lr": cfg.lr,
            "seed": seed,
            "start_epoch": start_epoch,
        },
    )
    scene = load_scene(args.scene) if args.scene else None
    samples = ds.materialize(args.dataset, kind, noise, seed=seed, scene=scene)
    if not samples:
        raise UsageError("dataset is empty")
    data = build_training_set(samples, spec)

    log_path = Path(args.out_checkpoint).with_suffix(".trainlog.jsonl")
    log_lines = []

    def log_cb(entry):
        line = {k: entry[k] for k in ("epoch", "mean_loss", "mean_pred_loss", "batches")}
        log_lines.append(json.dumps(line, sort_keys=True))
        print(f"epoch {entry['epoch']}: loss={entry['mean_loss']:.6f} "
              f"pred={entry['mean_pred_loss']:.6f} ({entry['seconds']:.1f}s)", file=sys.stderr)

    params, adam, _ = train(
        data, spec, cfg, RngStream(seed), params=params, adam=adam,
        start_epoch=start_epoch, log_cb=log_cb,
    )
    out = Path(args.out_checkpoint)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, params, spec, seed=seed, epoch=cfg.epochs, adam=adam,
                    extra={"kind": kind.value})
    mode = "a" if args.resume else "w"
    with open(log_path, mode, encoding="utf-8") as fh:
        for ln in log_lines:
            fh.write(ln + "\n")
    _status({"checkpoint": str(out), "epochs": cfg.epochs, "records": len(data), "log": str(log_path)})


# ---------------------------------------------------------------------------
# eval


class NetworkController:
    """Wraps a trained network as a closed-loop controller."""

    def __init__(self, params, spec: NetworkSpec):
        self.params = params
        self.spec = spec

    def act(self, obs: Observation) -> Action:
        from .net.model import predict

        v, w = predict(self.params, self.spec, obs.bundle, obs.command.one_hot())
        return Action.from_normalized(v, w)


def cmd_eval(args) -> None:
    try:
        scene = load_scene(args.scene)
    except (FileNotFoundError, ValueError) as e:
        raise UsageError(f"bad scene: {e}") from e
    if args.trials <= 0:
        raise UsageError("--trials must be positive")
    noise = _load_noise(args)
    cam = _camera(args)

    if args.policy == "expert":
        controller = ExpertController()
        kind = None
        meta_kind = "expert"
    else:
        if not args.checkpoint:
            raise UsageError("--checkpoint required unless --policy expert")
        params, spec, meta, _ = load_checkpoint(args.checkpoint)
        controller = NetworkController(params, spec)
        kind = ReprKind.parse(args.kind or meta["extra"].get("kind", "depth"))
        meta_kind = kind.value

    routes = list(scene.routes)
    if args.route != "all":
        sel = [r for r in routes if r.name == args.route]
        if not sel:
            raise UsageError(f"route {args.route!r} not in scene (have: {[r.name for r in routes]})")
        routes = sel
    if not routes:
        raise UsageError("scene defines no routes")

    noisy = {"auto": None, "on": True, "off": False}[args.noisy_obs]
    cfg = EvalConfig(camera=cam, kind=kind, noise=noise, noisy_obs=noisy, max_time=args.max_time,
                     min_det_pixels=args.min_det_pixels)
    _print_config(
        "eval",
        {"scene": scene.name, "routes": [r.name for r in routes], "trials": args.trials,
         "seed": args.seed, "policy": meta_kind, "noisy_obs": args.noisy_obs},
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    root = RngStream(args.seed)
    logs = []
    i = 0
    for trial in range(args.trials):
        for route in routes:
            log = evaluate(controller, scene, route, cfg, root.child(i))
            log = EvalLog(route=log.route, steps=log.steps, completed=log.completed,
                          duration=log.duration,
                          meta={**log.meta, "trial": trial, "policy": meta_kind})
            path = out / f"eval_{route.name}_t{trial:02d}.jsonl"
            log.save(path)
            logs.append(log)
            i += 1
    report = summarize(logs)
    (out / "summary.json").write_text(json.dumps(report, sort_keys=True, indent=1) + "\n", "utf-8")
    print(format_report(report))
    _status({
        "logs": len(logs),
        "mean_interventions": report["mean_interventions"],
        "summary": str(out / "summary.json"),
    })


# ---------------------------------------------------------------------------
# featmap


def cmd_featmap(args) -> None:
    params, spec, meta, _ = load_checkpoint(args.checkpoint)
    kind = ReprKind.parse(args.kind or meta["extra"].get("kind", "depth"))
    noise = _load_noise(args)
    scene = load_scene(args.scene) if args.scene else None
    _print_config(
        "featmap",
        {"checkpoint": str(args.checkpoint), "manifest": str(args.manifest),
         "layer": args.layer, "encoder": args.encoder, "palette": args.palette,
         "seed": args.seed},
    )
    samples = ds.materialize(args.manifest, kind, noise, seed=args.seed, scene=scene)
    if args.max_records is not None:
        samples = samples[: args.max_records]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    for s in samples:
        cmd = DirectionCommand.parse(s.record.command).one_hot()
        fmap = extract(params, spec, s.bundle, cmd, layer_index=args.layer, encoder=args.encoder)
        rgb = recolor(fmap, args.palette)
        ds.write_png_rgb(rgb, out / f"featmap_ep{s.record.episode:04d}_s{s.record.step:04d}.png")
        n += 1
    _status({"images": n, "out": str(out)})


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="depthnav", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--width", type=int, default=640, help="camera width in pixels")
        sp.add_argument("--height", type=int, default=480, help="camera height in pixels")
        sp.add_argument("--min-det-pixels", type=int, default=50)
        sp.add_argument("--noise-config", type=str, default=None,
                        help="JSON file with noise-model parameters")

    sp = sub.add_parser("render", help="generate expert episodes and a manifest")
    sp.add_argument("--scene", required=True)
    sp.add_argument("--episodes", type=int, required=True)
    sp.add_argument("--recovery-fraction", type=float, default=0.2)
    sp.add_argument("--max-steps", type=int, default=120)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("augment", help="materialize a representation dataset")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--kind", required=True)
    sp.add_argument("--scene", default=None, help="scene for re-rendered kinds (default: from manifest)")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("train", help="train a policy on a manifest")
    sp.add_argument("--dataset", required=True, help="episode manifest path")
    sp.add_argument("--kind", default="depth")
    sp.add_argument("--arch", choices=("single", "dual"), default="single")
    sp.add_argument("--epochs", type=int, default=400)
    sp.add_argument("--batch-size", type=int, default=40)
    sp.add_argument("--lr", type=float, default=1e-4)
    sp.add_argument("--loss-lambda", type=float, default=1.0)
    sp.add_argument("--loss-gamma", type=float, default=1e-7)
    sp.add_argument("--input-width", type=int, default=256)
    sp.add_argument("--input-height", type=int, default=192)
    sp.add_argument("--scene", default=None)
    sp.add_argument("--resume", default=None, help="checkpoint to continue from")
    sp.add_argument("--out-checkpoint", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--noise-config", type=str, default=None)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="closed-loop evaluation over scene routes")
    sp.add_argument("--checkpoint", default=None)
    sp.add_argument("--policy", choices=("network", "expert"), default="network")
    sp.add_argument("--kind", default=None)
    sp.add_argument("--scene", required=True)
    sp.add_argument("--route", default="all")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--max-time", type=float, default=60.0)
    sp.add_argument("--noisy-obs", choices=("auto", "on", "off"), default="auto")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("featmap", help="feature-map images from a checkpoint")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--kind", default=None)
    sp.add_argument("--layer", type=int, default=None)
    sp.add_argument("--encoder", type=int, default=0)
    sp.add_argument("--palette", default="viridis")
    sp.add_argument("--scene", default=None)
    sp.add_argument("--max-records", type=int, default=None)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_featmap)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
        return 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure
        print(f"failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
