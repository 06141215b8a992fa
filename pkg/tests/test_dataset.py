import json
import time
from pathlib import Path

import numpy as np
import pytest

from depthnav import dataset as ds
from depthnav.images import Detection, DepthImage, GrayImage, ReprKind, RiskCategory
from depthnav.noise import NoiseParams
from depthnav.rng import RngStream
from depthnav.sim import CameraIntrinsics, EpisodeConfig, generate_episode, load_scene


class TestPgm:
    def test_round_trip_within_half_mm(self, tmp_path):
        rng = np.random.default_rng(0)
        img = DepthImage(rng.uniform(0, 8, (24, 32)).astype(np.float32))
        path = ds.write_depth_pgm(img, tmp_path / "d.pgm")
        back = ds.read_depth_pgm(path)
        assert np.abs(back.data - img.data).max() <= 0.0005 + 1e-9

    def test_sentinel_and_mm_quantization(self, tmp_path):
        img = DepthImage(np.array([[0.0, 1.234]], np.float32))
        path = ds.write_depth_pgm(img, tmp_path / "d.pgm")
        blob = path.read_bytes()
        body = blob.split(b"65535\n", 1)[1]
        samples = np.frombuffer(body, dtype=">u2")
        assert samples.tolist() == [0, 1234]
        back = ds.read_depth_pgm(path)
        assert back.data[0, 0] == 0.0
        assert abs(back.data[0, 1] - 1.234) < 1e-6

    def test_big_endian_sample_order(self, tmp_path):
        img = DepthImage(np.array([[0.258]], np.float32))  # 258 mm = 0x0102
        blob = ds.write_depth_pgm(img, tmp_path / "d.pgm").read_bytes()
        assert blob.endswith(b"\x01\x02")

    def test_depth_beyond_16bit_mm_rejected(self, tmp_path):
        img = DepthImage(np.array([[66.0]], np.float32))
        with pytest.raises(ValueError):
            ds.write_depth_pgm(img, tmp_path / "d.pgm")

    def test_gray_round_trip(self, tmp_path):
        img = GrayImage(np.arange(64, dtype=np.uint8).reshape(8, 8))
        back = ds.read_gray_pgm(ds.write_gray_pgm(img, tmp_path / "g.pgm"))
        assert np.array_equal(back.data, img.data)

    def test_malformed_reports_byte_offset(self, tmp_path):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"P2\n2 2\n255\n....")
        with pytest.raises(ds.PgmError, match="byte"):
            ds.read_gray_pgm(bad)
        trunc = tmp_path / "trunc.pgm"
        trunc.write_bytes(b"P5\n4 4\n65535\n\x00\x01")
        with pytest.raises(ds.PgmError, match="byte 14"):
            ds.read_depth_pgm(trunc)

    def test_comments_in_header(self, tmp_path):
        p = tmp_path / "c.pgm"
        p.write_bytes(b"P5\n# a comment\n2 1\n255\nAB")
        img = ds.read_gray_pgm(p)
        assert img.data.tolist() == [[65, 66]]


def _records(n=3):
    dets = (
        Detection("person", RiskCategory(6), (1, 2, 5, 9)),
        Detection("chair", RiskCategory(4), (0, 0, 3, 3)),
    )
    return [
        ds.EpisodeRecord(
            episode=0,
            step=i,
            t=0.1 * i,
            depth_path=f"ep0000/d{i:04d}.pgm",
            pose=(0.5 * i, -0.25, 0.1),
            command="forward",
            action=(0.75, -0.2),
            detections=dets if i % 2 == 0 else (),
            ped_pos=(3.0, 1.0) if i == 1 else None,
            truncated=False,
        )
        for i in range(n)
    ]


class TestManifest:
    def test_round_trip_equality(self, tmp_path):
        header = ds.ManifestHeader(
            scene="train_corridor", camera=CameraIntrinsics(32, 24).to_dict(), seed=9, dt=0.1
        )
        records = _records()
        path = ds.write_manifest(header, records, tmp_path / "m.jsonl")
        h2, r2 = ds.read_manifest(path)
        assert h2.scene == header.scene and h2.seed == 9 and h2.dt == 0.1
        assert r2 == records

    def test_empty_manifest(self, tmp_path):
        header = ds.ManifestHeader(scene="s", camera={}, seed=0, dt=0.1)
        path = ds.write_manifest(header, [], tmp_path / "m.jsonl")
        h2, r2 = ds.read_manifest(path)
        assert r2 == [] and h2.scene == "s"

    def test_version_mismatch_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        head = {"format": ds.MANIFEST_FORMAT, "version": 99, "scene": "s", "camera": {}, "seed": 0, "dt": 0.1}
        path.write_text(json.dumps(head) + "\n")
        with pytest.raises(ValueError, match="version"):
            ds.read_manifest(path)

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"format": "other", "version": 1}\n')
        with pytest.raises(ValueError):
            ds.read_manifest(path)

    def test_large_manifest_reads_fast(self, tmp_path):
        header = ds.ManifestHeader(scene="s", camera={}, seed=0, dt=0.1)
        rec = _records(1)[0]
        records = [
            ds.EpisodeRecord(
                episode=i // 120, step=i % 120, t=0.1 * (i % 120), depth_path=rec.depth_path,
                pose=rec.pose, command=rec.command, action=rec.action,
            )
            for i in range(36_000)
        ]
        path = ds.write_manifest(header, records, tmp_path / "big.jsonl")
        t0 = time.perf_counter()
        _, back = ds.read_manifest(path)
        elapsed = time.perf_counter() - t0
        assert len(back) == 36_000
        assert elapsed < 2.0


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    """A small rendered episode set with a manifest, shared across tests."""
    out = tmp_path_factory.mktemp("tinyrun")
    scene = load_scene("train_corridor")
    cam = CameraIntrinsics(32, 24)
    cfg = EpisodeConfig(camera=cam, max_steps=6, recovery_fraction=0.0, min_det_pixels=4)
    records = []
    for ep in range(2):
        episode = generate_episode(scene, cfg, RngStream(100).child(ep))
        (out / f"ep{ep:04d}").mkdir()
        for i, s in enumerate(episode.samples):
            rel = f"ep{ep:04d}/d{i:04d}.pgm"
            ds.write_depth_pgm(s.depth, out / rel)
            records.append(
                ds.EpisodeRecord(
                    episode=ep, step=i, t=s.t, depth_path=rel,
                    pose=(s.state.x, s.state.y, s.state.heading),
                    command=s.command.value, action=s.action.normalized(),
                    detections=s.detections, ped_pos=s.ped_pos,
                )
            )
    header = ds.ManifestHeader(scene=scene.name, camera=cam.to_dict(), seed=100, dt=0.1)
    manifest = ds.write_manifest(header, records, out / "manifest.jsonl")
    return manifest


class TestMaterialize:
    def test_depth_matches_raw_and_noise_differs(self, tiny_run):
        clean = ds.materialize(tiny_run, ReprKind.DEPTH, seed=5)
        noisy = ds.materialize(tiny_run, ReprKind.DEPTH_NOISE, NoiseParams(), seed=5)
        raw = ds.read_depth_pgm(tiny_run.parent / clean[0].record.depth_path)
        assert np.array_equal(clean[0].bundle.primary_image.data, raw.data)
        assert any(
            not np.array_equal(c.bundle.primary_image.data, n.bundle.primary_image.data)
            for c, n in zip(clean, noisy)
        )

    def test_dual_bundle_dims_and_kind(self, tiny_run):
        out = ds.materialize(tiny_run, ReprKind.DEPTH_NOISE_DET, NoiseParams(), seed=5)
        for s in out:
            assert s.bundle.kind is ReprKind.DEPTH_NOISE_DET
            assert s.bundle.semantic_image is not None
            assert s.bundle.semantic_image.data.shape == s.bundle.primary_image.data.shape

    def test_same_seed_identical_bytes(self, tiny_run):
        a = ds.materialize(tiny_run, ReprKind.DEPTH_NOISE, seed=5)
        b = ds.materialize(tiny_run, ReprKind.DEPTH_NOISE, seed=5)
        for x, y in zip(a, b):
            assert np.array_equal(x.bundle.primary_image.data, y.bundle.primary_image.data)

    def test_worker_count_does_not_change_results(self, tiny_run):
        a = ds.materialize(tiny_run, ReprKind.DEPTH_NOISE, seed=5, workers=1)
        b = ds.materialize(tiny_run, ReprKind.DEPTH_NOISE, seed=5, workers=4)
        for x, y in zip(a, b):
            assert np.array_equal(x.bundle.primary_image.data, y.bundle.primary_image.data)

    def test_rendered_kinds_need_scene(self, tiny_run):
        with pytest.raises(ValueError, match="scene"):
            ds.materialize(tiny_run, ReprKind.RGB, seed=5)
        scene = load_scene("train_corridor")
        out = ds.materialize(tiny_run, ReprKind.RGB, seed=5, scene=scene)
        assert out[0].bundle.primary_image.data.shape == (24, 32)
        seg = ds.materialize(tiny_run, ReprKind.SEG_PSP, seed=5, scene=scene)
        assert seg[0].bundle.kind is ReprKind.SEG_PSP

    def test_seg_tags_share_ground_truth_masks(self, tiny_run):
        scene = load_scene("train_corridor")
        a = ds.materialize(tiny_run, ReprKind.SEG_FC, seed=5, scene=scene)
        b = ds.materialize(tiny_run, ReprKind.SEG_PSP, seed=5, scene=scene)
        assert np.array_equal(a[0].bundle.primary_image.data, b[0].bundle.primary_image.data)

    def test_resize_option(self, tiny_run):
        out = ds.materialize(tiny_run, ReprKind.DEPTH_DET, seed=5, size=(16, 12))
        assert out[0].bundle.primary_image.data.shape == (12, 16)
        assert out[0].bundle.semantic_image.data.shape == (12, 16)

    def test_missing_asset_names_record(self, tiny_run, tmp_path):
        header, records = ds.read_manifest(tiny_run)
        broken = tmp_path / "broken.jsonl"
        ds.write_manifest(header, records, broken)  # images not copied
        with pytest.raises(FileNotFoundError, match="episode=0 step=0"):
            ds.materialize(broken, ReprKind.DEPTH, seed=0)

    def test_all_eight_kinds_derivable(self, tiny_run):
        scene = load_scene("train_corridor")
        for kind in ReprKind:
            out = ds.materialize(tiny_run, kind, seed=1, scene=scene)
            assert len(out) == 12
