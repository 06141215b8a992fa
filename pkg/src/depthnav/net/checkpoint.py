"""Versioned binary checkpoint: magic, spec hash, shape table, LE float32.

Layout: 8-byte magic, u32 version, u32 header length, header JSON (spec,
spec digest, seed, epoch, optimizer step), u32 tensor count, then per tensor
a name, dtype code, shape and raw little-endian data.  Optimizer moments are
stored alongside parameters so training resumes bit-compatibly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .model import NetworkSpec
from .train import AdamState

MAGIC = b"DNAVCKPT"
VERSION = 1

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_CODES = {v: k for k, v in _DTYPES.items()}


class CheckpointError(ValueError):
    pass


def _write_tensor(fh, name: str, arr: np.ndarray) -> None:
    data = np.ascontiguousarray(arr)
    if data.dtype == np.float32:
        code = 0
        raw = data.astype("<f4", copy=False)
    elif data.dtype == np.float64:
        code = 1
        raw = data.astype("<f8", copy=False)
    else:
        raise CheckpointError(f"unsupported tensor dtype {data.dtype} for {name}")
    nb = name.encode("utf-8")
    fh.write(struct.pack("<H", len(nb)))
    fh.write(nb)
    fh.write(struct.pack("<BB", code, data.ndim))
    fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
    fh.write(raw.tobytes())


def _read_tensor(fh) -> Tuple[str, np.ndarray]:
    (nlen,) = struct.unpack("<H", fh.read(2))
    name = fh.read(nlen).decode("utf-8")
    code, ndim = struct.unpack("<BB", fh.read(2))
    shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
    dtype = _DTYPES.get(code)
    if dtype is None:
        raise CheckpointError(f"unknown dtype code {code} for tensor {name}")
    count = int(np.prod(shape)) if ndim else 1
    raw = fh.read(count * dtype.itemsize)
    if len(raw) != count * dtype.itemsize:
        raise CheckpointError(f"truncated tensor data for {name}")
    return name, np.frombuffer(raw, dtype=dtype).reshape(shape).copy()


def save_checkpoint(
    path,
    params: Dict[str, np.ndarray],
    spec: NetworkSpec,
    seed: int = 0,
    epoch: int = 0,
    adam: Optional[AdamState] = None,
    extra: Optional[dict] = None,
) -> Path:
    header = {
        "spec": spec.to_dict(),
        "spec_sha256": spec.digest(),
        "seed": seed,
        "epoch": epoch,
        "adam_t": adam.t if adam is not None else 0,
        "has_adam": adam is not None,
        "extra": extra or {},
    }
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tensors = dict(params)
    if adam is not None:
        tensors.update({f"adam.m.{k}": v for k, v in adam.m.items()})
        tensors.update({f"adam.v.{k}": v for k, v in adam.v.items()})
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(hb)))
        fh.write(hb)
        fh.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            _write_tensor(fh, name, tensors[name])
    return path


def load_checkpoint(path):
    """Returns (params, spec, meta, adam or None)."""
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise CheckpointError(f"{path}: bad magic, not a checkpoint")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        spec = NetworkSpec.from_dict(header["spec"])
        if spec.digest() != header["spec_sha256"]:
            raise CheckpointError(f"{path}: spec hash mismatch")
        (count,) = struct.unpack("<I", fh.read(4))
        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            name, arr = _read_tensor(fh)
            tensors[name] = arr
    params = {k: v for k, v in tensors.items() if not k.startswith("adam.")}
    adam = None
    if header.get("has_adam"):
        adam = AdamState(
            m={k[len("adam.m.") :]: v for k, v in tensors.items() if k.startswith("adam.m.")},
            v={k[len("adam.v.") :]: v for k, v in tensors.items() if k.startswith("adam.v.")},
            t=header.get("adam_t", 0),
        )
    meta = {
        "seed": header.get("seed", 0),
        "epoch": header.get("epoch", 0),
        "extra": header.get("extra", {}),
    }
    return params, spec, meta, adam
