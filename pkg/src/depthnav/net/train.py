"""Adam training loop over shuffled mini-batches.

Randomness (shuffling, dropout) is keyed on (seed, epoch, batch), so a run
resumed from a checkpoint continues bit-identically to an uninterrupted one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..rng import RngStream
from .model import LossParams, NetworkSpec, backward, batch_loss, forward, init_params

_SUB_INIT = 0
_SUB_SHUFFLE = 1
_SUB_DROPOUT = 2


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 400
    batch_size: int = 40
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    loss: LossParams = field(default_factory=LossParams)

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size <= 0 or self.lr <= 0:
            raise ValueError("bad training configuration")


@dataclass
class TrainingSet:
    """In-memory dataset: normalized images, one-hot commands, targets."""

    x1: np.ndarray  # (N, 1, H, W) float32
    cmd: np.ndarray  # (N, 4) float32
    targets: np.ndarray  # (N, 2) float32: normalized (v, omega)
    x2: Optional[np.ndarray] = None  # (N, 1, H, W) for dual-encoder models

    def __post_init__(self) -> None:
        n = self.x1.shape[0]
        if self.cmd.shape != (n, 4) or self.targets.shape != (n, 2):
            raise ValueError("inconsistent dataset array shapes")
        if self.x2 is not None and self.x2.shape[0] != n:
            raise ValueError("x2 batch dimension mismatch")

    def __len__(self) -> int:
        return self.x1.shape[0]


@dataclass
class AdamState:
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            t=0,
        )


def adam_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> None:
    """One in-place Adam update over all parameters."""
    state.t += 1
    b1t = 1.0 - cfg.beta1**state.t
    b2t = 1.0 - cfg.beta2**state.t
    for k, p in params.items():
        g = grads[k]
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * (g * g)
        m_hat = state.m[k] / b1t
        v_hat = state.v[k] / b2t
        p -= (cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)).astype(p.dtype)


def train(
    data: TrainingSet,
    spec: NetworkSpec,
    cfg: TrainConfig,
    rng: RngStream,
    params: Optional[Dict[str, np.ndarray]] = None,
    adam: Optional[AdamState] = None,
    start_epoch: int = 0,
    log_cb=None,
) -> Tuple[Dict[str, np.ndarray], AdamState, List[dict]]:
    """Train for cfg.epochs total epochs (resuming from ``start_epoch``).

    Returns (params, adam state, per-epoch log entries).  Deterministic for a
    given rng; the log carries only loss values so files stay reproducible.
    """
    if len(data) == 0:
        raise ValueError("training dataset is empty")
    if spec.dual_encoder and data.x2 is None:
        raise ValueError("dual-encoder spec needs x2 in the dataset")
    if params is None:
        params = init_params(spec, rng.child(_SUB_INIT))
    if adam is None:
        adam = AdamState.zeros_like(params)

    n = len(data)
    log: List[dict] = []
    for epoch in range(start_epoch, cfg.epochs):
        order = rng.child(_SUB_SHUFFLE).child(epoch).generator().permutation(n)
        total = 0.0
        total_pred = 0.0
        batches = 0
        t0 = time.perf_counter()
        for bi, lo in enumerate(range(0, n, cfg.batch_size)):
            idx = order[lo : lo + cfg.batch_size]
            x1 = data.x1[idx]
            x2 = data.x2[idx] if data.x2 is not None else None
            cmd = data.cmd[idx]
            tgt = data.targets[idx]
            drop_rng = rng.child(_SUB_DROPOUT).child(epoch).child(bi)
            out, cache = forward(params, spec, x1, x2, cmd, train_mode=True, rng=drop_rng)
            loss_val, pred_val, dout = batch_loss(out, tgt, params, cfg.loss)
            if not np.isfinite(loss_val):
                raise FloatingPointError(f"non-finite loss at epoch {epoch} batch {bi}")
            grads = backward(dout, cache, params, cfg.loss)
            adam_step(params, grads, adam, cfg)
            total += loss_val
            total_pred += pred_val
            batches += 1
        entry = {
            "epoch": epoch,
            "mean_loss": total / batches,
            "mean_pred_loss": total_pred / batches,
            "batches": batches,
        }
        log.append(entry)
        if log_cb is not None:
            log_cb({**entry, "seconds": time.perf_counter() - t0})
    return params, adam, log
