"""From-scratch AdamW with decoupled weight decay, warmup + polynomial-decay
learning-rate schedule, and the BCE training loop for the classifier head.

Decay is decoupled: the shrinkage term never flows through the moment
estimates, so a zero-gradient step still shrinks decayed parameters by
exactly (1 - lr * weight_decay).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .classifier import (
    BN_MOMENTUM,
    ModelSnapshot,
    backward,
    bce_from_logits,
    densify,
    forward_train,
    sample_dropout_mask,
)
from .features import FeatureVector

# Parameters that receive decoupled weight decay; biases and the BN shift
# are never decayed.
DECAYED_PARAMS = frozenset({"W", "bn_gamma"})


@dataclass(frozen=True)
class TrainConfig:
    peak_lr: float = 5e-5
    weight_decay: float = 0.01
    warmup_frac: float = 0.10
    decay_power: float = 1.0
    end_lr: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.warmup_frac < 1.0):
            raise ValueError("require 0 < warmup_frac < 1")
        if not (self.peak_lr > self.end_lr >= 0.0):
            raise ValueError("require peak_lr > end_lr >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("require epochs >= 0 and batch_size >= 1")


@dataclass
class OptimizerState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "OptimizerState":
        return cls(
            step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def lr_at(step: int, total_steps: int, cfg: TrainConfig) -> float:
    """Learning rate at a 0-based step: linear warmup, then polynomial decay.

    Warmup covers round(warmup_frac * total_steps) steps (at least one);
    lr(total_steps) is exactly end_lr.
    """
    if total_steps <= 0:
        raise ValueError("total_steps must be positive")
    if not (0 <= step <= total_steps):
        raise ValueError(f"step {step} out of range [0, {total_steps}]")
    warmup_steps = max(1, round(cfg.warmup_frac * total_steps))
    if step < warmup_steps:
        return cfg.peak_lr * step / warmup_steps
    if total_steps == warmup_steps:
        return cfg.end_lr if step == total_steps else cfg.peak_lr
    frac = (step - warmup_steps) / (total_steps - warmup_steps)
    return cfg.end_lr + (cfg.peak_lr - cfg.end_lr) * (1.0 - frac) ** cfg.decay_power


class NonFiniteGradient(RuntimeError):
    pass


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
    cfg: TrainConfig,
    decay_params: frozenset[str] = DECAYED_PARAMS,
) -> tuple[dict[str, np.ndarray], OptimizerState]:
    """One AdamW update, in place. Weight decay only touches decay_params.

    m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2;  bias-corrected m_hat, v_hat;
    theta <- theta - lr * m_hat/(sqrt(v_hat)+eps) - lr*wd*theta.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            bad = int(np.sum(~np.isfinite(g)))
            raise NonFiniteGradient(
                f"non-finite gradient for {name!r} at step {state.step} ({bad} bad entries)"
            )
    state.step += 1
    t = state.step
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p = params[name]
        p -= lr * (m_hat / (np.sqrt(v_hat) + cfg.eps))
        if name in decay_params and cfg.weight_decay != 0.0:
            p -= lr * cfg.weight_decay * p
    return params, state


class TrainingDiverged(RuntimeError):
    """Loss went non-finite; carries the last finite snapshot and loss log."""

    def __init__(self, snapshot: ModelSnapshot, losses: list[float]):
        super().__init__(f"training diverged after {len(losses)} finite steps")
        self.snapshot = snapshot
        self.losses = losses


@dataclass
class TrainResult:
    snapshot: ModelSnapshot
    losses: list[float]


def _labels_matrix(labels: Iterable[Sequence[bool]], n_labels: int) -> np.ndarray:
    Y = np.asarray([tuple(lab) for lab in labels], dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != n_labels:
        raise ValueError(f"labels must be {n_labels}-wide")
    return Y


def train(
    dataset: list[tuple[FeatureVector, Sequence[bool]]],
    cfg: TrainConfig,
    init: ModelSnapshot,
) -> TrainResult:
    """Minimize mean per-label BCE over seeded shuffled mini-batches.

    Expects init's bias to come from init_bias; returns a new snapshot plus
    the per-step loss log. epochs=0 returns init unchanged.
    """
    if not dataset:
        raise ValueError("dataset must be nonempty")
    if cfg.epochs == 0:
        return TrainResult(snapshot=init, losses=[])

    dim, n_labels = init.dim, init.n_labels
    feats = [x for x, _ in dataset]
    Y_all = _labels_matrix((y for _, y in dataset), n_labels)
    n = len(dataset)
    n_batches = (n + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * n_batches

    params = {
        "W": init.W.copy(),
        "b": init.b.copy(),
        "bn_gamma": init.bn_gamma.copy(),
        "bn_beta": init.bn_beta.copy(),
    }
    running_mean = init.bn_running_mean.copy()
    running_var = init.bn_running_var.copy()
    state = OptimizerState.for_params(params)
    rng = np.random.default_rng(cfg.seed)
    losses: list[float] = []
    last_finite = {k: p.copy() for k, p in params.items()}
    last_rm, last_rv = running_mean.copy(), running_var.copy()

    def build(ps, rm, rv) -> ModelSnapshot:
        return ModelSnapshot(
            extractor=init.extractor,
            bn_gamma=ps["bn_gamma"], bn_beta=ps["bn_beta"],
            bn_running_mean=rm, bn_running_var=rv,
            W=ps["W"], b=ps["b"], threshold=init.threshold,
            version=init.version, trained_on=init.trained_on,
        )

    step = 0
    for _epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            X = densify([feats[i] for i in idx], dim)
            Y = Y_all[idx]
            mask = sample_dropout_mask(X.shape, rng)
            cache = forward_train(X, params["bn_gamma"], params["bn_beta"],
                                  params["W"], params["b"], mask)
            loss = bce_from_logits(cache.logits, Y)
            if not np.isfinite(loss):
                raise TrainingDiverged(build(last_finite, last_rm, last_rv), losses)
            losses.append(loss)
            for k, p in params.items():
                last_finite[k] = p.copy()
            last_rm, last_rv = running_mean.copy(), running_var.copy()

            grads = backward(cache, Y, params["W"], mask)
            lr = lr_at(step, total_steps, cfg)
            adamw_step(params, grads, state, lr, cfg)
            # running_var stays > 0: positive init blended with nonnegative batch var
            running_mean = BN_MOMENTUM * running_mean + (1.0 - BN_MOMENTUM) * cache.batch_mean
            running_var = BN_MOMENTUM * running_var + (1.0 - BN_MOMENTUM) * cache.batch_var
            step += 1

    return TrainResult(snapshot=build(params, running_mean, running_var), losses=losses)
