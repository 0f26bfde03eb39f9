"""Full-graph training with Adam, L2 weight decay, and validation early stopping."""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import network as net
from .autodiff import Tape, Tensor
from .data import DatasetBundle, SplitSpec, row_normalize

RESULT_FIELDS = ("dataset", "block", "depth", "seed", "best_val", "test",
                 "epochs", "seconds", "config_hash")


class TrainingDiverged(RuntimeError):
    """Loss became NaN/inf; explicit-scheme instability must stay visible."""


@dataclass
class OptimConfig:
    lr: float
    weight_decay: float = 0.0
    max_epochs: int = 1500
    patience: int = 100
    eval_every: int = 1

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.patience > self.max_epochs and self.max_epochs > 0:
            raise ValueError("patience cannot exceed max_epochs")


class AdamState:
    """First/second moment accumulators, one pair per parameter."""

    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8

    def __init__(self, params):
        self.step = 0
        self.m = [np.zeros_like(p.values) for p in params]
        self.v = [np.zeros_like(p.values) for p in params]


def adam_step(params, state: AdamState, cfg: OptimConfig) -> None:
    """Bias-corrected Adam; decay is added to eligible gradients (L2 style)."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.step
    bias2 = 1.0 - b2 ** state.step
    for i, p in enumerate(params):
        g = p.tensor.grad
        if g is None:
            g = np.zeros_like(p.values)
        if cfg.weight_decay > 0 and p.weight_decay_eligible:
            g = g + cfg.weight_decay * p.values
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / bias1
        v_hat = state.v[i] / bias2
        p.values = p.values - cfg.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class RunResult:
    best_val_acc: float
    test_acc_at_best_val: float
    epochs_ran: int
    wall_seconds: float
    config: dict
    seed: int
    history: tuple = ()

    def __post_init__(self):
        assert 0.0 <= self.best_val_acc <= 100.0
        assert 0.0 <= self.test_acc_at_best_val <= 100.0


def accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Masked argmax accuracy in percent; ties break to the lowest class."""
    idx = np.flatnonzero(mask)
    pred = np.argmax(logits[idx], axis=1)  # first maximum wins
    return 100.0 * float(np.mean(pred == labels[idx]))


def evaluate(model: net.Model, bundle: DatasetBundle, mask: np.ndarray,
             normalize: bool = False) -> float:
    feats = prepare_features(model, bundle, normalize)
    tape = Tape()
    logits = net.forward(model, tape, feats, training=False)
    return accuracy(logits.values, bundle.labels, mask)


def prepare_features(model: net.Model, bundle: DatasetBundle,
                     normalize: bool) -> Tensor:
    feats = bundle.features
    if normalize:
        feats = row_normalize(feats)
    dtype = model.w_in.values.dtype
    return Tensor(feats.astype(dtype))


def train(model: net.Model, bundle: DatasetBundle, split: SplitSpec,
          optim_cfg: OptimConfig, seed: int,
          normalize: bool = False) -> RunResult:
    """Optimize until max_epochs or patience; restore the best-val snapshot.

    Evaluation happens every ``eval_every`` epochs (and once before any
    update, so max_epochs=0 just echoes the initial model).  Test accuracy
    is reported at the best-validation epoch, never later.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    params = model.parameters()
    state = AdamState(params)
    feats = prepare_features(model, bundle, normalize)
    labels = bundle.labels

    def eval_mask(mask):
        tape = Tape()
        logits = net.forward(model, tape, feats, training=False)
        return accuracy(logits.values, labels, mask)

    best_val = eval_mask(split.val_mask)
    best_snapshot = [p.values.copy() for p in params]
    evals_since_best = 0
    history = []
    epochs_ran = 0

    for epoch in range(1, optim_cfg.max_epochs + 1):
        tape = Tape()
        logits = net.forward(model, tape, feats, training=True, rng=rng)
        loss = ad.softmax_cross_entropy(tape, logits, labels, split.train_mask)
        loss_val = float(loss.values)
        if not np.isfinite(loss_val):
            norms = {p.name: float(np.linalg.norm(p.values)) for p in params}
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch}; parameter norms: {norms}")
        # train accuracy comes free from the training-pass logits (dropout
        # noise included when dropout is on)
        train_acc = accuracy(logits.values, labels, split.train_mask)
        tape.backward(loss)
        adam_step(params, state, optim_cfg)
        epochs_ran = epoch

        if epoch % optim_cfg.eval_every == 0:
            val_acc = eval_mask(split.val_mask)
            history.append((epoch, loss_val, train_acc, val_acc))
            if val_acc > best_val:
                best_val = val_acc
                best_snapshot = [p.values.copy() for p in params]
                evals_since_best = 0
            else:
                evals_since_best += 1
                if evals_since_best >= optim_cfg.patience:
                    break

    for p, snap in zip(params, best_snapshot):
        p.values = snap
    test_acc = eval_mask(split.test_mask)

    cfg_echo = {
        "dataset": bundle.name,
        "block": model.config.block_kind,
        "depth": model.config.depth,
        "channels": model.config.channels,
        "dropout_p": model.config.dropout_p,
        "h": model.config.h,
        "lr": optim_cfg.lr,
        "weight_decay": optim_cfg.weight_decay,
        "max_epochs": optim_cfg.max_epochs,
        "patience": optim_cfg.patience,
        "eval_every": optim_cfg.eval_every,
        "row_normalize": normalize,
        "tie_weights": model.config.tie_weights,
        "activation": model.config.activation,
    }
    return RunResult(best_val_acc=best_val, test_acc_at_best_val=test_acc,
                     epochs_ran=epochs_ran,
                     wall_seconds=time.perf_counter() - t0,
                     config=cfg_echo, seed=seed, history=tuple(history))


def config_hash(config: dict) -> str:
    """Short provenance hash over the canonicalized config mapping."""
    canon = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def append_results(path, results: list[RunResult]) -> None:
    """Append one CSV row per run; writes the header only on a fresh file."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        if fresh:
            writer.writerow(RESULT_FIELDS)
        for r in results:
            writer.writerow([
                r.config["dataset"], r.config["block"], r.config["depth"],
                r.seed, f"{r.best_val_acc:.2f}",
                f"{r.test_acc_at_best_val:.2f}", r.epochs_ran,
                f"{r.wall_seconds:.3f}", config_hash(r.config),
            ])
