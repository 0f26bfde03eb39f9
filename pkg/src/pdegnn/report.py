"""Figure rendering for the report paths; PNGs land next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_depth_sweep_figure(rows, path) -> Path:
    """Accuracy vs depth, one line per block kind.

    ``rows`` are mappings with keys block, depth, test (test accuracy in
    percent); multiple seeds per (block, depth) are averaged with a min/max
    band.
    """
    by_block: dict[str, dict[int, list[float]]] = {}
    for r in rows:
        by_block.setdefault(str(r["block"]), {}).setdefault(
            int(r["depth"]), []).append(float(r["test"]))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for block, per_depth in sorted(by_block.items()):
        depths = sorted(per_depth)
        mean = [float(np.mean(per_depth[d])) for d in depths]
        lo = [min(per_depth[d]) for d in depths]
        hi = [max(per_depth[d]) for d in depths]
        ax.plot(depths, mean, marker="o", label=block)
        ax.fill_between(depths, lo, hi, alpha=0.15)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("depth (layers)")
    ax.set_ylabel("test accuracy (%)")
    ax.set_title("Accuracy vs depth")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_smoothing_figure(profiles: dict[int, np.ndarray], path) -> Path:
    """Per-layer feature variance on a log axis, one line per depth."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for depth in sorted(profiles):
        var = np.asarray(profiles[depth], dtype=float)
        floor = np.finfo(float).tiny
        ax.semilogy(np.arange(len(var)), np.maximum(var, floor),
                    label=f"L={depth}")
    ax.set_xlabel("layer")
    ax.set_ylabel("feature variance")
    ax.set_title("Smoothing profile")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_training_curves(histories: dict[int, tuple], path) -> Path:
    """Loss and validation accuracy over epochs, one pair of lines per seed.

    History entries are (epoch, loss, train_acc, val_acc).
    """
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for seed in sorted(histories):
        hist = histories[seed]
        if not hist:
            continue
        epochs = [h[0] for h in hist]
        ax_loss.plot(epochs, [h[1] for h in hist], label=f"seed {seed}")
        ax_acc.plot(epochs, [h[3] for h in hist], label=f"seed {seed}")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("training loss")
    ax_loss.grid(True, alpha=0.3)
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("validation accuracy (%)")
    ax_acc.grid(True, alpha=0.3)
    ax_acc.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
