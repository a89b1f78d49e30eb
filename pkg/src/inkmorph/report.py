"""Matplotlib figure rendering for CLI reports.

Figures are written next to the delimited outputs (JSONL traces, CSV tables)
so a run directory is self-describing.  The Agg backend and fixed savefig
metadata keep renders byte-stable across reruns.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_loss_curves",
    "save_descent_panels",
    "save_gradcheck_scatter",
    "save_metric_chart",
]

_SAVE_KW = {"dpi": 110, "metadata": {"Software": "inkmorph"}}


def save_loss_curves(records, path) -> None:
    """Log-scale loss history: total, mse, and the structure components."""
    steps = [r.step for r in records]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(steps, [r.total for r in records], label="total", lw=2)
    ax.plot(steps, [r.mse for r in records], label="mse")
    ax.plot(steps, [r.dis.core for r in records], label="core")
    ax.plot(steps, [r.dis.boundary for r in records], label="boundary")
    ax.plot(steps, [r.dis.smooth for r in records], label="smooth")
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_descent_panels(target, init, final, path) -> None:
    """Target / initial / final images side by side."""
    fig, axes = plt.subplots(1, 3, figsize=(9.0, 3.2))
    for ax, img, title in zip(axes, (target, init, final), ("target", "initial", "final")):
        ax.imshow(np.asarray(img), cmap="gray", vmin=-1.0, vmax=1.0)
        ax.set_title(title, fontsize=9)
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_gradcheck_scatter(per_function, tolerance, path) -> None:
    """Worst relative error per checked gradient, against the tolerance line."""
    names = list(per_function)
    values = [per_function[n] for n in names]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(range(len(names)), values, color="#46789c")
    ax.axhline(tolerance, color="crimson", ls="--", lw=1, label=f"tolerance {tolerance:g}")
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("max relative error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_metric_chart(names, reports, path) -> None:
    """Per-pair bars for each metric (PSNR on its own axis scale)."""
    idx = np.arange(len(names))
    fig, axes = plt.subplots(1, 4, figsize=(12.0, 3.4))
    panels = [
        ("l1", [r.l1 for r in reports]),
        ("rmse", [r.rmse for r in reports]),
        ("psnr (dB)", [r.psnr for r in reports]),
        ("ssim", [r.ssim for r in reports]),
    ]
    for ax, (label, values) in zip(axes, panels):
        finite = [v if np.isfinite(v) else np.nan for v in values]
        ax.bar(idx, finite, color="#46789c")
        ax.set_title(label, fontsize=9)
        ax.set_xticks(idx)
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
