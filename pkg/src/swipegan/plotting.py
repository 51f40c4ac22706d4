"""Matplotlib figures written next to the CSV reports.

PNG metadata omits the software/version stamp so that re-running a command
with the same inputs yields the same bytes.
"""

from __future__ import annotations

import io
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from swipegan._io import atomic_write_bytes  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, dest) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=100, metadata=_PNG_META)
    plt.close(fig)
    atomic_write_bytes(dest, buf.getvalue())


def plot_learning_curves(series: Mapping[str, Sequence[tuple[float, float]]], slopes: Mapping[str, float], dest) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for name, pts in series.items():
        pts = sorted(pts)
        xs, ys = zip(*pts)
        label = f"{name} (slope {slopes[name]:.4f})" if name in slopes else name
        ax.loglog(xs, ys, "o-", label=label)
    ax.set_xlabel("training paths")
    ax.set_ylabel("error rate (1 - top-1)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, dest)


def plot_compositions(labels: Sequence[str], top1: Sequence[float], dest) -> None:
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels) + 2), 3.8))
    pos = np.arange(len(labels))
    ax.bar(pos, [100 * v for v in top1], color="#4a7fb5")
    for x, v in zip(pos, top1):
        ax.text(x, 100 * v + 1, f"{100 * v:.1f}", ha="center", fontsize=8)
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylim(0, 105)
    ax.set_ylabel("top-1 accuracy (%)")
    fig.tight_layout()
    _save(fig, dest)


def plot_losses(columns: Mapping[str, Sequence[float]], dest) -> None:
    """One panel per loss series, x axis is the training step."""
    names = [k for k, v in columns.items() if len(v)]
    fig, axes = plt.subplots(len(names), 1, figsize=(6.0, 1.8 * max(1, len(names))), sharex=True, squeeze=False)
    for ax, name in zip(axes[:, 0], names):
        v = np.asarray(columns[name], dtype=np.float64)
        ax.plot(np.arange(1, len(v) + 1), v, lw=0.8)
        ax.set_ylabel(name, fontsize=8)
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("step")
    fig.tight_layout()
    _save(fig, dest)
