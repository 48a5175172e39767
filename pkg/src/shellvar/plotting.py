"""Figures for flow and variation reports (matplotlib, Agg backend, no timestamps)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt keeps SVG element ids identical between runs
matplotlib.rcParams["svg.hashsalt"] = "shellvar"
_METADATA = {"svg": {"Date": None}, "png": {}, "pdf": {"CreationDate": None}}


def _save(fig, path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower()
    fig.savefig(path, metadata=_METADATA.get(fmt), dpi=120)
    plt.close(fig)
    return path


def plot_profiles(path, snapshots: Sequence[tuple[int, np.ndarray]], viewport=None) -> Path:
    """One polyline per snapshot: f horizontal, g vertical, fixed viewport."""
    fig, ax = plt.subplots(figsize=(5, 5))
    if viewport is None:
        allpts = np.vstack([s for _, s in snapshots])
        lo, hi = allpts.min(axis=0), allpts.max(axis=0)
        pad = 0.1 * float(np.max(hi - lo))
        viewport = (min(lo[0], 0.0) - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
    cmap = plt.get_cmap("viridis")
    n = max(len(snapshots) - 1, 1)
    for k, (step, pts) in enumerate(snapshots):
        ax.plot(pts[:, 0], pts[:, 1], color=cmap(k / n), lw=1.0, label=f"step {step}")
    ax.set_xlim(viewport[0], viewport[1])
    ax.set_ylim(viewport[2], viewport[3])
    ax.set_aspect("equal")
    ax.set_xlabel("f (distance to axis)")
    ax.set_ylabel("g (height)")
    if len(snapshots) <= 8:
        ax.legend(fontsize=7, loc="upper right")
    return _save(fig, path)


def plot_trace(path, steps, energy, residual_sup) -> Path:
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    a1.plot(steps, energy, lw=1.0)
    a1.set_ylabel("E")
    a2.semilogy(steps, np.maximum(np.asarray(residual_sup, dtype=float), 1e-300), lw=1.0)
    a2.set_ylabel("sup |aK + 2bH - c|")
    a2.set_xlabel("step")
    fig.tight_layout()
    return _save(fig, path)


def plot_variation_errors(path, labels: Sequence[str], rel_errors: Sequence[float],
                          threshold: float) -> Path:
    fig, ax = plt.subplots(figsize=(max(4, 0.35 * len(labels) + 2), 3.5))
    x = np.arange(len(labels))
    ax.bar(x, np.maximum(np.asarray(rel_errors, dtype=float), 1e-18))
    ax.axhline(threshold, color="k", ls="--", lw=0.8)
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("relative error vs oracle")
    fig.tight_layout()
    return _save(fig, path)
