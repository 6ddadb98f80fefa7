"""Matplotlib figures written as SVG.

Output is byte-stable across runs: the SVG id salt is pinned, text stays as
text, and no date metadata is embedded.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_shapes", "plot_scene", "plot_trace", "plot_attention", "STYLE"]

STYLE = {
    "svg.hashsalt": "polyband",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "legend.fontsize": 8,
    "legend.frameon": False,
}

COLORS = {"gt": "#1b7837", "pred": "#c51b7d", "band": "#2166ac", "polygon": "#1b7837"}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def _unit_axes(ax, title=None):
    ax.set_xlim(0, 1)
    ax.set_ylim(1, 0)  # image coordinates: y grows downward
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)


def _closed(poly):
    p = np.asarray(poly, dtype=float)
    return np.vstack([p, p[:1]])


def plot_shapes(shapes, path, title=None) -> Path:
    """Overlay of (kind, polygon) pairs; kind picks the colour."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        seen = set()
        for kind, poly in shapes:
            c = _closed(poly)
            label = kind if kind not in seen else None
            seen.add(kind)
            ax.plot(c[:, 0], c[:, 1], color=COLORS.get(kind, "k"), label=label)
            ax.plot(c[:-1, 0], c[:-1, 1], ".", color=COLORS.get(kind, "k"), markersize=2)
        _unit_axes(ax, title)
        if seen:
            ax.legend(loc="upper right")
        return _save(fig, path)


def plot_scene(gt_polygons, pred_contours, path, title=None, scores=None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        for i, poly in enumerate(gt_polygons):
            c = _closed(poly)
            ax.fill(c[:, 0], c[:, 1], color=COLORS["gt"], alpha=0.25, lw=0, label="ground truth" if i == 0 else None)
        for i, poly in enumerate(pred_contours):
            c = _closed(poly)
            ax.plot(c[:, 0], c[:, 1], color=COLORS["pred"], label="prediction" if i == 0 else None)
            if scores is not None:
                ax.annotate(f"{scores[i]:.2f}", c[0], fontsize=7, color=COLORS["pred"])
        _unit_axes(ax, title)
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_trace(losses, path, learning_rates=None, title="overall loss") -> Path:
    losses = np.asarray(losses, dtype=float)
    steps = np.arange(len(losses))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.semilogy(steps, losses, color="0.6", lw=0.6, label="per step")
        if len(losses) >= 100:
            ma = np.convolve(losses, np.ones(100) / 100, mode="valid")
            ax.semilogy(steps[99:], ma, color="k", label="100-step mean")
        if learning_rates is not None:
            lr = np.asarray(learning_rates)
            drops = np.flatnonzero(np.diff(lr) != 0)
            for d in drops:
                ax.axvline(d + 1, color="0.3", ls=":", lw=0.8)
        ax.set_xlabel("step")
        ax.set_ylabel("loss")
        ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        return _save(fig, path)


def plot_attention(attention, path, sizes=None) -> Path:
    """Channel-averaged attention per scale, one panel per scale."""
    att = np.asarray(attention, dtype=float).mean(axis=2)  # (D, D, 4)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 4, figsize=(10, 2.8))
        for s, ax in enumerate(axes):
            mesh = ax.pcolormesh(att[..., s], vmin=0.0, vmax=1.0, cmap="viridis")
            ax.set_aspect("equal")
            ax.invert_yaxis()
            ax.set_xticks([])
            ax.set_yticks([])
            ax.set_title(f"scale {s + 1}" + (f" (D={sizes[s]})" if sizes else ""))
        fig.colorbar(mesh, ax=list(axes), shrink=0.8)
        return _save(fig, path)
