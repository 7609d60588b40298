"""Figure rendering for the CLI report paths (file output only, no GUI)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_META = {"Software": "geointerp"}
_CURVE_COLORS = ["tab:red", "tab:orange", "tab:green", "tab:purple",
                 "tab:brown", "tab:blue", "black"]


def _new_3d(title):
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    ax.set_title(title)
    ax.set_xlabel("x0")
    ax.set_ylabel("x1")
    ax.set_zlabel("x2")
    return fig, ax


def save_cloud_figure(points, path, title="point cloud", curves=None):
    """3-D scatter of a cloud with optional labelled curves drawn on top.

    curves is a list of (label, M x 3 array) pairs. Clouds in other ambient
    dimensions fall back to the first two/three coordinates.
    """
    points = np.asarray(points)
    if points.shape[1] < 3:
        fig, ax = plt.subplots(figsize=(6, 5))
        ax.scatter(points[:, 0], points[:, 1], s=2, alpha=0.3, color="0.6")
        ax.set_title(title)
        for i, (label, pts) in enumerate(curves or []):
            ax.plot(pts[:, 0], pts[:, 1], "-o", ms=2.5, lw=1.4,
                    color=_CURVE_COLORS[i % len(_CURVE_COLORS)], label=label)
        if curves:
            ax.legend(fontsize=8)
    else:
        fig, ax = _new_3d(title)
        ax.scatter(points[:, 0], points[:, 1], points[:, 2], s=2, alpha=0.25,
                   color="0.6", depthshade=False)
        for i, (label, pts) in enumerate(curves or []):
            ax.plot(pts[:, 0], pts[:, 1], pts[:, 2], "-o", ms=2.5, lw=1.6,
                    color=_CURVE_COLORS[i % len(_CURVE_COLORS)], label=label)
        if curves:
            ax.legend(fontsize=8, loc="upper left")
    fig.savefig(path, dpi=140, metadata=_META)
    plt.close(fig)


def save_embedding_figure(coords, path, color=None, title="embedding"):
    """2-D scatter of latent coordinates (first two axes)."""
    coords = np.asarray(coords)
    fig, ax = plt.subplots(figsize=(6, 5))
    sc = ax.scatter(coords[:, 0], coords[:, 1] if coords.shape[1] > 1 else np.zeros(len(coords)),
                    s=3, c=color if color is not None else "tab:blue", cmap="viridis", alpha=0.7)
    if color is not None:
        fig.colorbar(sc, ax=ax, shrink=0.8)
    ax.set_title(title)
    ax.set_xlabel("axis 0")
    ax.set_ylabel("axis 1")
    ax.set_aspect("equal", adjustable="datalim")
    fig.savefig(path, dpi=140, metadata=_META)
    plt.close(fig)


def save_history_figure(history, keys, path, title="training loss"):
    """Per-epoch loss terms on a log scale."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    epochs = [row["epoch"] for row in history]
    for key in keys:
        values = [row[key] for row in history]
        if any(v > 0 for v in values):
            ax.semilogy(epochs, values, label=key, lw=1.2)
        else:
            ax.plot(epochs, values, label=key, lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=140, metadata=_META)
    plt.close(fig)
