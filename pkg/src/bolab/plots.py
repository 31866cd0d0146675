"""Optional figure rendering for the command-line experiments.

Each helper turns one already-computed artifact into a PNG next to the
delimited output.  matplotlib is imported lazily with the Agg backend so
the library itself never requires a display.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def line_plot(path: str, x: np.ndarray, ys, labels: Sequence[str],
              title: str, xlabel: str = "x", ylabel: str = "") -> str:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for y, lab in zip(np.atleast_2d(ys), labels):
        ax.plot(x, y, label=lab, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(labels) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def heatmap(path: str, t: np.ndarray, x: np.ndarray, z: np.ndarray,
            title: str) -> str:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    im = ax.pcolormesh(x, t, z, shading="auto", cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def histogram(path: str, values: np.ndarray, title: str,
              bins: int = 60, density_overlay=None) -> str:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.hist(values, bins=bins, density=True, alpha=0.7)
    if density_overlay is not None:
        xs, ys = density_overlay
        ax.plot(xs, ys, "r-", lw=1.2)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def scatter_poles(path: str, xi: np.ndarray, eta: np.ndarray,
                  title: str) -> str:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.scatter(np.mod(xi, 2 * np.pi), eta, s=6, alpha=0.6)
    ax.set_xlabel("position")
    ax.set_ylabel("height")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
