"""Matplotlib figures for the CLI reports.

Figures are built on bare :class:`~matplotlib.figure.Figure` objects (no
pyplot state), so rendering is safe from worker threads and never opens a
window. SVG output is made reproducible by fixing ``svg.hashsalt`` and
dropping the ``Date`` metadata entry.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "lines.linewidth": 1.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "isochrone",
    "svg.fonttype": "none",
}

FIGSIZE = (5.0, 5.0 * (math.sqrt(5) - 1.0) / 2.0)


def new_figure(title: str = "", xlabel: str = "", ylabel: str = ""):
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=FIGSIZE)
        ax = fig.add_subplot(1, 1, 1)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def save(fig: Figure, path) -> None:
    """Write ``fig`` to ``path``; the format follows the suffix (svg, png, pdf)."""
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower()
    metadata = {"Date": None} if fmt in ("svg", "pdf") else {"Software": None}
    with matplotlib.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path, format=fmt, metadata=metadata)


def period_map_figure(h, T, reference=None, title="period map"):
    fig, ax = new_figure(title, "family parameter h", "period T")
    ax.plot(h, T, "o-", gid="period")
    if reference is not None:
        ax.axhline(reference, color="0.5", linestyle="--", gid="reference")
    ax.ticklabel_format(useOffset=False)
    return fig


def q_figure(t, q, t_star=None, title="blow-up indicator"):
    fig, ax = new_figure(title, "t", "q(t)")
    ax.plot(t, q, gid="q")
    ax.axhline(0.0, color="0.5", linewidth=0.8)
    if t_star is not None:
        ax.axvline(t_star, color="C3", linestyle=":", gid="t_star")
    return fig


def fan_figure(t, X, title="characteristics"):
    """One line per characteristic; ``X`` has shape ``(len(t), N)``."""
    fig, ax = new_figure(title, "x", "t")
    X = np.asarray(X)
    for i in range(X.shape[1]):
        ax.plot(X[:, i], t, color="C0", linewidth=0.6, gid=f"characteristic-{i}")
    return fig


def trajectory_figure(t, columns: dict, title="trajectory"):
    fig, ax = new_figure(title, "t", "state")
    for name, values in columns.items():
        ax.plot(t, values, label=name, gid=name)
    ax.legend(loc="best")
    return fig


def tau_figure(z, tau, title="Sabatini tau"):
    fig, ax = new_figure(title, "z", "tau(z)")
    ax.plot(z, tau, "o-", gid="tau")
    ax.axhline(0.0, color="0.5", linewidth=0.8)
    return fig


def multiplier_figure(multipliers, title="Floquet multipliers"):
    fig, ax = new_figure(title, "Re", "Im")
    theta = np.linspace(0.0, 2.0 * np.pi, 361)
    ax.plot(np.cos(theta), np.sin(theta), color="0.6", linewidth=0.8, gid="unit-circle")
    mu = np.asarray(multipliers)
    ax.plot(mu.real, mu.imag, "x", color="C3", gid="multipliers")
    ax.set_aspect("equal")
    return fig


def crossing_figure(t, min_gap, min_q, t_cross=None, title="crossing monitor"):
    fig, ax = new_figure(title, "t", "value")
    ax.plot(t, min_gap, label="min adjacent gap", gid="min_gap")
    ax.plot(t, min_q, label="min q", gid="min_q")
    ax.axhline(0.0, color="0.5", linewidth=0.8)
    if t_cross is not None:
        ax.axvline(t_cross, color="C3", linestyle=":", gid="t_cross")
    ax.legend(loc="best")
    return fig
