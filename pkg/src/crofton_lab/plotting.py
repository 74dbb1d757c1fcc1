"""Figures written next to the CSV output (Agg backend, PNG files)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def _unit_circle(ax):
    a = np.linspace(0.0, 2.0 * np.pi, 400)
    ax.plot(np.cos(a), np.sin(a), color="0.3", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlim(-1.08, 1.08)
    ax.set_ylim(-1.08, 1.08)
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def plot_path(path, out, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _unit_circle(ax)
        ax.plot(path.vertices[:, 0], path.vertices[:, 1], color="C0", lw=1.2)
        ax.plot(*path.vertices[0], "o", color="C2", ms=4, label="entry")
        ax.plot(*path.vertices[-1], "s", color="C3", ms=4, label="exit")
        ax.legend(frameon=False, loc="upper right")
        ax.set_title(title or f"g-length {path.length:.6g}")
        return _save(fig, out)


def plot_geodesics(polylines, out, tau=None, title=None, limit=200):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _unit_circle(ax)
        for p in polylines[:limit]:
            ax.plot(p[:, 0], p[:, 1], color="C0", lw=0.4, alpha=0.5)
        if tau is not None:
            ax.plot(tau[:, 0], tau[:, 1], color="C3", lw=1.2)
        if title:
            ax.set_title(title)
        return _save(fig, out)


def plot_length_histogram(counts, edges, out, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.stairs(counts, edges, fill=True, color="C0", alpha=0.7)
        ax.set_xlabel("geodesic g-length")
        ax.set_ylabel("geodesics")
        if title:
            ax.set_title(title)
        return _save(fig, out)


def plot_pair_histogram(hist, out, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        frac = np.asarray(hist, dtype=float) / np.sum(hist)
        ax.bar(np.arange(len(frac)), frac, color="C1")
        ax.set_xticks(np.arange(len(frac)))
        ax.set_xlabel("interior intersection points per pair")
        ax.set_ylabel("fraction of pairs")
        ax.set_ylim(0.0, 1.05)
        if title:
            ax.set_title(title)
        return _save(fig, out)


def plot_identity_errors(reports, out):
    """Absolute discrepancy of each identity report on a log axis."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        names = [r.name for r in reports]
        errs = [max(r.abs_err, 1e-17) for r in reports]
        colors = ["C2" if r.passed else "C3" for r in reports]
        ax.bar(names, errs, color=colors)
        ax.set_yscale("log")
        ax.set_ylabel("|lhs - rhs|")
        ax.tick_params(axis="x", rotation=30)
        return _save(fig, out)
