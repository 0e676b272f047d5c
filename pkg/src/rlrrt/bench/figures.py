"""Matplotlib figures for benchmark outputs, written straight to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiment import finish_times, success_curve  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_benchmark(records, budgets, path, xlabel: str = "planning budget (s)") -> None:
    """Success rate against budget (top) and finish-time spread (bottom)."""
    curve = success_curve(records, budgets)
    ft = finish_times(records)
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 7))
    for name, frac in curve.items():
        top.plot(budgets, frac, marker="o", label=name)
    top.set_xlabel(xlabel)
    top.set_ylabel("success rate")
    top.set_ylim(-0.02, 1.02)
    top.legend()
    names = list(curve)
    data = [ft.get(n) or [np.nan] for n in names]
    bottom.boxplot(data, tick_labels=names)
    bottom.set_ylabel("finish time (s)")
    _save(fig, path)


def plot_contour(field, grid, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 6))
    w, h = grid.extent
    ax.imshow(grid.cells, origin="lower", extent=(0, w, 0, h), cmap="Greys", alpha=0.6)
    vals = np.where(field.unreachable, np.nan, field.values)
    cs = ax.contourf(field.xs, field.ys, vals, levels=12, cmap="viridis")
    fig.colorbar(cs, ax=ax, label="TTR (s)")
    ax.plot(*field.goal, marker="*", color="red", markersize=14)
    ax.set_title(title)
    ax.set_aspect("equal")
    _save(fig, path)


def plot_p2p(bins, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [f"{b.low:g}-{b.high:g}" for b in bins]
    ax.bar(labels, [b.rate for b in bins])
    ax.set_xlabel("start-goal distance (m)")
    ax.set_ylabel("success rate")
    ax.set_ylim(0, 1)
    _save(fig, path)


def plot_ttr_scatter(predicted, truth, path, threshold: float) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(truth, predicted, s=6, alpha=0.5)
    lim = max(np.nanmax(truth), np.nanmax(predicted))
    ax.plot([0, lim], [0, lim], color="k", lw=1)
    ax.axhline(threshold, color="r", lw=0.8)
    ax.axvline(threshold, color="r", lw=0.8)
    ax.set_xlabel("rollout TTR (s)")
    ax.set_ylabel("predicted TTR (s)")
    _save(fig, path)


def plot_training_losses(losses, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(losses) + 1), losses)
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    ax.set_yscale("log")
    _save(fig, path)
