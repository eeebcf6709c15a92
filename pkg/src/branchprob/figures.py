"""Matplotlib renderings written next to the delimited reports.

Everything draws to files through the Agg backend; nothing opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 150


def probability_heatmap(values: np.ndarray, path, title: str = "",
                        origin: tuple[int, int] | None = None) -> Path:
    """Render one transition-law grid as a heatmap (x2 count on the x axis)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    im = ax.imshow(np.maximum(values, 0.0), origin="lower", cmap="viridis",
                   interpolation="nearest")
    fig.colorbar(im, ax=ax, fraction=0.046)
    if origin is not None:
        ax.plot([origin[1]], [origin[0]], "r+", markersize=8)
    ax.set_xlabel("type-2 count m")
    ax.set_ylabel("type-1 count l")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def recovery_comparison(baseline: np.ndarray, recovered: np.ndarray, path,
                        title: str = "") -> Path:
    """Baseline law, recovered law, and their absolute difference."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.8))
    vmax = max(baseline.max(), recovered.max(), 1e-300)
    panels = [(baseline, "baseline"), (recovered, "recovered"),
              (np.abs(recovered - baseline), "abs difference")]
    for ax, (values, label) in zip(axes, panels):
        kwargs = {} if label.startswith("abs") else {"vmin": 0.0, "vmax": vmax}
        im = ax.imshow(np.maximum(values, 0.0), origin="lower",
                       cmap="viridis", interpolation="nearest", **kwargs)
        fig.colorbar(im, ax=ax, fraction=0.046)
        ax.set_title(label)
        ax.set_xlabel("m")
        ax.set_ylabel("l")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def benchmark_errors(rows: list[dict], path, title: str = "") -> Path:
    """Median recovery errors against grid order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = [row["n"] for row in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.plot(n, [row["eps_max"] for row in rows], "o-", label="eps_max")
    ax.plot(n, [row["eps_rel"] for row in rows], "s--", label="eps_rel")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("grid order N")
    ax.set_ylabel("median error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_benchmark_figures(report, figdir) -> list[Path]:
    """Figures for one benchmark report: per-n recovery panels + error curve."""
    figdir = Path(figdir)
    written = []
    for rec in report.trials:
        if rec.trial != 0 or rec.baseline_grid is None:
            continue
        name = f"recovery_{report.model}_n{rec.n}.png"
        written.append(recovery_comparison(
            rec.baseline_grid, rec.recovered_grid, figdir / name,
            title=(f"{report.model} n={rec.n} m={rec.m} "
                   f"start=({rec.j},{rec.k}) t={report.t}")))
    if len(report.rows) > 1:
        written.append(benchmark_errors(
            report.rows, figdir / f"errors_{report.model}.png",
            title=f"{report.model} recovery error vs grid order"))
    return written
