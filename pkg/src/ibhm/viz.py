"""SVG figure emission (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def overlay_plot(series: Mapping[str, tuple[np.ndarray, np.ndarray]], path: Path,
                 xlabel: str, ylabel: str, marks: Sequence[float] = (),
                 title: str = "") -> None:
    """One axis, one labelled line per entry, optional vertical marks."""
    fig, ax = plt.subplots(figsize=(7.5, 3.2), constrained_layout=True)
    for label, (x, y) in series.items():
        ax.plot(x, y, lw=1.0, label=label)
    for m in marks:
        ax.axvline(m, color="k", ls=":", lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8, ncol=min(len(series), 5), loc="upper right")
    ax.grid(alpha=0.3)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def heatmap_plot(freqs: np.ndarray, grid: np.ndarray, dt: float, path: Path,
                 title: str = "") -> None:
    """|grid| against time (x) and log frequency (y)."""
    fig, ax = plt.subplots(figsize=(7.5, 3.6), constrained_layout=True)
    t = np.arange(grid.shape[1]) * dt
    mesh = ax.pcolormesh(t, freqs, np.abs(grid), shading="auto", cmap="magma",
                         rasterized=True)
    ax.set_yscale("log")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    if title:
        ax.set_title(title, fontsize=10)
    fig.colorbar(mesh, ax=ax, label="magnitude")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
