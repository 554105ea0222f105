"""Minimal SVG figures of sample paths and barycenter histograms."""

from __future__ import annotations

from pathlib import Path

from . import io as mio
from .measures import DiscreteMeasure
from .process import ProcessRepresentation


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed salt and no date keep repeated renders identical
    plt.rcParams["svg.hashsalt"] = "mkinf"
    return plt


def plot_process(proc: ProcessRepresentation, path: str | Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    paths = proc.paths()
    lw = 0.5 + 3.0 * proc.base.weights / proc.base.weights.max()
    if proc.base.dim == 1:
        for k in range(paths.shape[0]):
            ax.plot(proc.times, paths[k, :, 0], color="C0", lw=lw[k], alpha=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel("X_t")
    else:
        for k in range(paths.shape[0]):
            ax.plot(paths[k, :, 0], paths[k, :, 1], color="C0", lw=lw[k], alpha=0.8)
        ax.scatter(proc.base.points[:, 0], proc.base.points[:, 1], s=8, color="C3", zorder=3)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title("sample paths")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_measure(mu: DiscreteMeasure, path: str | Path, bins: int = 30) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    if mu.dim == 1:
        ax.hist(mu.points[:, 0], bins=bins, weights=mu.weights, density=True, color="C0")
        ax.set_xlabel("x")
        ax.set_ylabel("density")
    else:
        ax.scatter(mu.points[:, 0], mu.points[:, 1], s=2000 * mu.weights, color="C0", alpha=0.6)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title("barycenter")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_file(src: str | Path, dst: str | Path) -> None:
    data = mio.read_json(src)
    if isinstance(data, dict) and "maps" in data:
        plot_process(mio.process_from_dict(data), dst)
    elif isinstance(data, dict) and "points" in data:
        plot_measure(mio.measure_from_dict(data), dst)
    else:
        raise mio.FormatError(f"{src}: neither a process nor a measure file")
