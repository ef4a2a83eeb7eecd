"""Figure rendering for the report commands. Figures are written to files only."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.2),
    "figure.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_loss_traces(traces: dict[str, list[tuple[int, float]]], path, title: str = "") -> Path:
    """One log-scale curve per label."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, trace in traces.items():
            epochs, values = zip(*trace)
            ax.semilogy(epochs, np.maximum(values, 1e-17), label=label)
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_sweep(summary: list[dict], path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for dist in sorted({row["distribution"] for row in summary}):
            rows = [r for r in summary if r["distribution"] == dist]
            ax.errorbar(
                [r["N"] for r in rows],
                [r["mean_final_loss"] for r in rows],
                yerr=[r["std_final_loss"] for r in rows],
                marker="o", capsize=3, label=dist,
            )
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("mean final loss")
        ax.legend()
        return _save(fig, path)


def plot_amplitudes(panels: dict[str, tuple[np.ndarray, np.ndarray, float]], path) -> Path:
    """Panels of (target, prepared moduli, infidelity) keyed by title."""
    with plt.rc_context(STYLE):
        cols = 2
        rows = (len(panels) + 1) // cols
        fig, axes = plt.subplots(rows, cols, figsize=(10, 3.2 * rows), squeeze=False)
        for ax, (name, (target, prepared, infid)) in zip(axes.flat, panels.items()):
            j = np.arange(target.size)
            ax.plot(j, target, "k-", lw=1.2, label="target")
            ax.plot(j, prepared, ".", ms=3, color="tab:red", label="prepared")
            ax.set_title(f"{name}  (1-F = {infid:.1e})")
            ax.set_xlabel("j")
            ax.set_ylabel("amplitude")
        for ax in list(axes.flat)[len(panels):]:
            ax.set_visible(False)
        axes.flat[0].legend()
        fig.tight_layout()
        return _save(fig, path)


def plot_bench(dims: list[int], seconds: list[float], path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(dims, seconds, "o-", base=2)
        ax.set_xlabel("N")
        ax.set_ylabel("seconds")
        return _save(fig, path)
