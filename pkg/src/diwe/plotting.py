"""Report figures, rendered off-screen to PNG files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (6.4, 3.6),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_buffer_traces(traces: np.ndarray, max_buffer: int, path) -> None:
    """Buffer size over time for each run, with the sliding-window size for contrast."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        t = np.arange(1, traces.shape[1] + 1)
        for row in traces:
            ax.plot(t, row, color="0.6", lw=0.5, alpha=0.4)
        ax.plot(t, np.median(traces, axis=0), color="C0", lw=1.5, label="region set (median)")
        ax.plot(t, np.minimum(t, max_buffer), color="C1", lw=1.0, ls="--", label="sliding window")
        for b in (1250, 1750, 2500):
            ax.axvline(b, color="k", lw=0.6, ls=":")
        ax.set_xlabel("t")
        ax.set_ylabel("buffer size")
        ax.legend(loc="upper left")
        _save(fig, path)


def plot_accuracy_curves(curves: dict[str, np.ndarray], path) -> None:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for name, acc in curves.items():
            ax.plot(np.arange(1, acc.size + 1), acc, lw=1.0, label=name)
        ax.set_xlabel("t")
        ax.set_ylabel("prequential accuracy")
        ax.set_ylim(0.0, 1.0)
        ax.legend(loc="lower right")
        _save(fig, path)


def plot_policy_gap(per_kind: dict[str, dict], path) -> None:
    """Mean accuracy of max-RDD and random selection per stream kind."""
    kinds = list(per_kind)
    x = np.arange(len(kinds))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for off, key, label in ((-0.2, "maxrdd", "max-RDD"), (0.2, "random", "random")):
            means = [per_kind[k][f"{key}_mean"] for k in kinds]
            sds = [per_kind[k][f"{key}_sd"] for k in kinds]
            ax.bar(x + off, means, width=0.4, yerr=sds, capsize=2, label=label)
        ax.set_xticks(x, kinds, rotation=20)
        ax.set_ylabel("accuracy")
        lo = min(min(per_kind[k]["maxrdd"] + per_kind[k]["random"]) for k in kinds)
        ax.set_ylim(max(0.0, lo - 0.05), 1.0)
        ax.legend()
        _save(fig, path)


def plot_sensitivity(table: dict[str, dict[str, dict[str, float]]], path) -> None:
    """Accuracy against voting size, one line per buffer limit."""
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, len(table), squeeze=False)
        for ax, (kind, by_wm) in zip(axes[0], table.items()):
            for wm, by_v in by_wm.items():
                v = sorted(int(k) for k in by_v)
                ax.plot(v, [by_v[str(i)] for i in v], marker="o", ms=3, label=f"w_max={wm}")
            ax.set_title(kind)
            ax.set_xlabel("voting size")
            ax.set_ylabel("accuracy")
            ax.legend()
        _save(fig, path)
