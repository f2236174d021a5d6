"""Figures for the stats and eval reports, rendered to files with Agg."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .existence import RATIOS, ExistenceReport  # noqa: E402
from .metrics import PredictionSet, alberg_curve  # noqa: E402
from .stats import SHIFT_BINS  # noqa: E402

_BIN_COLORS = {
    "positive": "#4c72b0",
    "0": "#55a868",
    "negative_in_top3": "#dd8452",
    "out_of_top3": "#c44e52",
    "OOM": "#8c8c8c",
}

# Fixed metadata keeps PNG output byte-stable across runs.
_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def existence_plot(reports: Mapping[str, Sequence[ExistenceReport]], path: str | Path) -> Path:
    """Per-version ratios as a strip plot, one panel per ratio."""
    fig, axes = plt.subplots(1, len(RATIOS), figsize=(4 * len(RATIOS), 3.2), sharey=True)
    names = list(reports)
    for ax, ratio in zip(axes, RATIOS):
        for i, name in enumerate(names):
            ys = [100 * getattr(r, ratio) for r in reports[name] if getattr(r, ratio) is not None]
            ax.scatter([i] * len(ys), ys, s=18, alpha=0.7)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
        ax.set_title(ratio)
        ax.grid(axis="y", alpha=0.3)
    axes[0].set_ylabel("% of instances")
    return _save(fig, path)


def shift_plot(distribution: Mapping[int, Mapping[str, float]], path: str | Path) -> Path:
    """Stacked bars of the shift bins for each CC rank k."""
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ks = sorted(distribution)
    bottom = [0.0] * len(ks)
    for b in SHIFT_BINS:
        vals = [100 * distribution[k].get(b, 0.0) for k in ks]
        ax.bar([str(k) for k in ks], vals, bottom=bottom, label=b, color=_BIN_COLORS[b])
        bottom = [x + y for x, y in zip(bottom, vals)]
    ax.set_xlabel("rank k in CC")
    ax.set_ylabel("% of reports")
    ax.legend(fontsize=7, loc="upper left", bbox_to_anchor=(1, 1))
    return _save(fig, path)


def alberg_plot(curves: Mapping[str, PredictionSet], path: str | Path) -> Path:
    """Cost-effectiveness curves for each labelled prediction set."""
    fig, ax = plt.subplots(figsize=(4, 4))
    for label, preds in curves.items():
        xs, ys = alberg_curve(preds.ranked())
        ax.plot(xs, ys, label=label)
    ax.plot([0, 1], [0, 1], ls=":", color="grey", label="random")
    ax.set_xlabel("fraction of SLOC inspected")
    ax.set_ylabel("fraction of defects found")
    ax.legend(fontsize=8)
    return _save(fig, path)
