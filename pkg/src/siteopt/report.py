"""Run reporting: indicator tables (aligned text + TSV) and matplotlib
figures rendered to files next to the delimited output."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .domain import OBJECTIVE_NAMES, CityInstance, ObjectiveVector, normalize
from .metrics import IndicatorReport

OBJECTIVE_LABELS = {
    "accessibility": "Accessibility",
    "environment": "Environmental quality",
    "neg_cost": "Cost efficiency",
    "equity": "Spatial equity",
}

# projections drawn for the pairwise Pareto scatter figures
PAIRWISE_AXES = ((0, 2), (0, 1), (1, 3), (2, 3))


def indicator_table(reports: Mapping[str, IndicatorReport]) -> str:
    """Aligned, human-readable indicator comparison."""
    headers = ("method", "hypervolume", "igd", "rcr", "front size")
    rows = [(name, f"{r.hypervolume:.4f}",
             "-" if r.igd is None else f"{r.igd:.4f}",
             f"{100 * r.rcr:.1f}%", str(r.front_size))
            for name, r in reports.items()]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    def fmt(row):
        return "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"


def indicator_tsv(reports: Mapping[str, IndicatorReport]) -> str:
    """Tab-delimited twin of :func:`indicator_table` for machine consumption."""
    lines = ["method\thypervolume\tigd\trcr\tfront_size"]
    for name, r in reports.items():
        igd = "" if r.igd is None else f"{r.igd:.6f}"
        lines.append(f"{name}\t{r.hypervolume:.6f}\t{igd}\t{r.rcr:.6f}\t{r.front_size}")
    return "\n".join(lines) + "\n"


def convergence_figure(histories: Mapping[str, Sequence[float]],
                       path: str | Path) -> None:
    """Hypervolume-per-epoch curves, one line per method/seed label."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    for label, values in histories.items():
        ax.plot(range(len(values)), values, marker=".", label=label)
    ax.set_xlabel("Epoch")
    ax.set_ylabel("Archive hypervolume")
    ax.set_title("Hypervolume convergence")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def front_figure(city: CityInstance,
                 fronts: Mapping[str, Sequence[ObjectiveVector]],
                 path: str | Path) -> None:
    """Pairwise 2-objective projections of normalized fronts."""
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 7.0))
    for ax, (i, j) in zip(axes.ravel(), PAIRWISE_AXES):
        for label, front in fronts.items():
            pts = np.array([tuple(normalize(o, city.objective_bounds))
                            for o in front])
            if pts.size == 0:
                continue
            ax.scatter(pts[:, i], pts[:, j], s=18, alpha=0.75, label=label)
        ax.set_xlabel(OBJECTIVE_LABELS[OBJECTIVE_NAMES[i]])
        ax.set_ylabel(OBJECTIVE_LABELS[OBJECTIVE_NAMES[j]])
        ax.set_xlim(-0.05, 1.05)
        ax.set_ylim(-0.05, 1.05)
        ax.grid(True, alpha=0.3)
    handles, labels = axes[0, 0].get_legend_handles_labels()
    if handles:
        axes[0, 0].legend(fontsize=8)
    fig.suptitle(f"Pareto front projections: {city.name}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(out_dir: str | Path, city: CityInstance,
                 reports: Mapping[str, IndicatorReport],
                 fronts: Mapping[str, Sequence[ObjectiveVector]],
                 histories: Mapping[str, Sequence[float]] | None = None) -> list[Path]:
    """Render the full report bundle; returns the files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (("indicators.txt", indicator_table(reports)),
                       ("indicators.tsv", indicator_tsv(reports))):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)
    fig_path = out / "pareto_fronts.png"
    front_figure(city, fronts, fig_path)
    written.append(fig_path)
    if histories:
        conv_path = out / "convergence.png"
        convergence_figure(histories, conv_path)
        written.append(conv_path)
    return written
