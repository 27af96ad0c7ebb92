"""Figure rendering for score summaries and consensus convergence.

Figures are written next to the CSV outputs as a convenience; the delimited
files remain the canonical record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_summary_figure(rows, path) -> Path:
    """Grouped bar chart of mean micro F1 (with sd bars) per summary cell."""
    path = Path(path)
    sparsities = sorted({r.sparsity for r in rows}) or [""]
    fig, axes = plt.subplots(1, len(sparsities),
                             figsize=(1.2 + 4.0 * len(sparsities), 3.6),
                             squeeze=False)
    for ax, sparsity in zip(axes[0], sparsities):
        cell = [r for r in rows if r.sparsity == sparsity]
        labels = [f"{r.model_id}\n{r.regime}" for r in cell]
        means = [r.micro_f1_mean for r in cell]
        sds = [r.micro_f1_sd for r in cell]
        xs = range(len(cell))
        ax.bar(xs, means, yerr=sds, capsize=3, color="#4878a8")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, fontsize=7, rotation=45, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("micro F1")
        ax.set_title(sparsity or "all")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_convergence_figure(curve_rows, path) -> Path:
    """Box plot of consensus distances per subsample size."""
    path = Path(path)
    sizes = [n for n, _ in curve_rows]
    data = [dists for _, dists in curve_rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.boxplot(data)
    ax.set_xticks(range(1, len(sizes) + 1))
    ax.set_xticklabels([str(n) for n in sizes])
    ax.set_xlabel("subsample size n")
    ax.set_ylabel("L1 distance to full-sample median")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
