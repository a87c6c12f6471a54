"""Matplotlib renderings of evaluation reports and explanation graphs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .graphs import ROLE_COLORS, ROLE_REPAIRED, ExplanationGraph

_FILL = {"green": "#7fc97f", "yellow": "#ffff99", "blue": "#80b1d3"}


def render_eval_figure(reports, path) -> None:
    """Grouped bars: fixed bugs without vs with reranking, one group per op."""
    reports = list(reports)
    labels = [r.op for r in reports]
    baseline = [r.fixed_baseline for r in reports]
    with_ci = [r.fixed_with_ci for r in reports]
    x = range(len(reports))
    width = 0.38

    fig, ax = plt.subplots(figsize=(1.8 * max(4, len(reports)), 4.0))
    ax.bar([i - width / 2 for i in x], baseline, width, label="fixed w/o reranking", color="#999999")
    ax.bar([i + width / 2 for i in x], with_ci, width, label="fixed with reranking", color="#4daf4a")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel("fixed bugs")
    ax.set_title(f"{reports[0].corpus} / {reports[0].model} ({reports[0].bug_count} bugs)")
    ax.legend()
    for i, (b, c) in enumerate(zip(baseline, with_ci)):
        ax.text(i - width / 2, b, str(b), ha="center", va="bottom", fontsize=9)
        ax.text(i + width / 2, c, str(c), ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_explanation_figure(graph: ExplanationGraph, path, title: str = "") -> None:
    """Two-column bipartite drawing; node colors follow the role scheme."""
    inputs = [i for i, (_, role, _) in enumerate(graph.nodes) if role != ROLE_REPAIRED]
    outputs = [i for i, (_, role, _) in enumerate(graph.nodes) if role == ROLE_REPAIRED]
    pos = {}
    for row, idx in enumerate(inputs):
        pos[idx] = (0.0, -row)
    for row, idx in enumerate(outputs):
        pos[idx] = (1.0, -row)

    height = max(3.0, 0.45 * max(len(inputs), len(outputs), 1))
    fig, ax = plt.subplots(figsize=(7.0, height))
    max_w = max((w for _, _, w in graph.edges), default=0.0)
    for a, b, w in graph.edges:
        (x0, y0), (x1, y1) = pos[a], pos[b]
        lw = 1.0 + 4.0 * (w / max_w) if max_w > 0 else 1.0
        ax.plot([x0, x1], [y0, y1], color="gray", linewidth=lw, zorder=1, alpha=0.8)
    for idx, (text, role, cluster) in enumerate(graph.nodes):
        x, y = pos[idx]
        ax.scatter([x], [y], s=900, color=_FILL[ROLE_COLORS[role]], edgecolors="black", zorder=2)
        ax.annotate(text, (x, y), ha="center", va="center", fontsize=8, zorder=3)
        ax.annotate(f"c{cluster}", (x, y - 0.33), ha="center", va="center", fontsize=6, color="#555555")
    ax.set_xlim(-0.4, 1.4)
    ax.axis("off")
    if title:
        ax.set_title(title)
    if graph.empty_warning or not graph.nodes:
        ax.text(0.5, 0.5, "empty explanation", ha="center", va="center", transform=ax.transAxes)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
