"""Figure rendering for score traces, result tables, and scaling runs.

Consumes the delimited outputs the pipeline writes (score CSVs, results CSVs,
bench CSVs) and renders PNG companions next to them. Metric computation never
happens here.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

VARIANT_COLORS = {"full": "#2a6f97", "rbf_only": "#e07a5f", "mean_only": "#6a994e"}


def plot_score_trace(
    timesteps: Sequence[int],
    scores: Sequence[float],
    out_path: str | Path,
    onset: int | None = None,
    threshold: float | None = None,
    cusum: Sequence[float] | None = None,
    alarm_time: int | None = None,
    title: str = "anomaly score",
) -> Path:
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.plot(timesteps, scores, lw=1.2, color="#2a6f97", label="score")
    if threshold is not None:
        ax.axhline(threshold, color="#999999", lw=0.8, ls=":", label="threshold")
    if onset is not None:
        ax.axvline(onset, color="#c1121f", lw=1.0, ls="--", label="onset")
    if cusum is not None:
        ax2 = ax.twinx()
        ax2.plot(timesteps, cusum, lw=1.0, color="#e07a5f", alpha=0.8, label="cusum")
        ax2.set_ylabel("cusum statistic")
        if alarm_time is not None:
            ax2.axvline(alarm_time, color="#e07a5f", lw=1.0, ls="-.")
    ax.set_xlabel("timestep")
    ax.set_ylabel("score")
    ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_results_bars(rows: Sequence[dict[str, Any]], out_path: str | Path) -> Path:
    """Grouped AUROC bars, one group per scenario, one bar per variant."""
    groups: dict[str, dict[str, list[float]]] = {}
    for row in rows:
        order = f"-ar{row['ar_order']}" if row.get("ar_order") else ""
        scenario = f"{row['plant']}-{row['kind']}-{row['level']}{order}"
        groups.setdefault(scenario, {}).setdefault(row["variant"], []).append(row["auroc"])
    scenarios = sorted(groups)
    variants = sorted({v for g in groups.values() for v in g})
    width = 0.8 / max(1, len(variants))
    fig, ax = plt.subplots(figsize=(max(6.0, 0.55 * len(scenarios) * max(1, len(variants))), 4.0))
    xs = np.arange(len(scenarios))
    for vi, variant in enumerate(variants):
        means = [np.mean(groups[s].get(variant, [np.nan])) for s in scenarios]
        ax.bar(
            xs + vi * width,
            means,
            width=width,
            label=variant,
            color=VARIANT_COLORS.get(variant, None),
        )
    ax.axhline(0.5, color="#999999", lw=0.8, ls=":")
    ax.set_xticks(xs + 0.4 - width / 2)
    ax.set_xticklabels(scenarios, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("pooled AUROC")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_scaling(rows: Sequence[dict[str, Any]], out_path: str | Path) -> Path:
    """Log-log extraction time against T (fixed N) and against N (fixed T)."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    by_n: dict[int, list] = {}
    by_t: dict[int, list] = {}
    for row in rows:
        by_n.setdefault(row["n_dims"], []).append(row)
        by_t.setdefault(row["n_steps"], []).append(row)
    for n_dims, group in sorted(by_n.items()):
        if len(group) >= 2:
            group = sorted(group, key=lambda r: r["n_steps"])
            axes[0].loglog(
                [r["n_steps"] for r in group],
                [r["extract_seconds"] for r in group],
                "o-",
                label=f"N={n_dims}",
            )
    axes[0].set_xlabel("episode length T")
    for n_steps, group in sorted(by_t.items()):
        if len(group) >= 2:
            group = sorted(group, key=lambda r: r["n_dims"])
            axes[1].loglog(
                [r["n_dims"] for r in group],
                [r["extract_seconds"] for r in group],
                "s-",
                label=f"T={n_steps}",
            )
    axes[1].set_xlabel("state dimensions N")
    for ax in axes:
        ax.set_ylabel("extraction seconds")
        ax.grid(True, which="both", lw=0.3, alpha=0.5)
        ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
