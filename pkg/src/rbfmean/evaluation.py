"""Evaluation metrics and the timing/scaling harness.

AUROC is computed exactly from ranks (probability a random positive outscores
a random negative, ties credited 0.5), never from a discretized ROC curve.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, MetricUndefinedError, ShapeError


@dataclass(frozen=True)
class PooledAuroc:
    """Pooled rank AUROC plus per-episode values for dispersion reporting."""

    auroc: float
    per_episode: list[float | None]
    n_pos: int
    n_neg: int


@dataclass(frozen=True)
class EvalResult:
    """One scenario-run outcome: AUROC, class counts, mean delay, scenario echo."""

    auroc: float
    n_pos: int
    n_neg: int
    detection_delay: float | None
    scenario: dict[str, Any]


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Exact rank AUROC with the 0.5 tie convention.

    Raises:
        MetricUndefinedError: only one class present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ShapeError(f"scores {scores.shape} and labels {labels.shape} must be equal-length 1-D")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError(f"AUROC undefined with n_pos={n_pos}, n_neg={n_neg}")
    ranks = rankdata(scores)  # average ranks handle ties
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def pooled_auroc(episodes: Sequence[tuple[Any, np.ndarray]]) -> PooledAuroc:
    """AUROC over all episodes' scored timesteps concatenated.

    Each element pairs a ScoreSeries with the episode's full-length label
    series; the first `first_scored` labels are masked (no scores exist there).
    Per-episode AUROCs are reported alongside (None when an episode has a
    single class).
    """
    all_scores = []
    all_labels = []
    per_episode: list[float | None] = []
    for series, labels in episodes:
        labels = np.asarray(labels)
        if labels.shape[0] != series.first_scored + len(series.scores):
            raise ShapeError(
                f"labels of length {labels.shape[0]} do not cover scores ending at "
                f"t={series.first_scored + len(series.scores) - 1}"
            )
        aligned = labels[series.first_scored :]
        all_scores.append(series.scores)
        all_labels.append(aligned)
        try:
            per_episode.append(auroc(series.scores, aligned))
        except MetricUndefinedError:
            per_episode.append(None)
    scores = np.concatenate(all_scores)
    labels = np.concatenate(all_labels)
    value = auroc(scores, labels)
    return PooledAuroc(
        auroc=value,
        per_episode=per_episode,
        n_pos=int((labels == 1).sum()),
        n_neg=int((labels == 0).sum()),
    )


def calibrate_threshold(in_dist_scores: Sequence[float], fpr: float) -> float:
    """The (1 - fpr) empirical quantile of in-distribution scores.

    Uses the 'higher' interpolation convention, so the empirical exceedance
    rate of the returned value is at most fpr.
    """
    scores = np.asarray(in_dist_scores, dtype=np.float64)
    if scores.size == 0:
        raise ConfigError("cannot calibrate a threshold on zero scores")
    if not 0 < fpr < 1:
        raise ConfigError(f"fpr must be in (0, 1), got {fpr}")
    return float(np.quantile(scores, 1.0 - fpr, method="higher"))


def detection_delay(series: Any, onset: int, threshold: float) -> int | None:
    """Steps from onset to the first score strictly above threshold; None if never."""
    timesteps = series.timesteps()
    exceed = (series.scores > threshold) & (timesteps >= onset)
    hits = np.nonzero(exceed)[0]
    if hits.size == 0:
        return None
    return int(timesteps[hits[0]] - onset)


# ---------------------------------------------------------------------------
# Timing / scaling measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRow:
    n_dims: int
    n_steps: int
    extract_seconds: float  # stride-1 featurization of all N dimensions
    fit_seconds: float      # training-path featurization + forest fits


def measure_scaling(
    config: Any,
    cells: Sequence[tuple[int, int]],
    repeats: int = 3,
    seed: int = 0,
    min_measure_seconds: float = 0.02,
) -> list[ScalingRow]:
    """Median wall time per (N, T) cell for featurization and for training.

    Fast calls are looped until each measurement exceeds `min_measure_seconds`
    so sub-millisecond featurization times are still resolvable.
    """
    from .core import EpisodeMatrix, sliding_windows
    from .detector import train
    from .features import extract_batch
    from .rng import rng_from

    rows = []
    for n_dims, n_steps in cells:
        rng = rng_from(seed, n_dims, n_steps)
        data = rng.normal(size=(n_dims, n_steps))

        def featurize() -> None:
            for row in data:
                extract_batch(sliding_windows(row, config.w), config.kernel, config.variant)

        extract_seconds = _timed_median(featurize, repeats, min_measure_seconds)

        episode = EpisodeMatrix(data=data)

        def fit() -> None:
            train([episode], config)

        fit_seconds = _timed_median(fit, repeats, min_measure_seconds)
        rows.append(
            ScalingRow(n_dims=n_dims, n_steps=n_steps, extract_seconds=extract_seconds, fit_seconds=fit_seconds)
        )
    return rows


def _timed_median(fn, repeats: int, min_measure_seconds: float) -> float:
    fn()  # warm-up
    start = time.perf_counter()
    fn()
    once = time.perf_counter() - start
    loops = max(1, int(np.ceil(min_measure_seconds / max(once, 1e-9))))
    samples = []
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        for _ in range(loops):
            fn()
        samples.append((time.perf_counter() - start) / loops)
    return float(np.median(samples))


def log_log_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.log(np.asarray(xs, dtype=np.float64))
    ys = np.log(np.asarray(ys, dtype=np.float64))
    if xs.size < 2:
        raise ConfigError("need at least two points for a slope")
    return float(np.polyfit(xs, ys, 1)[0])


def scaling_slopes(rows: Sequence[ScalingRow]) -> dict[str, float | None]:
    """Log-log slopes of extraction time along each axis, where measurable."""
    slopes: dict[str, float | None] = {"t_axis": None, "n_axis": None}
    by_n: dict[int, list[ScalingRow]] = {}
    by_t: dict[int, list[ScalingRow]] = {}
    for row in rows:
        by_n.setdefault(row.n_dims, []).append(row)
        by_t.setdefault(row.n_steps, []).append(row)
    t_groups = [g for g in by_n.values() if len({r.n_steps for r in g}) >= 2]
    if t_groups:
        g = max(t_groups, key=len)
        slopes["t_axis"] = log_log_slope([r.n_steps for r in g], [r.extract_seconds for r in g])
    n_groups = [g for g in by_t.values() if len({r.n_dims for r in g}) >= 2]
    if n_groups:
        g = max(n_groups, key=len)
        slopes["n_axis"] = log_log_slope([r.n_dims for r in g], [r.extract_seconds for r in g])
    return slopes


# ---------------------------------------------------------------------------
# Results files
# ---------------------------------------------------------------------------

RESULT_COLUMNS = ["plant", "kind", "level", "ar_order", "variant", "seed", "auroc", "delay", "train_seconds"]


def write_results_csv(path: str | Path, results: Sequence[EvalResult]) -> None:
    """One row per scenario-seed; empty cells for values not measured."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for res in results:
            sc = res.scenario
            writer.writerow(
                [
                    sc.get("plant", ""),
                    sc.get("kind", ""),
                    sc.get("level", ""),
                    "" if sc.get("ar_order") is None else sc["ar_order"],
                    sc.get("variant", ""),
                    "" if sc.get("seed") is None else sc["seed"],
                    repr(float(res.auroc)),
                    "" if res.detection_delay is None else repr(float(res.detection_delay)),
                    "" if sc.get("train_seconds") is None else repr(float(sc["train_seconds"])),
                ]
            )


def read_results_csv(path: str | Path) -> list[dict[str, Any]]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            rows.append(
                {
                    "plant": raw["plant"],
                    "kind": raw["kind"],
                    "level": raw["level"],
                    "ar_order": int(raw["ar_order"]) if raw["ar_order"] else None,
                    "variant": raw["variant"],
                    "seed": int(raw["seed"]) if raw["seed"] else None,
                    "auroc": float(raw["auroc"]),
                    "delay": float(raw["delay"]) if raw["delay"] else None,
                    "train_seconds": float(raw["train_seconds"]) if raw["train_seconds"] else None,
                }
            )
        return rows


def summarize_results(results: Sequence[EvalResult]) -> dict[str, Any]:
    """Mean/std AUROC per scenario across seeds, one entry per table row."""
    groups: dict[tuple, list[EvalResult]] = {}
    for res in results:
        sc = res.scenario
        key = (sc.get("plant"), sc.get("kind"), sc.get("level"), sc.get("ar_order"), sc.get("variant"))
        groups.setdefault(key, []).append(res)
    entries = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        runs = groups[key]
        aurocs = np.array([r.auroc for r in runs])
        delays = [r.detection_delay for r in runs if r.detection_delay is not None]
        entries.append(
            {
                "plant": key[0],
                "kind": key[1],
                "level": key[2],
                "ar_order": key[3],
                "variant": key[4],
                "auroc_mean": float(aurocs.mean()),
                "auroc_std": float(aurocs.std()),
                "delay_mean": float(np.mean(delays)) if delays else None,
                "n_runs": len(runs),
            }
        )
    return {"scenarios": entries}


def write_summary_json(path: str | Path, summary: dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
