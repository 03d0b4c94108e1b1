"""Episode data model and windowing utilities.

An episode is an N x T observation matrix (row = state dimension, column =
timestep) with an optional anomaly-onset index. Training consumes
non-overlapping windows; scoring consumes stride-1 sliding windows. Both views
are produced here so the two phases cannot drift apart.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BoundsError, DataError, ShapeError


@dataclass(frozen=True)
class EpisodeMatrix:
    """One rollout: N x T observations, optional anomaly onset, provenance tags.

    Attributes:
        data: float64 matrix, shape (n_dims, n_steps). Read-only after init.
        onset: timestep at which the anomaly begins (persists to episode end),
            or None for a clean episode.
        meta: free-form provenance (plant name, seed, scenario id, ...).
    """

    data: np.ndarray
    onset: int | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"episode data must be 2-D (N x T), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"episode needs N >= 1 and T >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("episode data contains NaN or Inf")
        if self.onset is not None:
            onset = int(self.onset)
            if not 0 <= onset < arr.shape[1]:
                raise BoundsError(
                    f"onset {onset} outside [0, {arr.shape[1]}) for T={arr.shape[1]}"
                )
            object.__setattr__(self, "onset", onset)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n_dims(self) -> int:
        return self.data.shape[0]

    @property
    def n_steps(self) -> int:
        return self.data.shape[1]

    def labels(self) -> np.ndarray:
        """Per-timestep 0/1 labels induced by the onset."""
        return labels_from_onset(self.n_steps, self.onset)


@dataclass(frozen=True)
class Window:
    """A contiguous N x w slab of an episode, ending at timestep `end_time`."""

    data: np.ndarray
    end_time: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"window data must be 2-D, got shape {arr.shape}")
        if arr.shape[1] < 2:
            raise ShapeError(f"window width must be >= 2, got {arr.shape[1]}")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]


def window_at(episode: EpisodeMatrix, t: int, w: int) -> Window:
    """Return the N x w window of columns t-w+1 .. t.

    Raises:
        BoundsError: if w < 2, t < w-1, or t >= T.
    """
    if w < 2:
        raise BoundsError(f"window size must be >= 2, got w={w}")
    if t >= episode.n_steps:
        raise BoundsError(f"timestep t={t} outside episode of length {episode.n_steps}")
    if t < w - 1:
        raise BoundsError(f"timestep t={t} has no full window of size w={w} behind it")
    return Window(data=episode.data[:, t - w + 1 : t + 1], end_time=t)


def partition_windows(series: np.ndarray, w: int) -> np.ndarray:
    """Split a univariate series into floor(T/w) non-overlapping windows.

    Consecutive length-w segments starting at index 0; a trailing remainder
    shorter than w is discarded.

    Returns:
        Array of shape (floor(T/w), w), a view onto `series` where possible.

    Raises:
        BoundsError: if the series is shorter than w (empty partition).
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ShapeError(f"expected a 1-D series, got shape {series.shape}")
    if w < 2:
        raise BoundsError(f"window size must be >= 2, got w={w}")
    n = series.shape[0] // w
    if n == 0:
        raise BoundsError(f"series of length {series.shape[0]} is shorter than w={w}")
    return series[: n * w].reshape(n, w)


def sliding_windows(series: np.ndarray, w: int) -> np.ndarray:
    """All stride-1 windows of a univariate series, shape (T-w+1, w).

    Row i ends at timestep w-1+i. A zero-copy strided view.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ShapeError(f"expected a 1-D series, got shape {series.shape}")
    if w < 2:
        raise BoundsError(f"window size must be >= 2, got w={w}")
    if series.shape[0] < w:
        raise BoundsError(f"series of length {series.shape[0]} is shorter than w={w}")
    return sliding_window_view(series, w)


def labels_from_onset(n_steps: int, onset: int | None) -> np.ndarray:
    """Binary labels: 1 for t >= onset, else 0; all zeros when onset is None."""
    if n_steps < 1:
        raise BoundsError(f"need n_steps >= 1, got {n_steps}")
    labels = np.zeros(n_steps, dtype=np.int8)
    if onset is not None:
        if not 0 <= onset < n_steps:
            raise BoundsError(f"onset {onset} outside [0, {n_steps})")
        labels[onset:] = 1
    return labels


# ---------------------------------------------------------------------------
# Episode file formats
# ---------------------------------------------------------------------------
#
# JSON-lines: one record per episode,
#   {"n": N, "t": T, "onset": t_a|null, "meta": {...}, "data": [[row0...], ...]}
# CSV export: one row per timestep, columns dim_0..dim_{N-1}, plus a
# ".labels.csv" sidecar holding the per-timestep 0/1 labels.


def episode_to_record(episode: EpisodeMatrix) -> dict[str, Any]:
    return {
        "n": episode.n_dims,
        "t": episode.n_steps,
        "onset": episode.onset,
        "meta": episode.meta,
        "data": [row.tolist() for row in episode.data],
    }


def episode_from_record(record: dict[str, Any]) -> EpisodeMatrix:
    try:
        data = np.asarray(record["data"], dtype=np.float64)
        n, t = int(record["n"]), int(record["t"])
        onset = record.get("onset")
        meta = record.get("meta", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed episode record: {exc}") from exc
    if data.shape != (n, t):
        raise ShapeError(f"episode record declares {n}x{t} but data has shape {data.shape}")
    return EpisodeMatrix(data=data, onset=None if onset is None else int(onset), meta=meta)


def write_episodes_jsonl(path: str | Path, episodes: Iterable[EpisodeMatrix]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(json.dumps(episode_to_record(ep), separators=(",", ":")) + "\n")


def read_episodes_jsonl(path: str | Path) -> list[EpisodeMatrix]:
    return list(iter_episodes_jsonl(path))


def iter_episodes_jsonl(path: str | Path) -> Iterator[EpisodeMatrix]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_no + 1}: invalid JSON: {exc}") from exc
            yield episode_from_record(record)


def write_episode_csv(path: str | Path, episode: EpisodeMatrix) -> None:
    """CSV export: one row per timestep, plus a .labels.csv sidecar."""
    path = Path(path)
    header = [f"dim_{i}" for i in range(episode.n_dims)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for col in episode.data.T:
            writer.writerow([repr(float(v)) for v in col])
    labels = episode.labels()
    sidecar = path.with_suffix(path.suffix + ".labels.csv") if path.suffix != ".csv" \
        else path.with_name(path.stem + ".labels.csv")
    with open(sidecar, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for v in labels:
            writer.writerow([int(v)])


def read_episode_csv(path: str | Path, onset: int | None = None) -> EpisodeMatrix:
    path = Path(path)
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise DataError(f"{path}: no timesteps")
    data = np.asarray(rows, dtype=np.float64).T
    if data.shape[0] != len(header):
        raise ShapeError(f"{path}: header has {len(header)} columns, data has {data.shape[0]}")
    return EpisodeMatrix(data=data, onset=onset)
