"""The full detector: per-dimension forests over window features, plus CUSUM.

Training partitions each state dimension's series into non-overlapping windows,
extracts the two-entry feature vectors, and fits one isolation forest per
dimension. Scoring slides a stride-1 window across the episode and averages the
per-dimension anomaly scores into A_t. The optional CUSUM layer folds the A_t
stream into a one-sided drift statistic with a latching alarm.

Every per-dimension forest is fitted from the same seed stream, so identically
permuting the state dimensions of training and test data leaves every A_t
unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from . import evaluation
from .core import EpisodeMatrix, Window, partition_windows, sliding_windows
from .errors import (
    BoundsError,
    ConfigError,
    ContaminationError,
    DataError,
    ModelLoadError,
    ShapeError,
    VersionError,
)
from .features import KernelParams, Variant, VARIANTS, extract_batch, extract_features, feature_dim
from .iforest import (
    ForestConfig,
    IsolationForest,
    anomaly_score,
    fit_forest,
    forest_from_dict,
    forest_to_dict,
    score_batch,
)

MODEL_FORMAT_VERSION = 1

# sigma grid multipliers, applied to the pooled per-dimension std of the
# training data; makes the kernel responsive regardless of observation units
SIGMA_GRID_BASE = (0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True)
class DetectorConfig:
    """Window size, kernel, feature variant, and forest settings."""

    w: int = 10
    kernel: KernelParams = field(default_factory=KernelParams)
    variant: Variant = "full"
    forest: ForestConfig = field(default_factory=ForestConfig)

    def __post_init__(self) -> None:
        if self.w < 2:
            raise ConfigError(f"window size must be >= 2, got {self.w}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "w": self.w,
            "kernel": {"s": self.kernel.s, "sigma": self.kernel.sigma},
            "variant": self.variant,
            "forest": {
                "n_trees": self.forest.n_trees,
                "subsample": self.forest.subsample,
                "max_depth": self.forest.max_depth,
                "seed": self.forest.seed,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "DetectorConfig":
        kernel = payload.get("kernel", {})
        forest = payload.get("forest", {})
        return cls(
            w=int(payload["w"]),
            kernel=KernelParams(s=float(kernel["s"]), sigma=float(kernel["sigma"])),
            variant=payload["variant"],
            forest=ForestConfig(
                n_trees=int(forest["n_trees"]),
                subsample=int(forest["subsample"]),
                max_depth=None if forest["max_depth"] is None else int(forest["max_depth"]),
                seed=int(forest["seed"]),
            ),
        )


@dataclass(frozen=True)
class CusumParams:
    """One-sided upper CUSUM: S <- max(0, S + (a_t - target - slack)), alarm at S > threshold."""

    target: float
    slack: float
    threshold: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.target):
            raise ConfigError(f"cusum target must be finite, got {self.target}")
        if self.slack < 0:
            raise ConfigError(f"cusum slack must be >= 0, got {self.slack}")
        if not self.threshold > 0:
            raise ConfigError(f"cusum threshold must be > 0, got {self.threshold}")


@dataclass(frozen=True)
class CusumState:
    """Running statistic plus latched alarm. `step` counts applied updates."""

    statistic: float = 0.0
    alarmed: bool = False
    alarm_time: int | None = None
    step: int = 0


@dataclass(frozen=True)
class DetectorModel:
    forests: list[IsolationForest]
    config: DetectorConfig
    n_dims: int
    cusum: CusumParams | None = None

    def __post_init__(self) -> None:
        if len(self.forests) != self.n_dims:
            raise ShapeError(f"{len(self.forests)} forests for n_dims={self.n_dims}")
        want = feature_dim(self.config.variant)
        for i, forest in enumerate(self.forests):
            if forest.dim != want:
                raise ShapeError(f"forest {i} has dim {forest.dim}, variant needs {want}")


@dataclass(frozen=True)
class ScoreSeries:
    """Per-timestep anomaly scores; index i corresponds to t = first_scored + i."""

    scores: np.ndarray
    first_scored: int

    def timesteps(self) -> np.ndarray:
        return np.arange(self.first_scored, self.first_scored + len(self.scores))


def train(episodes: Sequence[EpisodeMatrix], config: DetectorConfig) -> DetectorModel:
    """Fit one isolation forest per state dimension on pooled window features.

    Episodes must be clean (no onset), share N, and each be at least w long.

    Raises:
        ShapeError: episodes disagree on N.
        ContaminationError: an episode carries an onset.
        BoundsError: an episode is shorter than w (propagated from partitioning).
    """
    if not episodes:
        raise DataError("no training episodes")
    n_dims = episodes[0].n_dims
    for i, ep in enumerate(episodes):
        if ep.n_dims != n_dims:
            raise ShapeError(f"episode {i} has N={ep.n_dims}, expected {n_dims}")
        if ep.onset is not None:
            raise ContaminationError(f"episode {i} carries an anomaly onset and cannot train")

    forests = []
    for n in range(n_dims):
        blocks = [
            extract_batch(partition_windows(ep.data[n], config.w), config.kernel, config.variant)
            for ep in episodes
        ]
        vectors = np.vstack(blocks)
        forests.append(fit_forest(vectors, config.forest))
    return DetectorModel(forests=forests, config=config, n_dims=n_dims)


def training_feature_count(episodes: Sequence[EpisodeMatrix], w: int) -> int:
    """Feature vectors per dimension that train() will pool: sum of floor(T/w)."""
    return sum(ep.n_steps // w for ep in episodes)


def score_step(model: DetectorModel, window: Window) -> float:
    """A_t for one window: unweighted mean of per-dimension forest scores."""
    if window.data.shape[0] != model.n_dims:
        raise ShapeError(f"window has N={window.data.shape[0]}, model expects {model.n_dims}")
    if window.width != model.config.w:
        raise ShapeError(f"window width {window.width} != configured w={model.config.w}")
    per_dim = np.array(
        [
            anomaly_score(model.forests[n], extract_features(window.data[n], model.config.kernel, model.config.variant))
            for n in range(model.n_dims)
        ]
    )
    return float(np.mean(per_dim))


def score_episode(model: DetectorModel, episode: EpisodeMatrix) -> ScoreSeries:
    """Stride-1 scores for every window-complete timestep, length T - w + 1."""
    if episode.n_dims != model.n_dims:
        raise ShapeError(f"episode has N={episode.n_dims}, model expects {model.n_dims}")
    w = model.config.w
    if episode.n_steps < w:
        raise BoundsError(f"episode of length {episode.n_steps} is shorter than w={w}")
    per_dim = np.empty((model.n_dims, episode.n_steps - w + 1))
    for n in range(model.n_dims):
        feats = extract_batch(sliding_windows(episode.data[n], w), model.config.kernel, model.config.variant)
        per_dim[n] = score_batch(model.forests[n], feats)
    return ScoreSeries(scores=np.mean(per_dim, axis=0), first_scored=w - 1)


# ---------------------------------------------------------------------------
# Sigma selection
# ---------------------------------------------------------------------------


def pooled_dim_std(episodes: Sequence[EpisodeMatrix]) -> np.ndarray:
    """Per-dimension std over all episodes' timesteps concatenated."""
    stacked = np.concatenate([ep.data for ep in episodes], axis=1)
    return stacked.std(axis=1)


def default_sigma_grid(episodes: Sequence[EpisodeMatrix]) -> list[float]:
    """SIGMA_GRID_BASE scaled by the mean per-dimension std of the episodes."""
    scale = float(np.mean(pooled_dim_std(episodes)))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    return [b * scale for b in SIGMA_GRID_BASE]


def suggest_sigma(episodes: Sequence[EpisodeMatrix], w: int) -> float:
    """Bandwidth heuristic: sqrt of the mean window distance on clean data.

    Centers d/sigma^2 near 1 on in-distribution windows, keeping the
    similarity feature responsive instead of saturated at s or underflowed to
    0. A cross-validated sigma (tune_sigma) supersedes this when labeled
    validation episodes exist.
    """
    total = 0.0
    count = 0
    for ep in episodes:
        for row in ep.data:
            windows = partition_windows(row, w)
            total += float(np.sum((windows[:, :-1] - windows[:, -1:]) ** 2))
            count += windows.shape[0]
    mean_d = total / count if count else 0.0
    if mean_d <= 0:
        return 1.0
    return float(np.sqrt(mean_d))


def tune_sigma(
    train_episodes: Sequence[EpisodeMatrix],
    val_episodes: Sequence[EpisodeMatrix],
    grid: Sequence[float],
    config: DetectorConfig,
) -> float:
    """Pick the grid sigma maximizing mean per-episode AUROC on labeled episodes.

    Ties break toward the smallest sigma.
    """
    if not grid:
        raise ConfigError("sigma grid is empty")
    for i, ep in enumerate(val_episodes):
        if ep.onset is None:
            raise DataError(f"validation episode {i} has no onset; cannot compute AUROC")
    best_sigma = None
    best_score = -np.inf
    for sigma in sorted(float(g) for g in grid):
        cfg = replace(config, kernel=replace(config.kernel, sigma=sigma))
        model = train(train_episodes, cfg)
        aurocs = []
        for ep in val_episodes:
            series = score_episode(model, ep)
            labels = ep.labels()[series.first_scored :]
            aurocs.append(evaluation.auroc(series.scores, labels))
        mean_auroc = float(np.mean(aurocs))
        if mean_auroc > best_score:
            best_score = mean_auroc
            best_sigma = sigma
    assert best_sigma is not None
    return best_sigma


# ---------------------------------------------------------------------------
# CUSUM layer
# ---------------------------------------------------------------------------


def cusum_update(state: CusumState, a_t: float, params: CusumParams) -> CusumState:
    """One fold step. The alarm latches; alarm_time is the 0-based update index."""
    statistic = max(0.0, state.statistic + (a_t - params.target - params.slack))
    alarmed = state.alarmed
    alarm_time = state.alarm_time
    if not alarmed and statistic > params.threshold:
        alarmed = True
        alarm_time = state.step
    return CusumState(statistic=statistic, alarmed=alarmed, alarm_time=alarm_time, step=state.step + 1)


def run_cusum(scores: np.ndarray, params: CusumParams) -> tuple[np.ndarray, int | None]:
    """Fold a whole score stream; returns (statistic series, alarm index or None).

    Arithmetic matches cusum_update exactly, step for step.
    """
    stats = np.empty(len(scores))
    s = 0.0
    alarm = None
    drift = params.target + params.slack
    h = params.threshold
    for i, a in enumerate(scores):
        s = max(0.0, s + (float(a) - drift))
        stats[i] = s
        if alarm is None and s > h:
            alarm = i
    return stats, alarm


def fit_cusum(
    model: DetectorModel,
    train_episodes: Sequence[EpisodeMatrix],
    heldout_episodes: Sequence[EpisodeMatrix],
    false_alarm_rate: float = 0.05,
    kappa_mult: float = 0.25,
) -> CusumParams:
    """Calibrate CUSUM on in-distribution scores.

    target = mean of training-episode scores, slack = kappa_mult * their std,
    threshold = the (1 - false_alarm_rate) quantile of per-episode max
    statistics on held-out clean episodes.
    """
    if not 0 < false_alarm_rate < 1:
        raise ConfigError(f"false_alarm_rate must be in (0, 1), got {false_alarm_rate}")
    if not heldout_episodes:
        raise DataError("no held-out episodes for CUSUM threshold calibration")
    train_scores = np.concatenate([score_episode(model, ep).scores for ep in train_episodes])
    target = float(np.mean(train_scores))
    slack = float(kappa_mult * np.std(train_scores))
    probe = CusumParams(target=target, slack=slack, threshold=np.inf)
    max_stats = []
    for ep in heldout_episodes:
        stats, _ = run_cusum(score_episode(model, ep).scores, probe)
        max_stats.append(float(stats.max()) if len(stats) else 0.0)
    threshold = evaluation.calibrate_threshold(max_stats, false_alarm_rate)
    return CusumParams(target=target, slack=slack, threshold=max(threshold, 1e-9))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_model(model: DetectorModel) -> bytes:
    """Serialize to versioned JSON; round-trips scores bit-identically."""
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "forests": [forest_to_dict(f) for f in model.forests],
        "cusum": None
        if model.cusum is None
        else {"target": model.cusum.target, "slack": model.cusum.slack, "threshold": model.cusum.threshold},
    }
    return json.dumps(payload, separators=(",", ":")).encode("utf-8")


def load_model(payload: bytes) -> DetectorModel:
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelLoadError(f"model payload is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelLoadError("model payload missing version tag")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise VersionError(f"unsupported model version {doc['version']!r}, expected {MODEL_FORMAT_VERSION}")
    try:
        config = DetectorConfig.from_dict(doc["config"])
        forests = [forest_from_dict(f) for f in doc["forests"]]
        cusum_doc = doc.get("cusum")
        cusum = (
            None
            if cusum_doc is None
            else CusumParams(
                target=float(cusum_doc["target"]),
                slack=float(cusum_doc["slack"]),
                threshold=float(cusum_doc["threshold"]),
            )
        )
        return DetectorModel(forests=forests, config=config, n_dims=len(forests), cusum=cusum)
    except ModelLoadError:
        raise
    except (KeyError, TypeError, ValueError, ConfigError, ShapeError) as exc:
        raise ModelLoadError(f"malformed model payload: {exc}") from exc
