"""Two-entry window descriptor: RBF similarity of the last sample, window mean.

For a univariate window x[0..w-1] the local-shape feature is

    d = sum_{i=1}^{w-1} (x[w-1] - x[w-1-i])^2      (squared gaps to the last sample)
    k = s * exp(-d / sigma^2)                      (RBF similarity, in (0, s])

and the global-level feature is the arithmetic mean over all w entries.
Ablation variants keep only one of the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, ShapeError

Variant = Literal["full", "rbf_only", "mean_only"]
VARIANTS: tuple[str, ...] = ("full", "rbf_only", "mean_only")


@dataclass(frozen=True)
class KernelParams:
    """RBF kernel scaling: `s` caps the similarity, `sigma` is the bandwidth."""

    s: float = 1.5
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.s) and self.s > 0):
            raise ConfigError(f"kernel scale s must be finite and > 0, got {self.s}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"kernel bandwidth sigma must be finite and > 0, got {self.sigma}")


def feature_dim(variant: str) -> int:
    """Feature-vector dimensionality for a variant (2 for full, 1 for ablations)."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    return 2 if variant == "full" else 1


def rbf_distance(row: np.ndarray) -> float:
    """Sum of squared gaps between the last entry and every earlier entry.

    Zero iff all earlier entries equal the last.
    """
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.shape[0] < 2:
        raise ShapeError(f"rbf_distance needs a 1-D window of width >= 2, got shape {row.shape}")
    return float(np.sum((row[:-1] - row[-1]) ** 2))


def rbf_similarity(d: float, params: KernelParams) -> float:
    """s * exp(-d / sigma^2); equals s iff d == 0, decays monotonically in d.

    Underflows to 0.0 for huge d; callers treat the feature range as [0, s].
    """
    if d < 0:
        raise ValueError(f"rbf distance must be >= 0, got {d}")
    return float(params.s * np.exp(-d / (params.sigma * params.sigma)))


def extract_features(row: np.ndarray, params: KernelParams, variant: Variant = "full") -> np.ndarray:
    """Feature vector for one univariate window.

    Returns [rbf, mean] for the full variant, [rbf] or [mean] for ablations.
    """
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.shape[0] < 2:
        raise ShapeError(f"extract_features needs a 1-D window of width >= 2, got shape {row.shape}")
    if variant == "mean_only":
        return np.array([np.mean(row)])
    k = rbf_similarity(rbf_distance(row), params)
    if variant == "rbf_only":
        return np.array([k])
    if variant == "full":
        return np.array([k, np.mean(row)])
    raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")


def extract_batch(windows: np.ndarray, params: KernelParams, variant: Variant = "full") -> np.ndarray:
    """Feature vectors for a stack of univariate windows, shape (M, w) -> (M, dim).

    Row-for-row identical to extract_features; vectorized so featurizing an
    episode stays linear in its length.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 2 or windows.shape[1] < 2:
        raise ShapeError(f"extract_batch needs shape (M, w) with w >= 2, got {windows.shape}")
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    cols = []
    if variant != "mean_only":
        d = np.sum((windows[:, :-1] - windows[:, -1:]) ** 2, axis=1)
        cols.append(params.s * np.exp(-d / (params.sigma * params.sigma)))
    if variant != "rbf_only":
        cols.append(np.mean(windows, axis=1))
    return np.stack(cols, axis=1)
