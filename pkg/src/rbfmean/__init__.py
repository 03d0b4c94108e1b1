"""Two-feature isolation-forest OOD detection for sequential observations.

Windows of a multivariate stream are summarized per dimension by an RBF
similarity (local shape) and the window mean (global level); per-dimension
isolation forests score each window and the scores are averaged into one
anomaly value per timestep. Includes a synthetic benchmark generator, an
evaluation harness, and a CLI pipeline.
"""

from .core import EpisodeMatrix, Window
from .detector import (
    DetectorConfig,
    DetectorModel,
    load_model,
    save_model,
    score_episode,
    train,
)
from .features import KernelParams
from .iforest import ForestConfig

__all__ = [
    "EpisodeMatrix",
    "Window",
    "DetectorConfig",
    "DetectorModel",
    "KernelParams",
    "ForestConfig",
    "train",
    "score_episode",
    "save_model",
    "load_model",
]

__version__ = "0.1.0"
