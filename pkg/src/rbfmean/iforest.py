"""Isolation forest built from scratch.

Each tree recursively partitions a uniform random subsample with axis-aligned
random splits; points isolated by short paths are anomalous. The anomaly score
is 2^(-E[h(x)] / c(psi)) in (0, 1), where c(n) is the expected unsuccessful
binary-search-tree path length.

Randomness contract (the reproducibility surface):
  * tree `i` of a forest draws from PCG64 seeded by the tuple (seed, i);
  * when the subsample is smaller than the data, the subsample indices are the
    tree generator's first draw (choice without replacement), otherwise no
    draw is consumed and all points are used in order;
  * per node, one feature index is drawn uniformly over the features that are
    non-constant on the node's subset, then one threshold uniformly in that
    feature's (min, max); leaves draw nothing;
  * children are built depth-first, left before right.

Points go left when feature value < threshold, right otherwise. A threshold
that lands exactly on the subset minimum is nudged one ulp up so both children
are always non-empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, DataError, InsufficientDataError, ShapeError
from .rng import rng_from

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class ForestConfig:
    """Ensemble settings. Defaults are the canonical isolation-forest choices."""

    n_trees: int = 100
    subsample: int = 256
    max_depth: int | None = None  # None -> ceil(log2(effective subsample))
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.subsample < 2:
            raise ConfigError(f"subsample must be >= 2, got {self.subsample}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if int(self.seed) < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class IsolationTree:
    """Flat node storage. Leaves have feature == -1 and children == -1.

    Node 0 is the root; children precede later siblings (depth-first,
    left-first build order).
    """

    feature: np.ndarray    # int32, split feature, -1 at leaves
    threshold: np.ndarray  # float64, split value, 0.0 at leaves
    left: np.ndarray       # int32 node index, -1 at leaves
    right: np.ndarray      # int32 node index, -1 at leaves
    size: np.ndarray       # int64, training points reaching the node

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


@dataclass(frozen=True)
class IsolationForest:
    trees: list[IsolationTree]
    psi: int          # per-tree training subset size (normalization constant input)
    dim: int
    config: ForestConfig
    _packed: dict | None = field(default=None, repr=False, compare=False)

    def packed(self) -> dict:
        """Concatenated node arrays for vectorized scoring (cached)."""
        if self._packed is None:
            object.__setattr__(self, "_packed", _pack_forest(self))
        return self._packed  # type: ignore[return-value]


def c_factor(n: int) -> float:
    """Expected unsuccessful-search path length in a BST on n points.

    c(n) = 2 H(n-1) - 2(n-1)/n for n > 2, c(2) = 1, c(n <= 1) = 0, with the
    harmonic number approximated by ln(m) + Euler-Mascheroni.
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def fit_forest(vectors: np.ndarray, config: ForestConfig) -> IsolationForest:
    """Fit an ensemble of isolation trees on (n, dim) feature vectors.

    Deterministic given (vectors, config); see the module docstring for the
    randomness contract.

    Raises:
        InsufficientDataError: fewer than 2 vectors.
        DataError: NaN/Inf in the input.
    """
    x = np.ascontiguousarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected (n, dim) feature vectors, got shape {x.shape}")
    n, dim = x.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 feature vectors, got {n}")
    if not np.all(np.isfinite(x)):
        raise DataError("feature vectors contain NaN or Inf")

    psi = min(config.subsample, n)
    max_depth = config.max_depth if config.max_depth is not None else max(1, math.ceil(math.log2(psi)))

    trees = []
    for tree_idx in range(config.n_trees):
        rng = rng_from(config.seed, tree_idx)
        if psi < n:
            idx = rng.choice(n, size=psi, replace=False)
            sample = x[idx]
        else:
            sample = x
        trees.append(_build_tree(sample, max_depth, rng))
    return IsolationForest(trees=trees, psi=psi, dim=dim, config=config)


def _build_tree(sample: np.ndarray, max_depth: int, rng: np.random.Generator) -> IsolationTree:
    n, dim = sample.shape
    # Hot path runs on plain Python lists; numpy per-node overhead dominates
    # at these subset sizes.
    cols = [sample[:, f].tolist() for f in range(dim)]
    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    sizes: list[int] = []

    def build(pos: list[int], depth: int) -> int:
        node_id = len(features)
        k = len(pos)
        if k <= 1 or depth >= max_depth:
            features.append(-1)
            thresholds.append(0.0)
            lefts.append(-1)
            rights.append(-1)
            sizes.append(k)
            return node_id
        candidates = []
        spans = []
        for f in range(dim):
            col = cols[f]
            vals = [col[i] for i in pos]
            lo, hi = min(vals), max(vals)
            if lo < hi:
                candidates.append(f)
                spans.append((lo, hi))
        if not candidates:
            # constant in every feature: no valid split exists
            features.append(-1)
            thresholds.append(0.0)
            lefts.append(-1)
            rights.append(-1)
            sizes.append(k)
            return node_id
        pick = int(rng.integers(len(candidates)))
        f = candidates[pick]
        lo, hi = spans[pick]
        v = float(rng.uniform(lo, hi))
        if v == lo:
            v = math.nextafter(lo, hi)
        col = cols[f]
        left_pos = []
        right_pos = []
        la, ra = left_pos.append, right_pos.append
        for i in pos:
            (la if col[i] < v else ra)(i)
        features.append(f)
        thresholds.append(v)
        lefts.append(-2)  # patched below
        rights.append(-2)
        sizes.append(k)
        left_id = build(left_pos, depth + 1)
        right_id = build(right_pos, depth + 1)
        lefts[node_id] = left_id
        rights[node_id] = right_id
        return node_id

    build(list(range(n)), 0)
    return IsolationTree(
        feature=np.asarray(features, dtype=np.int32),
        threshold=np.asarray(thresholds, dtype=np.float64),
        left=np.asarray(lefts, dtype=np.int32),
        right=np.asarray(rights, dtype=np.int32),
        size=np.asarray(sizes, dtype=np.int64),
    )


def path_length(tree: IsolationTree, x: np.ndarray) -> float:
    """Edges traversed to x's leaf, plus c(leaf size) for unresolved leaves."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D feature vector, got shape {x.shape}")
    if np.any(tree.feature >= x.shape[0]):
        raise DataError(f"vector of dim {x.shape[0]} does not match tree features")
    node = 0
    depth = 0
    while tree.feature[node] >= 0:
        if x[tree.feature[node]] < tree.threshold[node]:
            node = int(tree.left[node])
        else:
            node = int(tree.right[node])
        depth += 1
    return depth + c_factor(int(tree.size[node]))


def _c_factor_array(sizes: np.ndarray) -> np.ndarray:
    sizes = np.asarray(sizes, dtype=np.float64)
    out = np.zeros_like(sizes)
    out[sizes == 2] = 1.0
    big = sizes > 2
    n = sizes[big]
    out[big] = 2.0 * (np.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n
    return out


def _pack_forest(forest: IsolationForest) -> dict:
    offsets = np.zeros(len(forest.trees), dtype=np.int64)
    total = 0
    for i, tree in enumerate(forest.trees):
        offsets[i] = total
        total += tree.n_nodes
    feature = np.concatenate([t.feature.astype(np.int64) for t in forest.trees])
    threshold = np.concatenate([t.threshold for t in forest.trees])
    left = np.concatenate(
        [np.where(t.left >= 0, t.left + off, -1).astype(np.int64) for t, off in zip(forest.trees, offsets)]
    )
    right = np.concatenate(
        [np.where(t.right >= 0, t.right + off, -1).astype(np.int64) for t, off in zip(forest.trees, offsets)]
    )
    leaf_adjust = _c_factor_array(np.concatenate([t.size for t in forest.trees]))
    leaf_adjust[feature >= 0] = 0.0
    return {
        "offsets": offsets,
        "feature": feature,
        "threshold": threshold,
        "left": left,
        "right": right,
        "leaf_adjust": leaf_adjust,
    }


def score_batch(forest: IsolationForest, x: np.ndarray) -> np.ndarray:
    """Anomaly scores for (m, dim) vectors; vectorized over trees and points."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != forest.dim:
        raise ShapeError(f"expected (m, {forest.dim}) vectors, got shape {x.shape}")
    packed = forest.packed()
    m = x.shape[0]
    n_trees = len(forest.trees)
    pos = np.broadcast_to(packed["offsets"][:, None], (n_trees, m)).copy()
    depth = np.zeros((n_trees, m), dtype=np.int32)
    xt = x.T
    point_idx = np.arange(m)
    for _ in range(packed["feature"].size):  # safety bound; loop exits at the deepest leaf
        feat = packed["feature"][pos]
        active = feat >= 0
        if not active.any():
            break
        value = xt[feat, point_idx]  # junk where feat == -1, masked below
        go_left = value < packed["threshold"][pos]
        nxt = np.where(go_left, packed["left"][pos], packed["right"][pos])
        pos = np.where(active, nxt, pos)
        depth += active
    expected_h = (depth + packed["leaf_adjust"][pos]).mean(axis=0)
    return np.asarray(2.0 ** (-expected_h / c_factor(forest.psi)))


def anomaly_score(forest: IsolationForest, x: np.ndarray) -> float:
    """Anomaly score in (0, 1) for one feature vector; higher = more anomalous."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != forest.dim:
        raise ShapeError(f"expected a vector of dim {forest.dim}, got shape {x.shape}")
    return float(score_batch(forest, x[None, :])[0])


# ---------------------------------------------------------------------------
# Persistence (node lists with child indices; floats survive JSON round trips
# at full binary precision via shortest-repr decimal)
# ---------------------------------------------------------------------------


def forest_to_dict(forest: IsolationForest) -> dict[str, Any]:
    return {
        "psi": forest.psi,
        "dim": forest.dim,
        "config": {
            "n_trees": forest.config.n_trees,
            "subsample": forest.config.subsample,
            "max_depth": forest.config.max_depth,
            "seed": forest.config.seed,
        },
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "size": t.size.tolist(),
            }
            for t in forest.trees
        ],
    }


def forest_from_dict(payload: dict[str, Any]) -> IsolationForest:
    from .errors import ModelLoadError

    try:
        cfg = payload["config"]
        config = ForestConfig(
            n_trees=int(cfg["n_trees"]),
            subsample=int(cfg["subsample"]),
            max_depth=None if cfg["max_depth"] is None else int(cfg["max_depth"]),
            seed=int(cfg["seed"]),
        )
        trees = []
        for rec in payload["trees"]:
            tree = IsolationTree(
                feature=np.asarray(rec["feature"], dtype=np.int32),
                threshold=np.asarray(rec["threshold"], dtype=np.float64),
                left=np.asarray(rec["left"], dtype=np.int32),
                right=np.asarray(rec["right"], dtype=np.int32),
                size=np.asarray(rec["size"], dtype=np.int64),
            )
            n = tree.n_nodes
            lengths = {len(rec[k]) for k in ("feature", "threshold", "left", "right", "size")}
            if lengths != {n} or n == 0:
                raise ModelLoadError("inconsistent tree node arrays")
            if np.any(tree.left >= n) or np.any(tree.right >= n):
                raise ModelLoadError("tree child index out of range")
            trees.append(tree)
        forest = IsolationForest(trees=trees, psi=int(payload["psi"]), dim=int(payload["dim"]), config=config)
    except ModelLoadError:
        raise
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise ModelLoadError(f"malformed forest payload: {exc}") from exc
    return forest
