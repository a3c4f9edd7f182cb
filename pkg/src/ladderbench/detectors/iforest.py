"""Isolation forest with order-independent per-tree seeding.

Each tree's RNG is seeded from a stable hash of (master seed, tree
index), so building trees in any order, or in parallel, yields an
identical forest. Scores follow the standard normalisation
2 ** (-E[path length] / c(max_samples)) and therefore lie in (0, 1),
higher meaning easier to isolate.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from ..data import TimeSeries
from ..errors import ConfigError
from ..ladder import DetectorConfig, ScalingRole
from .base import Detector


def average_path_length(n: int) -> float:
    """Expected unsuccessful-search path length in a BST of n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    harmonic = math.log(n - 1) + np.euler_gamma
    return 2.0 * harmonic - 2.0 * (n - 1) / n


def _tree_rng(master_seed: int, tree_index: int) -> np.random.Generator:
    digest = hashlib.blake2b(f"{master_seed}:{tree_index}".encode(), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


@dataclass
class _Tree:
    """Flat arrays; node 0 is the root. leaf_size < 0 marks internal nodes."""

    feature: list[int]
    threshold: list[float]
    left: list[int]
    right: list[int]
    leaf_size: list[int]

    def add_leaf(self, size: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_size.append(size)
        return len(self.feature) - 1

    def add_internal(self, feature: int, threshold: float) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_size.append(-1)
        return len(self.feature) - 1


def _build(tree: _Tree, data: np.ndarray, depth: int, height_limit: int,
           rng: np.random.Generator) -> int:
    n = data.shape[0]
    if depth >= height_limit or n <= 1:
        return tree.add_leaf(n)
    lo = data.min(axis=0)
    hi = data.max(axis=0)
    splittable = np.flatnonzero(hi > lo)
    if splittable.size == 0:
        return tree.add_leaf(n)
    feature = int(splittable[rng.integers(splittable.size)])
    threshold = float(rng.uniform(lo[feature], hi[feature]))
    below = data[:, feature] < threshold
    if not below.any() or below.all():
        return tree.add_leaf(n)
    node = tree.add_internal(feature, threshold)
    tree.left[node] = _build(tree, data[below], depth + 1, height_limit, rng)
    tree.right[node] = _build(tree, data[~below], depth + 1, height_limit, rng)
    return node


def _tree_paths(tree: _Tree, data: np.ndarray) -> np.ndarray:
    """Path length of every data row through one tree, iteratively."""
    paths = np.empty(data.shape[0], dtype=np.float64)
    stack: list[tuple[int, int, np.ndarray]] = [(0, 0, np.arange(data.shape[0]))]
    while stack:
        node, depth, rows = stack.pop()
        size = tree.leaf_size[node]
        if size >= 0:
            paths[rows] = depth + average_path_length(size)
            continue
        below = data[rows, tree.feature[node]] < tree.threshold[node]
        stack.append((tree.left[node], depth + 1, rows[below]))
        stack.append((tree.right[node], depth + 1, rows[~below]))
    return paths


@dataclass(frozen=True)
class IForestModel:
    trees: tuple[_Tree, ...]
    max_samples: int


def fit(train: np.ndarray, n_estimators: int, max_samples: int, seed: int) -> IForestModel:
    T = train.shape[0]
    if n_estimators < 1:
        raise ConfigError(f"iforest: n_estimators must be >= 1, got {n_estimators}")
    if max_samples < 2:
        raise ConfigError(f"iforest: max_samples must be >= 2, got {max_samples}")
    if max_samples > T:
        raise ConfigError(f"iforest: max_samples={max_samples} exceeds the {T}-row train span")
    height_limit = math.ceil(math.log2(max_samples))
    trees = []
    for i in range(n_estimators):
        rng = _tree_rng(seed, i)
        sample = train[rng.choice(T, size=max_samples, replace=False)]
        tree = _Tree([], [], [], [], [])
        root = _build(tree, sample, 0, height_limit, rng)
        assert root == 0
        trees.append(tree)
    return IForestModel(trees=tuple(trees), max_samples=max_samples)


def score(model: IForestModel, test: np.ndarray) -> np.ndarray:
    total = np.zeros(test.shape[0], dtype=np.float64)
    for tree in model.trees:
        total += _tree_paths(tree, test)
    mean_path = total / len(model.trees)
    return np.power(2.0, -mean_path / average_path_length(model.max_samples))


def fit_score(train: np.ndarray, test: np.ndarray, n_estimators: int,
              max_samples: int, seed: int) -> np.ndarray:
    return score(fit(train, n_estimators, max_samples, seed), test)


class IForestDetector(Detector):
    method_id = "iforest"

    def base_config(self) -> DetectorConfig:
        return DetectorConfig(
            method_id=self.method_id,
            params={
                "n_estimators": (100, ScalingRole.WORK),
                "max_samples": (256, ScalingRole.WORK),
            },
        )

    def fit(self, train: TimeSeries, params: Mapping[str, int], seed: int) -> IForestModel:
        return fit(train.values, params["n_estimators"], params["max_samples"], seed)

    def score(self, model: Any, test: TimeSeries) -> np.ndarray:
        return score(model, test.values)
