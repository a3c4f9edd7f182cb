"""Local outlier factor with exact brute-force neighbour search.

Test points are scored against the train set: a point's local
reachability density is compared with that of its k nearest train
neighbours, so values near 1 mean "as dense as the neighbourhood" and
values well above 1 mean isolated. Neighbour searches are exhaustive;
distance ties are broken by lower train-row index so results do not
depend on search order. Duplicated points cannot divide by zero: the
density denominator is clamped at the smallest positive float.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from ..data import TimeSeries
from ..errors import ConfigError
from ..ladder import DetectorConfig, ScalingRole
from .base import Detector

_BLOCK = 512
_TINY = np.finfo(np.float64).tiny


def _distance_block(queries: np.ndarray, corpus: np.ndarray) -> np.ndarray:
    # Broadcast instead of a matrix product: summation order is then
    # fixed, so results cannot vary with the BLAS thread count.
    diff = queries[:, None, :] - corpus[None, :, :]
    return np.sqrt(np.einsum("qcd,qcd->qc", diff, diff))


def _knn(queries: np.ndarray, corpus: np.ndarray, k: int,
         exclude_self: bool) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest corpus rows for each query row.

    Returns (neighbour indices, neighbour distances), each (n_queries, k),
    neighbours ordered by (distance, corpus index). With exclude_self,
    query row i skips corpus row i (used for train-vs-train search).
    """
    n = queries.shape[0]
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        dist = _distance_block(queries[start:stop], corpus)
        if exclude_self:
            rows = np.arange(start, stop)
            dist[rows - start, rows] = np.inf
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.take_along_axis(dist, order, axis=1)
    return indices, distances


def _lrd(neighbour_dists: np.ndarray, neighbour_kdist: np.ndarray) -> np.ndarray:
    """Local reachability density from per-neighbour distances and k-distances."""
    reach = np.maximum(neighbour_dists, neighbour_kdist)
    return 1.0 / np.maximum(reach.mean(axis=1), _TINY)


@dataclass(frozen=True)
class LofModel:
    train: np.ndarray
    kdist: np.ndarray  # (T_train,) distance to each train row's k-th neighbour
    lrd: np.ndarray    # (T_train,) local reachability density of train rows
    k: int


def fit(train: np.ndarray, n_neighbors: int) -> LofModel:
    T = train.shape[0]
    if n_neighbors < 1:
        raise ConfigError(f"lof: n_neighbors must be >= 1, got {n_neighbors}")
    if n_neighbors >= T:
        raise ConfigError(f"lof: n_neighbors={n_neighbors} needs a train span larger than {T} rows")
    idx, dist = _knn(train, train, n_neighbors, exclude_self=True)
    kdist = dist[:, -1]
    lrd = _lrd(dist, kdist[idx])
    return LofModel(train=train, kdist=kdist, lrd=lrd, k=n_neighbors)


def score(model: LofModel, test: np.ndarray) -> np.ndarray:
    idx, dist = _knn(test, model.train, model.k, exclude_self=False)
    lrd_test = _lrd(dist, model.kdist[idx])
    return model.lrd[idx].mean(axis=1) / lrd_test


def fit_score(train: np.ndarray, test: np.ndarray, n_neighbors: int) -> np.ndarray:
    return score(fit(train, n_neighbors), test)


class LofDetector(Detector):
    method_id = "lof"

    def base_config(self) -> DetectorConfig:
        return DetectorConfig(method_id=self.method_id, params={"n_neighbors": (20, ScalingRole.WORK)})

    def fit(self, train: TimeSeries, params: Mapping[str, int], seed: int) -> LofModel:
        return fit(train.values, params["n_neighbors"])

    def score(self, model: Any, test: TimeSeries) -> np.ndarray:
        return score(model, test.values)
