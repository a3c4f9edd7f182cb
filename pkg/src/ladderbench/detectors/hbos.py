"""Histogram-based outlier scoring.

Per-feature equal-width histograms are built over the train range with
additive smoothing; a point's score is the summed negative log density
of its bins. Features with zero train range contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from ..data import TimeSeries
from ..errors import ConfigError
from ..ladder import DetectorConfig, ScalingRole
from .base import Detector


@dataclass(frozen=True)
class HbosModel:
    lo: np.ndarray            # (d,) train minima
    hi: np.ndarray            # (d,) train maxima
    log_density: np.ndarray   # (d, n_bins) smoothed log densities
    degenerate: np.ndarray    # (d,) bool, True where hi == lo
    n_bins: int


def _bin_indices(values: np.ndarray, lo: np.ndarray, hi: np.ndarray, n_bins: int) -> np.ndarray:
    width = (hi - lo) / n_bins
    # Zero-range features are masked out by callers; avoid 0/0 here.
    width = np.where(width > 0, width, 1.0)
    idx = np.floor((values - lo) / width).astype(np.int64)
    # Out-of-range points, and the train maximum itself, land in edge bins.
    return np.clip(idx, 0, n_bins - 1)


def fit(train: np.ndarray, n_bins: int) -> HbosModel:
    if n_bins < 1:
        raise ConfigError(f"hbos: n_bins must be >= 1, got {n_bins}")
    T, d = train.shape
    lo = train.min(axis=0)
    hi = train.max(axis=0)
    degenerate = hi == lo
    idx = _bin_indices(train, lo, hi, n_bins)
    counts = np.zeros((d, n_bins), dtype=np.int64)
    for j in range(d):
        counts[j] = np.bincount(idx[:, j], minlength=n_bins)
    log_density = np.log((counts + 1.0) / (T + n_bins))
    return HbosModel(lo=lo, hi=hi, log_density=log_density, degenerate=degenerate, n_bins=n_bins)


def score(model: HbosModel, test: np.ndarray) -> np.ndarray:
    idx = _bin_indices(test, model.lo, model.hi, model.n_bins)
    out = np.zeros(test.shape[0], dtype=np.float64)
    for j in range(test.shape[1]):
        if model.degenerate[j]:
            continue
        out -= model.log_density[j, idx[:, j]]
    return out


def fit_score(train: np.ndarray, test: np.ndarray, n_bins: int) -> np.ndarray:
    return score(fit(train, n_bins), test)


class HbosDetector(Detector):
    method_id = "hbos"

    def base_config(self) -> DetectorConfig:
        return DetectorConfig(method_id=self.method_id, params={"n_bins": (40, ScalingRole.WORK)})

    def fit(self, train: TimeSeries, params: Mapping[str, int], seed: int) -> HbosModel:
        return fit(train.values, params["n_bins"])

    def score(self, model: Any, test: TimeSeries) -> np.ndarray:
        return score(model, test.values)
