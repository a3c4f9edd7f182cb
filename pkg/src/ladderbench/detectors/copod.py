"""Copula-style tail scoring from per-feature empirical CDFs.

Left and right tail probabilities come from train ECDFs with the
P(X <= x) step convention (the right tail is the ECDF of negated
values). Each feature contributes the negative log of the tail picked
by its train skewness sign; zero skew averages the two tails.
Probabilities are clamped below at 1 / (T_train + 1) so unseen extremes
stay finite. No tunable parameters, so every tier runs identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy import stats

from ..data import TimeSeries
from ..ladder import DetectorConfig
from .base import Detector


@dataclass(frozen=True)
class CopodModel:
    sorted_values: np.ndarray   # (T_train, d) each column ascending
    sorted_negated: np.ndarray  # (T_train, d) negated columns, ascending
    skew_sign: np.ndarray       # (d,) in {-1, 0, +1}
    n_train: int


def fit(train: np.ndarray) -> CopodModel:
    skew = np.nan_to_num(stats.skew(train, axis=0))
    return CopodModel(
        sorted_values=np.sort(train, axis=0),
        sorted_negated=np.sort(-train, axis=0),
        skew_sign=np.sign(skew),
        n_train=train.shape[0],
    )


def score(model: CopodModel, test: np.ndarray) -> np.ndarray:
    T = model.n_train
    floor = 1.0 / (T + 1)
    out = np.zeros(test.shape[0], dtype=np.float64)
    for j in range(test.shape[1]):
        left = np.searchsorted(model.sorted_values[:, j], test[:, j], side="right") / T
        right = np.searchsorted(model.sorted_negated[:, j], -test[:, j], side="right") / T
        neg_log_left = -np.log(np.maximum(left, floor))
        neg_log_right = -np.log(np.maximum(right, floor))
        sign = model.skew_sign[j]
        if sign < 0:
            out += neg_log_left
        elif sign > 0:
            out += neg_log_right
        else:
            out += 0.5 * (neg_log_left + neg_log_right)
    return out


def fit_score(train: np.ndarray, test: np.ndarray) -> np.ndarray:
    return score(fit(train), test)


class CopodDetector(Detector):
    method_id = "copod"

    def base_config(self) -> DetectorConfig:
        return DetectorConfig(method_id=self.method_id, params={})

    def fit(self, train: TimeSeries, params: Mapping[str, int], seed: int) -> CopodModel:
        return fit(train.values)

    def score(self, model: Any, test: TimeSeries) -> np.ndarray:
        return score(model, test.values)
