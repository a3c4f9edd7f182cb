"""Reconstruction-error scoring on the leading principal axes.

Train data is centred and scaled per feature (zero-variance features
scale by 1), axes come from an eigendecomposition of the train
covariance sorted by descending eigenvalue, and each axis gets a
deterministic sign: its largest-magnitude loading is made positive. A
test point's score is the squared reconstruction error after projecting
onto the leading n_components axes.
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
class PcaModel:
    mean: np.ndarray        # (d,)
    scale: np.ndarray       # (d,) train stds with zeros replaced by 1
    components: np.ndarray  # (d, n_components) orthonormal columns


def fit(train: np.ndarray, n_components: int) -> PcaModel:
    d = train.shape[1]
    if not 1 <= n_components <= d:
        raise ConfigError(f"pca: n_components must be in [1, {d}], got {n_components}")
    mean = train.mean(axis=0)
    scale = train.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    z = (train - mean) / scale
    # einsum keeps the reduction order fixed regardless of BLAS threading.
    cov = np.einsum("ti,tj->ij", z, z) / train.shape[0]
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    axes = eigenvectors[:, order[:n_components]]
    for k in range(axes.shape[1]):
        pivot = int(np.argmax(np.abs(axes[:, k])))
        if axes[pivot, k] < 0:
            axes[:, k] = -axes[:, k]
    return PcaModel(mean=mean, scale=scale, components=axes)


def score(model: PcaModel, test: np.ndarray) -> np.ndarray:
    z = (test - model.mean) / model.scale
    projected = np.einsum("td,dk->tk", z, model.components)
    residual = z - np.einsum("tk,dk->td", projected, model.components)
    return np.einsum("td,td->t", residual, residual)


def fit_score(train: np.ndarray, test: np.ndarray, n_components: int) -> np.ndarray:
    return score(fit(train, n_components), test)


class PcaDetector(Detector):
    method_id = "pca"

    def base_config(self) -> DetectorConfig:
        return DetectorConfig(method_id=self.method_id, params={"n_components": (4, ScalingRole.WIDTH)})

    def fit(self, train: TimeSeries, params: Mapping[str, int], seed: int) -> PcaModel:
        return fit(train.values, params["n_components"])

    def score(self, model: Any, test: TimeSeries) -> np.ndarray:
        return score(model, test.values)
