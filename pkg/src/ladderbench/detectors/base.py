"""Detector contract shared by built-in methods and the harness.

A detector exposes a base config (integer parameters with scaling
roles), a windowing declaration, and separate fit / score phases so the
harness can time them independently. Scores are anomaly scores: higher
means more anomalous, one score per scored unit.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Any, ClassVar, Mapping

import numpy as np

from ..data import TimeSeries, WindowingSpec
from ..errors import PlanError


@dataclass(frozen=True)
class ScoreSeries:
    """Scores for the scored units of one test span.

    scores has one entry per scored unit; scored_mask marks which test
    timestamps carry a score (for windowed methods the first w - 1 do
    not). mask.sum() always equals len(scores).
    """

    scores: np.ndarray
    scored_mask: np.ndarray

    def __post_init__(self) -> None:
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        mask = np.ascontiguousarray(self.scored_mask, dtype=bool)
        if scores.ndim != 1 or mask.ndim != 1:
            raise ValueError("scores and scored_mask must be 1-D")
        if int(mask.sum()) != scores.shape[0]:
            raise ValueError(
                f"scored_mask marks {int(mask.sum())} timestamps for {scores.shape[0]} scores"
            )
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        scores.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "scored_mask", mask)


class Detector(abc.ABC):
    """One anomaly detection method with separate fit and score phases."""

    method_id: ClassVar[str]
    #: Whether the run seed changes the output. Classical methods are
    #: deterministic; the harness pins their internal seed.
    consumes_seed: ClassVar[bool] = False
    windowing: ClassVar[WindowingSpec] = WindowingSpec(windowed=False, w=1)

    def prepare(self, train: TimeSeries, test: TimeSeries) -> None:
        """Untimed setup before a run (spawning processes, staging files)."""

    def close(self) -> None:
        """Release per-run resources; called even when the run failed."""

    def child_info(self) -> dict | None:
        """Side-channel facts about an external child process, if any."""
        return None

    @abc.abstractmethod
    def base_config(self):  # -> DetectorConfig, untyped to avoid an import cycle
        ...

    @abc.abstractmethod
    def fit(self, train: TimeSeries, params: Mapping[str, int], seed: int) -> Any:
        """Fit on the train span; returns an opaque model object."""

    @abc.abstractmethod
    def score(self, model: Any, test: TimeSeries) -> np.ndarray:
        """Score the test span with a fitted model; returns (N,) float64."""


_REGISTRY: dict[str, Detector] = {}


def register_detector(detector: Detector, replace: bool = False) -> None:
    if detector.method_id in _REGISTRY and not replace:
        raise PlanError(f"detector {detector.method_id!r} is already registered")
    _REGISTRY[detector.method_id] = detector


def unregister_detector(method_id: str) -> None:
    _REGISTRY.pop(method_id, None)


def get_detector(method_id: str) -> Detector:
    try:
        return _REGISTRY[method_id]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise PlanError(f"unknown method {method_id!r} (known: {known})") from None


def registered_methods() -> list[str]:
    return sorted(_REGISTRY)
