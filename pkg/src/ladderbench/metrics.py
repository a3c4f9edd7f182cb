"""Window alignment and area under the precision-recall curve.

AUC-PR is computed by step integration over the distinct score values:
tied scores enter as one threshold block, and the area is the sum of
precision times recall increment per block. Unscored leading timestamps
of windowed methods are excluded from evaluation, never zero-filled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detectors.base import ScoreSeries
from .errors import StructuralError, UndefinedMetricError


def align_window_scores(window_scores: np.ndarray, w: int, T: int) -> ScoreSeries:
    """Attach window scores to timestamps: window i ends at timestamp i + w - 1.

    The first w - 1 timestamps of the span carry no score and are
    masked out. For w == 1 every timestamp is scored.
    """
    scores = np.asarray(window_scores, dtype=np.float64)
    if scores.ndim != 1:
        raise StructuralError(f"window scores must be 1-D, got shape {scores.shape}")
    expected = T - w + 1
    if w < 1 or expected < 1:
        raise StructuralError(f"window length {w} does not fit a span of {T} timestamps")
    if scores.shape[0] != expected:
        raise StructuralError(
            f"got {scores.shape[0]} window scores for T={T}, w={w} (expected {expected})"
        )
    mask = np.zeros(T, dtype=bool)
    mask[w - 1:] = True
    return ScoreSeries(scores=scores, scored_mask=mask)


def auc_pr(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the precision-recall curve by threshold-block steps.

    Ranks every scored unit by descending score, treats tied scores as a
    single block, and accumulates precision * (recall increment) block
    by block. Zero positives has no defined value and raises; zero
    negatives gives 1.0 by convention.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise StructuralError(
            f"scores and labels must be 1-D and equal length, got {scores.shape} vs {labels.shape}"
        )
    positives = int((labels == 1).sum())
    if positives == 0:
        raise UndefinedMetricError("AUC-PR is undefined without positive labels")
    if positives == scores.shape[0]:
        return 1.0

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order] == 1
    # Last index of each tied block, so cumulative counts are per-threshold.
    block_ends = np.flatnonzero(np.diff(sorted_scores) != 0)
    block_ends = np.append(block_ends, scores.shape[0] - 1)
    tp = np.cumsum(sorted_labels)[block_ends]
    seen = block_ends + 1
    precision = tp / seen
    recall = tp / positives
    recall_steps = np.diff(np.concatenate(([0.0], recall)))
    return float(np.sum(precision * recall_steps))


def random_baseline(labels: np.ndarray) -> float:
    """Expected AUC-PR of an uninformed scorer: the positive rate."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise UndefinedMetricError("cannot compute a baseline over zero units")
    return float((labels == 1).mean())


@dataclass(frozen=True)
class MetricsResult:
    """Quality summary of one scored span."""

    auc_pr: float
    baseline: float
    n_scored: int

    @property
    def lift(self) -> float:
        return self.auc_pr / self.baseline if self.baseline > 0 else float("inf")


def evaluate(score_series: ScoreSeries, labels: np.ndarray) -> MetricsResult:
    """Evaluate aligned scores against per-timestamp labels.

    Labels cover the whole span; only timestamps with scores are used.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != score_series.scored_mask.shape[0]:
        raise StructuralError(
            f"{labels.shape[0]} labels for a span of {score_series.scored_mask.shape[0]} timestamps"
        )
    active = labels[score_series.scored_mask]
    return MetricsResult(
        auc_pr=auc_pr(score_series.scores, active),
        baseline=random_baseline(active),
        n_scored=int(active.shape[0]),
    )
