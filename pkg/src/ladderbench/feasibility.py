"""Throughput feasibility: who clears a deployment rate, and at what quality.

Throughput is windows per second. The inference rate N / t_inf decides
feasibility against a target rate tau (inclusive: wps == tau passes);
the full-run rate N / t_e2e exists for the fit-overhead ratio report.
A sweep aggregates seed repeats first (mean per configuration), then
takes the best feasible quality per entity, so one lucky seed cannot
carry an infeasible configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ProtocolViolationError
from .harness import RunRecord

#: Default grid of deployment rates (windows per second) for sweeps.
DEFAULT_TAUS: tuple[float, ...] = (50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 1e4, 1e5)

#: Estimator facts recorded next to every feasibility report.
REPORT_METADATA = {
    "feasibility_rule": "wps >= tau (inclusive)",
    "quantile_estimator": "linear interpolation",
    "seed_aggregation": "arithmetic mean per configuration before best-feasible selection",
}


@dataclass(frozen=True)
class ThroughputPoint:
    """Windows-per-second rates for one run."""

    wps_inference: float
    wps_fullrun: float


def _describe(record: RunRecord) -> str:
    return (f"{record.method_id}/{record.dataset_id}/{record.entity_id}"
            f"@{record.tier.tier_id} seed={record.seed}")


def throughput(record: RunRecord) -> ThroughputPoint:
    """Inference and full-run throughput of one completed run."""
    if not record.ok or record.timing is None or record.N is None:
        raise DataError(f"run {_describe(record)} has no usable timing")
    t_inf = record.timing.t_inf
    t_e2e = record.timing.total_time_s
    if t_inf <= 0 or t_e2e <= 0:
        raise DataError(f"run {_describe(record)} has non-positive timing")
    return ThroughputPoint(wps_inference=record.N / t_inf, wps_fullrun=record.N / t_e2e)


def is_feasible(wps: float, tau: float) -> bool:
    """A rate meets a target exactly at the boundary as well."""
    return wps >= tau


def fit_overhead_ratio(record: RunRecord) -> float:
    """How much slower a cold start is than steady-state inference.

    t_e2e / t_inf. Fallback-timed records give exactly 1.0 by
    construction; report layers mark those as uninformative.
    """
    point = throughput(record)
    return point.wps_inference / point.wps_fullrun


def quantiles(values: Sequence[float], probabilities: Sequence[float]) -> list[float]:
    """Quantiles with linear interpolation between order statistics."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise DataError("cannot take quantiles of an empty sample")
    return [float(q) for q in np.quantile(arr, probabilities, method="linear")]


def check_window_freeze(records: Iterable[RunRecord]) -> None:
    """Require one window length per method across the records.

    Sweeps compare throughput across tiers, so the scored-unit count
    must not move with the tier; mixing window lengths for one method
    is a protocol violation.
    """
    seen: dict[tuple[str, str], dict[int, list[str]]] = {}
    for record in records:
        if record.w is None:
            continue
        key = (record.method_id, record.dataset_id)
        seen.setdefault(key, {}).setdefault(record.w, []).append(_describe(record))
    for (method_id, dataset_id), by_w in seen.items():
        if len(by_w) > 1:
            detail = "; ".join(
                f"w={w}: {', '.join(names[:3])}" for w, names in sorted(by_w.items())
            )
            raise ProtocolViolationError(
                f"{method_id} on {dataset_id} mixes window lengths across records ({detail})"
            )


@dataclass(frozen=True)
class FeasibilityCell:
    """One (method, dataset, tau) row of a sweep."""

    method_id: str
    dataset_id: str
    tau: float
    n_entities: int
    n_covered: int
    coverage: float
    mean_best_auc_pr: float | None
    low_coverage_flag: bool


@dataclass(frozen=True)
class FeasibilityReport:
    cells: tuple[FeasibilityCell, ...]
    taus: tuple[float, ...]


@dataclass(frozen=True)
class _ConfigPoint:
    """Seed-aggregated view of one configuration on one entity."""

    mean_wps: float
    mean_auc: float | None


def _config_points(records: list[RunRecord]) -> list[_ConfigPoint]:
    groups: dict[tuple, list[RunRecord]] = {}
    for record in records:
        params = tuple(sorted(record.scaled_config.values().items())) if record.scaled_config else ()
        groups.setdefault((record.tier.tier_id, params), []).append(record)
    points = []
    for group in groups.values():
        wps = [throughput(r).wps_inference for r in group]
        aucs = [r.auc_pr for r in group if r.auc_pr is not None]
        points.append(_ConfigPoint(
            mean_wps=float(np.mean(wps)),
            mean_auc=float(np.mean(aucs)) if aucs else None,
        ))
    return points


def best_feasible_auc(points: Iterable[_ConfigPoint], tau: float) -> float | None:
    """Best seed-mean quality among configurations clearing tau, if any."""
    feasible = [p.mean_auc for p in points if is_feasible(p.mean_wps, tau) and p.mean_auc is not None]
    return max(feasible) if feasible else None


def sweep(records: Sequence[RunRecord], taus: Sequence[float] = DEFAULT_TAUS) -> FeasibilityReport:
    """Coverage and best-feasible quality per (method, dataset, tau).

    An entity is covered at tau when at least one of its measured
    configurations is feasible there; coverage below one half raises
    the low-coverage flag for that cell. Coverage can only shrink as
    tau grows.
    """
    check_window_freeze(records)
    by_group: dict[tuple[str, str], dict[str, list[RunRecord]]] = {}
    for record in records:
        by_group.setdefault((record.method_id, record.dataset_id), {}) \
            .setdefault(record.entity_id, []).append(record)

    cells = []
    for (method_id, dataset_id) in sorted(by_group):
        entities = by_group[(method_id, dataset_id)]
        entity_points = {
            entity_id: _config_points([r for r in runs if r.ok and r.timing is not None])
            for entity_id, runs in sorted(entities.items())
        }
        for tau in taus:
            best_by_entity = {
                entity_id: best_feasible_auc(points, tau)
                for entity_id, points in entity_points.items()
            }
            covered = {
                entity_id: best
                for entity_id, best in best_by_entity.items()
                if any(is_feasible(p.mean_wps, tau) for p in entity_points[entity_id])
            }
            quality = [best for best in covered.values() if best is not None]
            n_entities = len(entity_points)
            coverage = len(covered) / n_entities if n_entities else 0.0
            cells.append(FeasibilityCell(
                method_id=method_id,
                dataset_id=dataset_id,
                tau=float(tau),
                n_entities=n_entities,
                n_covered=len(covered),
                coverage=coverage,
                mean_best_auc_pr=float(np.mean(quality)) if quality else None,
                low_coverage_flag=coverage < 0.5,
            ))
    return FeasibilityReport(cells=tuple(cells), taus=tuple(float(t) for t in taus))


def pareto_front(records: Sequence[RunRecord]) -> list[RunRecord]:
    """Non-dominated records under (maximise wps_inference, maximise auc_pr).

    A record is removed only when some other record beats it strictly on
    both axes, so ties survive. The front comes back sorted by
    descending throughput and is a fixed point: applying this to its
    own output returns it unchanged.
    """
    points = []
    for record in records:
        if record.auc_pr is None:
            raise DataError(f"run {_describe(record)} has no quality value for a Pareto front")
        points.append((throughput(record).wps_inference, record.auc_pr, record))
    front = [
        (wps, auc, record)
        for wps, auc, record in points
        if not any(o_wps > wps and o_auc > auc for o_wps, o_auc, _ in points)
    ]
    front.sort(key=lambda p: (-p[0], -p[1]))
    return [record for _, _, record in front]
