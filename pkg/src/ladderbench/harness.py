"""Single-flight run execution with thread caps and timing discipline.

One benchmark run fits a method on an entity's train span and scores
its test span at one tier with one seed. Runs never overlap (a module
lock enforces single flight), the thread cap is applied before any
timing starts, and the monotonic clock brackets exactly the fit phase
and the scoring phase. One untimed warm-up scoring pass precedes the
timed one so first-call effects (allocation, code paths warming) do not
pollute inference time. Failures do not abort a batch: they become
FAILED records with a reason and are audit data like any other run.
"""

from __future__ import annotations

import hashlib
import logging
import os
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any

import numpy as np

from .data import LabeledSeries, SplitResult, TimeSeries, WindowingSpec, window_count
from .detectors.base import Detector, get_detector
from .errors import UndefinedMetricError
from .ladder import (
    ConfigDiff,
    DetectorConfig,
    DiffEntry,
    DivisibilityConstraint,
    RepairEvent,
    ScalingRole,
    TierSpec,
    scale_config,
)
from .metrics import align_window_scores, evaluate

logger = logging.getLogger(__name__)

#: Exported to child processes so external detectors can honour the cap.
THREAD_CAP_ENV = "ECOLAD_THREAD_CAP"

#: Classical built-in methods are seed-invariant by protocol: the run
#: seed is recorded but their internal randomness is pinned to this.
PINNED_DETECTOR_SEED = 0

_RUN_LOCK = threading.Lock()
_POOL_WIDTH = 1


class TimingSource(Enum):
    INSTRUMENTED = "INSTRUMENTED"
    E2E_FALLBACK = "E2E_FALLBACK"


@dataclass(frozen=True)
class TimingRecord:
    """Elapsed seconds for one run's phases.

    Instrumented runs carry separate fit and inference spans and
    total = fit + inference. Fallback runs carry only one end-to-end
    measurement; inference time is then taken to be the whole run.
    """

    fit_time_s: float | None
    infer_time_s: float | None
    total_time_s: float
    source: TimingSource

    @property
    def t_inf(self) -> float:
        """Inference time: the instrumented span when present, else end-to-end."""
        if self.source is TimingSource.INSTRUMENTED and self.infer_time_s is not None:
            return self.infer_time_s
        return self.total_time_s


@dataclass(frozen=True)
class Entity:
    """One series prepared for benchmarking: named, split, labels on test."""

    dataset_id: str
    entity_id: str
    train: TimeSeries
    val: TimeSeries | None
    test: TimeSeries | LabeledSeries

    @property
    def test_series(self) -> TimeSeries:
        return self.test.series if isinstance(self.test, LabeledSeries) else self.test

    @property
    def test_labels(self) -> np.ndarray | None:
        return self.test.labels if isinstance(self.test, LabeledSeries) else None


def entity_from_split(dataset_id: str, entity_id: str, split: SplitResult) -> Entity:
    return Entity(dataset_id=dataset_id, entity_id=entity_id,
                  train=split.train, val=split.val, test=split.test)


@dataclass(frozen=True)
class RunRecord:
    """Everything one run contributes to the audit log."""

    method_id: str
    dataset_id: str
    entity_id: str
    tier: TierSpec
    seed: int
    status: str
    failure_reason: str | None
    base_config: DetectorConfig | None
    scaled_config: DetectorConfig | None
    diff: ConfigDiff | None
    thread_cap_applied: int
    thread_cap_note: str | None
    warm_up: bool
    timing: TimingRecord | None
    T: int | None
    w: int | None
    N: int | None
    auc_pr: float | None
    baseline: float | None
    metric_note: str | None
    score_digest: str | None
    child: dict[str, Any] | None = None
    schema_version: int = 1

    @property
    def ok(self) -> bool:
        return self.status == "OK"


def machine_width() -> int:
    return os.cpu_count() or 1


def apply_thread_cap(tier: TierSpec) -> tuple[int, str | None]:
    """Size the compute pool for a tier and export the cap to children.

    An uncapped tier gets the full machine width. Caps above the machine
    width clamp to it; the clamp is logged and returned as a note so the
    run record shows the cap actually in force.
    """
    global _POOL_WIDTH
    width = machine_width()
    requested = tier.thread_cap if tier.thread_cap is not None else width
    applied = min(requested, width)
    note = None
    if requested > width:
        note = f"requested cap {requested} exceeds machine width {width}; clamped"
        logger.info("tier %s: %s", tier.tier_id, note)
    _POOL_WIDTH = applied
    os.environ[THREAD_CAP_ENV] = str(applied)
    return applied, note


def pool_width() -> int:
    """Width of the harness compute pool set by the last apply_thread_cap."""
    return _POOL_WIDTH


def probe_clock() -> dict[str, Any]:
    """Identify the timing clock once per batch; warn if it is coarse."""
    info = time.get_clock_info("perf_counter")
    resolution = float(info.resolution)
    if resolution > 1e-3:
        logger.warning("timing clock resolution is %.3g s; timings below that are noise", resolution)
    return {"name": "perf_counter_ns", "monotonic": True, "resolution_s": resolution}


def score_digest(scores: np.ndarray) -> str:
    """Stable digest of a score vector's float64 bytes."""
    return hashlib.sha256(np.ascontiguousarray(scores, dtype=np.float64).tobytes()).hexdigest()


def _effective_windowing(detector: Detector, scaled: DetectorConfig) -> WindowingSpec:
    """Windowing actually in force after scaling.

    For windowed methods with exactly one WINDOW-role parameter, that
    parameter's scaled value is the window length; otherwise the
    declared length stands.
    """
    declared = detector.windowing
    if not declared.windowed:
        return declared
    window_params = [v for v, role in scaled.params.values() if role is ScalingRole.WINDOW]
    if len(window_params) == 1:
        return WindowingSpec(windowed=True, w=window_params[0])
    return declared


def _failed(record: RunRecord, reason: str) -> RunRecord:
    return replace(record, status="FAILED", failure_reason=reason)


def run_benchmark(
    method_id: str,
    entity: Entity,
    tier: TierSpec,
    seed: int,
    instrumented: bool = True,
    detector: Detector | None = None,
) -> RunRecord:
    """Execute one (method, entity, tier, seed) run and return its record.

    Never raises for detector-side problems: configuration errors,
    repair failures, and scoring faults come back as FAILED records
    with the reason captured. Exceptions escape only for harness bugs.
    """
    with _RUN_LOCK:
        return _run_locked(method_id, entity, tier, seed, instrumented, detector)


def _run_locked(
    method_id: str,
    entity: Entity,
    tier: TierSpec,
    seed: int,
    instrumented: bool,
    detector: Detector | None,
) -> RunRecord:
    applied, note = apply_thread_cap(tier)
    record = RunRecord(
        method_id=method_id,
        dataset_id=entity.dataset_id,
        entity_id=entity.entity_id,
        tier=tier,
        seed=seed,
        status="OK",
        failure_reason=None,
        base_config=None,
        scaled_config=None,
        diff=None,
        thread_cap_applied=applied,
        thread_cap_note=note,
        warm_up=False,
        timing=None,
        T=entity.test_series.length,
        w=None,
        N=None,
        auc_pr=None,
        baseline=None,
        metric_note=None,
        score_digest=None,
    )

    if detector is None:
        try:
            detector = get_detector(method_id)
        except Exception as exc:
            return _failed(record, f"{type(exc).__name__}: {exc}")

    try:
        detector.prepare(entity.train, entity.test_series)
    except Exception as exc:
        return _failed(record, f"{type(exc).__name__}: {exc}")

    try:
        base = detector.base_config()
        scaled, diff = scale_config(base, tier)
        record = replace(record, base_config=base, scaled_config=scaled, diff=diff)

        windowing = _effective_windowing(detector, scaled)
        N = window_count(entity.test_series.length, windowing)
        record = replace(record, w=windowing.w, N=N)

        fit_seed = seed if detector.consumes_seed else PINNED_DETECTOR_SEED
        scaled_values = scaled.values()

        if instrumented:
            t0 = time.perf_counter_ns()
            model = detector.fit(entity.train, scaled_values, fit_seed)
            t1 = time.perf_counter_ns()
            detector.score(model, entity.test_series)  # warm-up, untimed
            t2 = time.perf_counter_ns()
            scores = detector.score(model, entity.test_series)
            t3 = time.perf_counter_ns()
            timing = TimingRecord(
                fit_time_s=(t1 - t0) / 1e9,
                infer_time_s=(t3 - t2) / 1e9,
                total_time_s=(t1 - t0) / 1e9 + (t3 - t2) / 1e9,
                source=TimingSource.INSTRUMENTED,
            )
            record = replace(record, warm_up=True, timing=timing)
        else:
            t0 = time.perf_counter_ns()
            model = detector.fit(entity.train, scaled_values, fit_seed)
            scores = detector.score(model, entity.test_series)
            t3 = time.perf_counter_ns()
            timing = TimingRecord(
                fit_time_s=None,
                infer_time_s=None,
                total_time_s=(t3 - t0) / 1e9,
                source=TimingSource.E2E_FALLBACK,
            )
            record = replace(record, warm_up=False, timing=timing)

        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (N,):
            return _failed(record, f"score length {scores.shape} does not match N={N}")
        if not np.all(np.isfinite(scores)):
            return _failed(record, "detector produced non-finite scores")

        record = replace(record, score_digest=score_digest(scores), child=detector.child_info())

        labels = entity.test_labels
        if labels is None:
            record = replace(record, metric_note="unlabeled test span")
        else:
            aligned = align_window_scores(scores, windowing.w, entity.test_series.length)
            try:
                result = evaluate(aligned, labels)
                record = replace(record, auc_pr=result.auc_pr, baseline=result.baseline)
            except UndefinedMetricError:
                record = replace(record, metric_note="no anomalies in span")

        return record
    except Exception as exc:
        return _failed(record, f"{type(exc).__name__}: {exc}")
    finally:
        detector.close()


# --- serialization ---------------------------------------------------------

def _tier_to_json(tier: TierSpec) -> dict[str, Any]:
    cap: int | str = tier.thread_cap if tier.thread_cap is not None else "uncapped"
    return {"id": tier.tier_id, "thread_cap": cap, "scale": tier.scale}


def _tier_from_json(obj: dict[str, Any]) -> TierSpec:
    cap = obj["thread_cap"]
    return TierSpec(obj["id"], None if cap == "uncapped" else int(cap), float(obj["scale"]))


def _config_to_json(config: DetectorConfig | None) -> dict[str, Any] | None:
    if config is None:
        return None
    return {
        "method_id": config.method_id,
        "params": {
            name: {"value": value, "role": role.value}
            for name, (value, role) in config.params.items()
        },
        "constraints": [
            {"dim_param": c.dim_param, "divisor_param": c.divisor_param}
            for c in config.constraints
        ],
    }


def _config_from_json(obj: dict[str, Any] | None) -> DetectorConfig | None:
    if obj is None:
        return None
    return DetectorConfig(
        method_id=obj["method_id"],
        params={
            name: (int(spec["value"]), ScalingRole(spec["role"]))
            for name, spec in obj["params"].items()
        },
        constraints=tuple(
            DivisibilityConstraint(c["dim_param"], c["divisor_param"])
            for c in obj["constraints"]
        ),
    )


def _diff_to_json(diff: ConfigDiff | None) -> dict[str, Any] | None:
    if diff is None:
        return None
    return {
        "entries": [
            {"param": e.param, "old": e.old, "new": e.new, "role": e.role.value, "rule": e.rule}
            for e in diff.entries
        ],
        "repairs": [
            {"param": r.param, "before": r.before, "after": r.after, "constraint": r.constraint}
            for r in diff.repairs
        ],
    }


def _diff_from_json(obj: dict[str, Any] | None) -> ConfigDiff | None:
    if obj is None:
        return None
    return ConfigDiff(
        entries=tuple(
            DiffEntry(e["param"], e["old"], e["new"], ScalingRole(e["role"]), e["rule"])
            for e in obj["entries"]
        ),
        repairs=tuple(
            RepairEvent(r["param"], r["before"], r["after"], r["constraint"])
            for r in obj["repairs"]
        ),
    )


def _timing_to_json(timing: TimingRecord | None) -> dict[str, Any] | None:
    if timing is None:
        return None
    return {
        "fit_time_s": timing.fit_time_s,
        "infer_time_s": timing.infer_time_s,
        "total_time_s": timing.total_time_s,
        "t_inf_source": timing.source.value,
    }


def _timing_from_json(obj: dict[str, Any] | None) -> TimingRecord | None:
    if obj is None:
        return None
    return TimingRecord(
        fit_time_s=obj["fit_time_s"],
        infer_time_s=obj["infer_time_s"],
        total_time_s=obj["total_time_s"],
        source=TimingSource(obj["t_inf_source"]),
    )


def record_to_json(record: RunRecord) -> dict[str, Any]:
    return {
        "record_type": "run",
        "schema_version": record.schema_version,
        "method_id": record.method_id,
        "dataset_id": record.dataset_id,
        "entity_id": record.entity_id,
        "tier": _tier_to_json(record.tier),
        "seed": record.seed,
        "status": record.status,
        "failure_reason": record.failure_reason,
        "base_config": _config_to_json(record.base_config),
        "scaled_config": _config_to_json(record.scaled_config),
        "diff": _diff_to_json(record.diff),
        "thread_cap_applied": record.thread_cap_applied,
        "thread_cap_note": record.thread_cap_note,
        "warm_up": record.warm_up,
        "timing": _timing_to_json(record.timing),
        "T": record.T,
        "w": record.w,
        "N": record.N,
        "auc_pr": record.auc_pr,
        "baseline": record.baseline,
        "metric_note": record.metric_note,
        "score_digest": record.score_digest,
        "child": record.child,
    }


def record_from_json(obj: dict[str, Any]) -> RunRecord:
    return RunRecord(
        method_id=obj["method_id"],
        dataset_id=obj["dataset_id"],
        entity_id=obj["entity_id"],
        tier=_tier_from_json(obj["tier"]),
        seed=obj["seed"],
        status=obj["status"],
        failure_reason=obj["failure_reason"],
        base_config=_config_from_json(obj["base_config"]),
        scaled_config=_config_from_json(obj["scaled_config"]),
        diff=_diff_from_json(obj["diff"]),
        thread_cap_applied=obj["thread_cap_applied"],
        thread_cap_note=obj["thread_cap_note"],
        warm_up=obj["warm_up"],
        timing=_timing_from_json(obj["timing"]),
        T=obj["T"],
        w=obj["w"],
        N=obj["N"],
        auc_pr=obj["auc_pr"],
        baseline=obj["baseline"],
        metric_note=obj["metric_note"],
        score_digest=obj["score_digest"],
        child=obj["child"],
        schema_version=obj["schema_version"],
    )
