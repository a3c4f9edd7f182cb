"""Shared builders: synthetic run records and timing stubs for analysis tests."""

from __future__ import annotations

from ladderbench.harness import RunRecord, TimingRecord, TimingSource
from ladderbench.ladder import CANONICAL_LADDER, DetectorConfig, TierSpec

REF = CANONICAL_LADDER[0]
CPU_MT = CANONICAL_LADDER[1]
CPU_LT = CANONICAL_LADDER[2]
CPU_1T = CANONICAL_LADDER[3]


def make_timing(fit: float | None = 0.05, infer: float | None = 0.1,
                source: TimingSource = TimingSource.INSTRUMENTED) -> TimingRecord:
    if source is TimingSource.E2E_FALLBACK:
        total = (fit or 0.0) + (infer or 0.0)
        return TimingRecord(fit_time_s=None, infer_time_s=None,
                            total_time_s=total, source=source)
    return TimingRecord(fit_time_s=fit, infer_time_s=infer,
                        total_time_s=fit + infer, source=source)


def make_record(method: str = "hbos", dataset: str = "ds", entity: str = "e0",
                tier: TierSpec = REF, seed: int = 0, status: str = "OK",
                auc: float | None = 0.5, baseline: float | None = 0.05,
                fit: float | None = 0.05, infer: float | None = 0.1,
                source: TimingSource = TimingSource.INSTRUMENTED,
                T: int = 1000, w: int = 1,
                scaled: DetectorConfig | None = None,
                digest: str | None = "0" * 64) -> RunRecord:
    """One plausible run record; N follows from T and w."""
    return RunRecord(
        method_id=method,
        dataset_id=dataset,
        entity_id=entity,
        tier=tier,
        seed=seed,
        status=status,
        failure_reason=None if status == "OK" else "stub failure",
        base_config=scaled,
        scaled_config=scaled,
        diff=None,
        thread_cap_applied=1,
        thread_cap_note=None,
        warm_up=source is TimingSource.INSTRUMENTED,
        timing=make_timing(fit, infer, source),
        T=T,
        w=w,
        N=T - w + 1,
        auc_pr=auc,
        baseline=baseline,
        metric_note=None,
        score_digest=digest,
    )
