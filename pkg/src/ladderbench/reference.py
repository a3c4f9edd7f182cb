"""Published reference operating points used for report context.

These are measured figures from an earlier benchmarking campaign on
public server-machine and satellite telemetry datasets. Reports quote
ratios derived from them (cold-start overhead, lift over the random
baseline) so fresh results can be read against known numbers. Values
are stored as measured; ratios are always recomputed, never stored.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ReferenceThroughput:
    """Single-thread throughput of one method on one dataset, in wps."""

    dataset: str
    method: str
    tier: str
    wps_inference: float
    wps_fullrun: float

    @property
    def fit_overhead_ratio(self) -> float:
        return self.wps_inference / self.wps_fullrun


@dataclass(frozen=True)
class ReferenceQuality:
    """Best-feasible AUC-PR of one method against its random baseline."""

    dataset: str
    method: str
    auc_pr: float
    baseline: float

    @property
    def lift(self) -> float:
        return self.auc_pr / self.baseline


REFERENCE_THROUGHPUT: tuple[ReferenceThroughput, ...] = (
    ReferenceThroughput(dataset="server-machine", method="omnianomaly", tier="CPU-1T",
                        wps_inference=18000.0, wps_fullrun=780.0),
    ReferenceThroughput(dataset="satellite-telemetry", method="omnianomaly", tier="CPU-1T",
                        wps_inference=19148.0, wps_fullrun=347.0),
)

REFERENCE_QUALITY: tuple[ReferenceQuality, ...] = (
    ReferenceQuality(dataset="satellite-telemetry", method="hbos",
                     auc_pr=0.064, baseline=0.022),
)


def reference_overhead_lines() -> list[str]:
    """Formatted cold-start context lines for report footers."""
    return [
        f"{p.method} on {p.dataset} ({p.tier}): inference {p.wps_inference:.0f} wps, "
        f"full-run {p.wps_fullrun:.0f} wps, overhead {p.fit_overhead_ratio:.2f}x"
        for p in REFERENCE_THROUGHPUT
    ]
