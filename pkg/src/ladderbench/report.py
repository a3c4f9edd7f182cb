"""Report emission: CSV tables, sidecar metadata, and rendered figures.

Everything here is a pure function of the run log. Regenerating a
report from the same log produces byte-identical files, so reports can
be deleted freely and rebuilt on demand. Float columns use shortest
round-tripping decimal form; empty cells mean "undefined", never zero.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .audit import SCHEMA_VERSION
from .feasibility import REPORT_METADATA, FeasibilityReport, fit_overhead_ratio, throughput
from .harness import RunRecord, TimingSource
from .reference import reference_overhead_lines


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_feasibility_csv(report: FeasibilityReport, path: str | Path) -> Path:
    """One row per (method, dataset, tau), plus a .meta.json sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "method_id", "dataset_id", "tau", "n_entities", "n_covered",
            "coverage", "mean_best_auc_pr", "low_coverage_flag",
        ])
        for cell in report.cells:
            writer.writerow([
                cell.method_id, cell.dataset_id, _fmt(cell.tau),
                cell.n_entities, cell.n_covered, _fmt(cell.coverage),
                _fmt(cell.mean_best_auc_pr), str(cell.low_coverage_flag).lower(),
            ])
    meta = dict(REPORT_METADATA, schema_version=SCHEMA_VERSION, taus=list(report.taus))
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def render_sweep_figures(report: FeasibilityReport, out_base: str | Path) -> list[Path]:
    """Coverage curves and a best-quality heatmap per dataset."""
    out_base = Path(out_base)
    written: list[Path] = []
    datasets = sorted({cell.dataset_id for cell in report.cells})
    for dataset in datasets:
        cells = [c for c in report.cells if c.dataset_id == dataset]
        methods = sorted({c.method_id for c in cells})
        taus = sorted({c.tau for c in cells})
        by_key = {(c.method_id, c.tau): c for c in cells}

        fig, ax = plt.subplots(figsize=(7, 4.5))
        for method in methods:
            coverage = [by_key[(method, tau)].coverage for tau in taus]
            ax.plot(taus, coverage, marker="o", label=method)
        ax.set_xscale("log")
        ax.set_xlabel("target rate tau (windows / s)")
        ax.set_ylabel("entity coverage")
        ax.set_ylim(-0.05, 1.05)
        ax.axhline(0.5, color="grey", linestyle=":", linewidth=1)
        ax.set_title(f"Feasibility coverage, {dataset}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        coverage_path = out_base.parent / f"{out_base.stem}_coverage_{dataset}.png"
        fig.savefig(coverage_path)
        plt.close(fig)
        written.append(coverage_path)

        grid = np.full((len(methods), len(taus)), np.nan)
        for i, method in enumerate(methods):
            for j, tau in enumerate(taus):
                best = by_key[(method, tau)].mean_best_auc_pr
                if best is not None:
                    grid[i, j] = best
        fig, ax = plt.subplots(figsize=(7, 0.6 * len(methods) + 2))
        masked = np.ma.masked_invalid(grid)
        image = ax.imshow(masked, aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(taus)), [f"{tau:g}" for tau in taus], rotation=45, fontsize=8)
        ax.set_yticks(range(len(methods)), methods, fontsize=8)
        ax.set_xlabel("target rate tau (windows / s)")
        ax.set_title(f"Best feasible AUC-PR, {dataset} (blank = not covered)")
        fig.colorbar(image, ax=ax, shrink=0.9)
        fig.tight_layout()
        quality_path = out_base.parent / f"{out_base.stem}_best_auc_{dataset}.png"
        fig.savefig(quality_path)
        plt.close(fig)
        written.append(quality_path)
    return written


def write_pareto_csv(front: Sequence[RunRecord], tier_id: str, path: str | Path) -> Path:
    """Front members of one tier, descending throughput."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "tier", "method_id", "dataset_id", "entity_id", "seed", "auc_pr",
            "wps_inference", "wps_fullrun", "fit_overhead_ratio", "overhead_uninformative",
        ])
        for record in front:
            point = throughput(record)
            fallback = record.timing is not None and record.timing.source is TimingSource.E2E_FALLBACK
            writer.writerow([
                tier_id, record.method_id, record.dataset_id, record.entity_id,
                record.seed, _fmt(record.auc_pr), _fmt(point.wps_inference),
                _fmt(point.wps_fullrun), _fmt(fit_overhead_ratio(record)),
                str(fallback).lower(),
            ])
    return path


def render_pareto_figure(all_records: Sequence[RunRecord], front: Sequence[RunRecord],
                         tier_id: str, path: str | Path) -> Path:
    """Quality-throughput scatter with the non-dominated set joined."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    front_keys = {id(r) for r in front}
    rest = [r for r in all_records if id(r) not in front_keys]
    if rest:
        ax.scatter([throughput(r).wps_inference for r in rest],
                   [r.auc_pr for r in rest],
                   s=18, color="silver", label="dominated")
    if front:
        xs = [throughput(r).wps_inference for r in front]
        ys = [r.auc_pr for r in front]
        ax.scatter(xs, ys, s=30, color="tab:red", zorder=3, label="front")
        ax.step(xs, ys, where="post", color="tab:red", linewidth=1, alpha=0.7)
        for record, x, y in zip(front, xs, ys):
            ax.annotate(record.method_id, (x, y), textcoords="offset points",
                        xytext=(4, 4), fontsize=7)
    ax.set_xscale("log")
    ax.set_xlabel("inference throughput (windows / s)")
    ax.set_ylabel("AUC-PR")
    ax.set_title(f"Quality vs throughput, tier {tier_id}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def summarize_runs(records: Sequence[RunRecord]) -> str:
    """Plain-text batch summary: per method and tier, quality and rate."""
    by_cell: dict[tuple[str, str], list[RunRecord]] = defaultdict(list)
    tier_order: dict[str, int] = {}
    for record in records:
        by_cell[(record.method_id, record.tier.tier_id)].append(record)
        tier_order.setdefault(record.tier.tier_id, len(tier_order))

    lines = [
        f"{'method':<12} {'tier':<8} {'runs':>4} {'failed':>6} {'mean auc_pr':>12} {'median wps':>12}",
        "-" * 60,
    ]
    for (method_id, tier_id) in sorted(by_cell, key=lambda k: (k[0], tier_order[k[1]])):
        cell = by_cell[(method_id, tier_id)]
        failed = sum(1 for r in cell if not r.ok)
        aucs = [r.auc_pr for r in cell if r.auc_pr is not None]
        rates = [throughput(r).wps_inference for r in cell if r.ok and r.timing is not None]
        mean_auc = f"{np.mean(aucs):.4f}" if aucs else "-"
        median_wps = f"{np.median(rates):.0f}" if rates else "-"
        lines.append(
            f"{method_id:<12} {tier_id:<8} {len(cell):>4} {failed:>6} {mean_auc:>12} {median_wps:>12}"
        )
    lines.append("")
    lines.append("reference operating points (prior campaign):")
    lines.extend("  " + line for line in reference_overhead_lines())
    return "\n".join(lines)
