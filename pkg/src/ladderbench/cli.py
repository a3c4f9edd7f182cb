"""Command-line entry points: run, sweep, validate, pareto.

Exit codes: 0 success (failed runs are still success: they are data),
1 usage or plan problems, 2 data problems, 3 record-schema problems.
"""

from __future__ import annotations

import json
import shlex
import sys
import time
from pathlib import Path

import click

from . import audit
from .adapter_host import AdapterDetector
from .data import generate_synthetic, load_smd, load_csv, split_contiguous
from .detectors import get_detector, registered_methods
from .errors import (
    DataError,
    LadderbenchError,
    PlanError,
    ProtocolViolationError,
    SchemaError,
)
from .feasibility import DEFAULT_TAUS, pareto_front, sweep, throughput
from .harness import (
    Entity,
    RunRecord,
    entity_from_split,
    machine_width,
    probe_clock,
    record_from_json,
    record_to_json,
    run_benchmark,
)
from .ladder import CANONICAL_LADDER, TierSpec, load_ladder, tier_by_id
from .report import (
    render_pareto_figure,
    render_sweep_figures,
    summarize_runs,
    write_feasibility_csv,
    write_pareto_csv,
)

_ADAPTER_PREFIX = "adapter:"


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(part) for part in _split_list(text)]
    except ValueError:
        raise PlanError(f"seeds must be integers, got {text!r}") from None
    if not seeds:
        raise PlanError("at least one seed is required")
    if any(seed < 0 for seed in seeds):
        raise PlanError(f"seeds must be non-negative, got {seeds}")
    return seeds


def _resolve_tiers(text: str | None, ladder: tuple[TierSpec, ...]) -> list[TierSpec]:
    if text is None:
        return list(ladder)
    return [tier_by_id(tier_id, ladder) for tier_id in _split_list(text)]


def _check_methods(methods: list[str]) -> None:
    for method in methods:
        if not method.startswith(_ADAPTER_PREFIX):
            get_detector(method)  # raises PlanError for unknown ids


def _load_entities(fmt: str, paths: tuple[str, ...], train_frac: float,
                   val_frac: float) -> list[Entity]:
    if not paths:
        raise PlanError("at least one --dataset is required")
    entities: list[Entity] = []
    if fmt == "csv":
        for raw in paths:
            path = Path(raw)
            series = load_csv(path)
            dataset_id = path.resolve().parent.name or "csv"
            entities.append(entity_from_split(
                dataset_id, path.stem, split_contiguous(series, train_frac, val_frac)
            ))
    elif fmt == "smd":
        if len(paths) != 1:
            raise PlanError("smd format takes exactly one --dataset directory")
        root = Path(paths[0])
        data_dir, label_dir = root / "test", root / "test_label"
        if not data_dir.is_dir() or not label_dir.is_dir():
            raise DataError(f"{root}: expected test/ and test_label/ subdirectories")
        files = sorted(data_dir.iterdir())
        if not files:
            raise DataError(f"{data_dir}: no entity files")
        for data_file in files:
            label_file = label_dir / data_file.name
            if not label_file.exists():
                raise DataError(f"{label_file}: missing label file for {data_file.name}")
            labeled = load_smd(data_file, label_file)
            entities.append(entity_from_split(
                root.name, data_file.stem, split_contiguous(labeled, train_frac, val_frac)
            ))
    elif fmt == "synthetic":
        if len(paths) != 1:
            raise PlanError("synthetic format takes exactly one --dataset descriptor file")
        try:
            descriptor = json.loads(Path(paths[0]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"{paths[0]}: cannot read synthetic descriptor: {exc}") from None
        name = descriptor.get("name", Path(paths[0]).stem)
        count = int(descriptor.get("entities", 1))
        base_seed = int(descriptor.get("seed", 0))
        if count < 1:
            raise PlanError(f"synthetic descriptor needs entities >= 1, got {count}")
        for i in range(count):
            labeled = generate_synthetic(
                T=int(descriptor["T"]), d=int(descriptor["d"]),
                target_rate=float(descriptor["rate"]), seed=base_seed + i,
            )
            entities.append(entity_from_split(
                name, f"{name}-{i}", split_contiguous(labeled, train_frac, val_frac)
            ))
    else:
        raise PlanError(f"unknown format {fmt!r}")
    return entities


def _read_records(log_path: str) -> list[RunRecord]:
    _, raw_runs = audit.read_log(log_path)
    return [record_from_json(obj) for obj in raw_runs]


@click.group()
def cli() -> None:
    """Benchmark anomaly detectors across a compute-reduction ladder."""


@cli.command("run")
@click.option("--dataset", "datasets", multiple=True, required=True,
              help="Dataset path; repeatable for csv format.")
@click.option("--format", "fmt", type=click.Choice(["csv", "smd", "synthetic"]), required=True)
@click.option("--methods", default=None,
              help="Comma-separated method ids, or adapter:CMD entries. Default: all built-ins.")
@click.option("--tiers", default=None, help="Comma-separated tier ids. Default: the whole ladder.")
@click.option("--seeds", default="0,1", help="Comma-separated non-negative seeds.")
@click.option("--out", required=True, type=click.Path(), help="Run log path (JSON lines, appended).")
@click.option("--ladder", "ladder_path", default=None, type=click.Path(exists=True),
              help="JSON ladder file overriding the canonical four tiers.")
@click.option("--train-frac", default=0.5, show_default=True)
@click.option("--val-frac", default=0.2, show_default=True,
              help="Fraction of the train block held out as validation.")
@click.option("--resume", is_flag=True, help="Skip runs already present in the log.")
@click.option("--no-phase-timing", is_flag=True,
              help="Record only end-to-end wall time; inference time falls back to it.")
def cmd_run(datasets, fmt, methods, tiers, seeds, out, ladder_path, train_frac,
            val_frac, resume, no_phase_timing) -> None:
    """Execute a benchmark batch and append one record per run."""
    ladder = load_ladder(ladder_path) if ladder_path else CANONICAL_LADDER
    tier_list = _resolve_tiers(tiers, ladder)
    method_list = _split_list(methods) if methods else registered_methods()
    seed_list = _parse_seeds(seeds)
    _check_methods(method_list)
    entities = _load_entities(fmt, datasets, train_frac, val_frac)

    done: set[tuple] = set()
    out_path = Path(out)
    if resume and out_path.exists():
        _, existing = audit.read_log(out_path)
        done = {audit.dedup_key(obj) for obj in existing}

    plan = {
        "format": fmt,
        "datasets": list(datasets),
        "methods": method_list,
        "tiers": [tier.tier_id for tier in tier_list],
        "seeds": seed_list,
        "train_frac": train_frac,
        "val_frac_of_train": val_frac,
        "instrumented": not no_phase_timing,
        "resumed": bool(done),
    }
    audit.append_record(out_path, {
        "record_type": "header",
        "schema_version": audit.SCHEMA_VERSION,
        "created_unix_s": time.time(),
        "plan": plan,
        "machine_width": machine_width(),
        "clock": probe_clock(),
        "rounding_rule": "half-away-from-zero",
        "ap_estimator": "threshold-block-step",
        "feasibility_rule": "wps >= tau (inclusive)",
    })

    records: list[RunRecord] = []
    skipped = 0
    for entity in entities:
        for method in method_list:
            for tier in tier_list:
                for seed in seed_list:
                    key = (method, entity.dataset_id, entity.entity_id,
                           tier.tier_id, seed, audit.SCHEMA_VERSION)
                    if key in done:
                        skipped += 1
                        continue
                    detector = None
                    if method.startswith(_ADAPTER_PREFIX):
                        argv = shlex.split(method[len(_ADAPTER_PREFIX):])
                        detector = AdapterDetector(argv, method_id=method)
                    record = run_benchmark(
                        method, entity, tier, seed,
                        instrumented=not no_phase_timing, detector=detector,
                    )
                    audit.append_record(out_path, record_to_json(record))
                    done.add(key)
                    records.append(record)

    click.echo(summarize_runs(records) if records else "no new runs")
    if skipped:
        click.echo(f"({skipped} runs already present; skipped)")
    click.echo(f"wrote {len(records)} records to {out_path}")


@cli.command("sweep")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True),
              help="Run log produced by the run command.")
@click.option("--taus", default=None, help="Comma-separated target rates. Default grid spans 50 to 1e5.")
@click.option("--out", required=True, type=click.Path(), help="Feasibility CSV path.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render coverage and quality figures next to the CSV.")
def cmd_sweep(log_path, taus, out, figures) -> None:
    """Feasibility coverage and best-feasible quality over a tau grid."""
    tau_list = list(DEFAULT_TAUS)
    if taus is not None:
        try:
            parsed = [float(t) for t in _split_list(taus)]
        except ValueError:
            raise PlanError(f"taus must be numbers, got {taus!r}") from None
        if parsed:  # an empty list means "use the default grid"
            tau_list = parsed
    records = _read_records(log_path)
    report = sweep(records, tau_list)
    csv_path = write_feasibility_csv(report, out)
    click.echo(f"wrote {csv_path} ({len(report.cells)} rows)")
    for cell in report.cells:
        if cell.low_coverage_flag:
            click.echo(f"  low coverage: {cell.method_id} on {cell.dataset_id} "
                       f"at tau={cell.tau:g} ({cell.coverage:.0%})")
    if figures:
        for figure_path in render_sweep_figures(report, csv_path):
            click.echo(f"wrote {figure_path}")


@cli.command("validate")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
def cmd_validate(log_path) -> None:
    """Check every log line against the schema and recompute derived numbers."""
    n_headers = n_runs = 0
    counts: dict[tuple[str, str, str], int] = {}
    for line_number, record in audit.iter_log(log_path):
        if record["record_type"] == "header":
            n_headers += 1
            continue
        n_runs += 1
        cell = (record["method_id"], record["tier"]["id"], record["status"])
        counts[cell] = counts.get(cell, 0) + 1
        run = record_from_json(record)
        where = f"line {line_number} ({run.method_id}/{run.entity_id}@{run.tier.tier_id})"
        if run.T is not None and run.w is not None and run.N is not None:
            if run.N != run.T - run.w + 1:
                raise DataError(f"{where}: N={run.N} but T - w + 1 = {run.T - run.w + 1}")
        if run.timing is not None:
            timing = run.timing
            if timing.fit_time_s is not None and timing.infer_time_s is not None:
                parts = timing.fit_time_s + timing.infer_time_s
                if abs(timing.total_time_s - parts) > 1e-9 + 1e-9 * parts:
                    raise DataError(f"{where}: total_time_s {timing.total_time_s} != fit + infer {parts}")
            if run.ok:
                point = throughput(run)
                recomputed = point.wps_inference * timing.t_inf
                if abs(recomputed - run.N) > 1e-9 * max(1.0, run.N):
                    raise DataError(f"{where}: wps * t_inf = {recomputed} but N = {run.N}")
    click.echo(f"{log_path}: {n_headers} header(s), {n_runs} run record(s), all valid")
    for (method_id, tier_id, status), n in sorted(counts.items()):
        click.echo(f"  {method_id} {tier_id} {status}: {n}")


@cli.command("pareto")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--tiers", default=None, help="Comma-separated tier ids. Default: tiers present in the log.")
@click.option("--out", required=True, type=click.Path(),
              help="Output base path; per-tier CSVs get a _TIER suffix.")
@click.option("--figures/--no-figures", default=True, show_default=True)
def cmd_pareto(log_path, tiers, out, figures) -> None:
    """Per-tier non-dominated (throughput, quality) fronts."""
    records = _read_records(log_path)
    scored = [r for r in records if r.ok and r.auc_pr is not None and r.timing is not None]
    if tiers is not None:
        tier_ids = _split_list(tiers)
    else:
        tier_ids = sorted({r.tier.tier_id for r in scored})
    if not tier_ids:
        raise DataError(f"{log_path}: no scored runs to build fronts from")
    out_path = Path(out)
    for tier_id in tier_ids:
        at_tier = [r for r in scored if r.tier.tier_id == tier_id]
        if not at_tier:
            click.echo(f"tier {tier_id}: no scored runs, skipped")
            continue
        front = pareto_front(at_tier)
        csv_path = out_path.parent / f"{out_path.stem}_{tier_id}{out_path.suffix or '.csv'}"
        write_pareto_csv(front, tier_id, csv_path)
        click.echo(f"wrote {csv_path} ({len(front)} of {len(at_tier)} runs on the front)")
        if figures:
            figure_path = csv_path.with_suffix(".png")
            render_pareto_figure(at_tier, front, tier_id, figure_path)
            click.echo(f"wrote {figure_path}")


def main(argv: list[str] | None = None) -> int:
    """Entry point mapping the exception taxonomy onto exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except (click.UsageError, click.Abort) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except SchemaError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(3)
    except (DataError, ProtocolViolationError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except LadderbenchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
