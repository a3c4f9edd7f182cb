"""Throughput, tau sweeps against a brute-force oracle, Pareto fronts."""

from __future__ import annotations

import dataclasses
import random
import time

import pytest

from ladderbench.errors import DataError, ProtocolViolationError
from ladderbench.feasibility import (
    DEFAULT_TAUS,
    check_window_freeze,
    fit_overhead_ratio,
    is_feasible,
    pareto_front,
    quantiles,
    sweep,
    throughput,
)
from ladderbench.harness import TimingSource

from conftest import CPU_1T, CPU_LT, CPU_MT, REF, make_record

TIERS = (REF, CPU_MT, CPU_LT, CPU_1T)


def rec(wps, auc, *, method="m", dataset="ds", entity="e0", tier=REF, seed=0, **kw):
    # default T=1000, w=1 gives N=1000, so t_inf = 1000 / wps.
    return make_record(method=method, dataset=dataset, entity=entity, tier=tier,
                       seed=seed, auc=auc, infer=1000.0 / wps, **kw)


# --- throughput ------------------------------------------------------------

def test_inference_throughput_is_windows_over_inference_time():
    record = make_record(T=901, w=1, infer=0.1)
    point = throughput(record)
    assert point.wps_inference == pytest.approx(9010.0, rel=1e-12)
    assert point.wps_fullrun == pytest.approx(901 / 0.15, rel=1e-12)


def test_fallback_records_collapse_the_two_rates():
    record = make_record(fit=0.05, infer=0.1, source=TimingSource.E2E_FALLBACK)
    point = throughput(record)
    assert point.wps_inference == point.wps_fullrun
    assert fit_overhead_ratio(record) == 1.0


def test_instrumented_overhead_ratio():
    record = make_record(fit=0.05, infer=0.1)
    assert fit_overhead_ratio(record) == pytest.approx(1.5, rel=1e-12)


def test_failed_and_zero_time_records_are_unusable():
    with pytest.raises(DataError):
        throughput(make_record(status="FAILED", auc=None, digest=None))
    with pytest.raises(DataError):
        throughput(make_record(fit=0.0, infer=0.0))


def test_feasibility_boundary_is_inclusive():
    assert is_feasible(500.0, 500.0)
    assert is_feasible(500.0000001, 500.0)
    assert not is_feasible(499.9999999, 500.0)
    # 4199 wps serves a 500/s stream but not a 5000/s one
    assert is_feasible(4199.0, 500.0)
    assert not is_feasible(4199.0, 5000.0)


# --- quantiles -------------------------------------------------------------

def test_quantiles_interpolate_linearly():
    values = list(range(1, 23))  # 1..22
    assert quantiles(values, [0.5]) == [11.5]
    assert quantiles([0.0, 10.0], [0.1]) == [1.0]
    assert quantiles([7.0], [0.0, 0.5, 1.0]) == [7.0, 7.0, 7.0]
    with pytest.raises(DataError):
        quantiles([], [0.5])


# --- window freeze ---------------------------------------------------------

def test_mixed_window_lengths_for_one_method_violate_protocol():
    records = [
        make_record(method="win", T=1000, w=64),
        make_record(method="win", T=1000, w=32, tier=CPU_1T),
    ]
    with pytest.raises(ProtocolViolationError) as info:
        check_window_freeze(records)
    assert "w=32" in str(info.value) and "w=64" in str(info.value)
    with pytest.raises(ProtocolViolationError):
        sweep(records, [100.0])


def test_window_lengths_may_differ_across_methods_and_datasets():
    check_window_freeze([
        make_record(method="a", w=64, T=1000),
        make_record(method="b", w=32, T=1000),
        make_record(method="a", dataset="other", w=16, T=1000),
    ])


def test_records_without_a_window_length_are_ignored_by_the_freeze_check():
    bare = dataclasses.replace(make_record(method="a", status="FAILED",
                                           auc=None, digest=None), w=None, N=None)
    check_window_freeze([bare, make_record(method="a", w=8, T=1000)])


# --- sweep: pinned examples ------------------------------------------------

def test_best_feasible_quality_is_not_the_best_overall_quality():
    records = [
        rec(600.0, 0.30, tier=REF),
        rec(400.0, 0.50, tier=CPU_1T),
    ]
    report = sweep(records, [200.0, 500.0, 1000.0])
    by_tau = {cell.tau: cell for cell in report.cells}
    assert by_tau[200.0].mean_best_auc_pr == pytest.approx(0.50)  # both feasible
    assert by_tau[500.0].mean_best_auc_pr == pytest.approx(0.30)  # only the fast one
    assert by_tau[1000.0].mean_best_auc_pr is None
    assert by_tau[1000.0].n_covered == 0


def test_seed_repeats_average_before_the_feasibility_test():
    # one configuration, seeds at 800 and 200 wps: the mean (exactly 500)
    # decides, so a lucky seed cannot carry the entity past tau=600.
    records = [
        rec(800.0, 0.30, seed=0),
        rec(200.0, 0.50, seed=1),
    ]
    at_500 = sweep(records, [500.0]).cells[0]
    assert at_500.n_covered == 1  # inclusive at the aggregated boundary
    assert at_500.mean_best_auc_pr == pytest.approx(0.40)
    at_600 = sweep(records, [600.0]).cells[0]
    assert at_600.n_covered == 0


def test_coverage_counts_entities_with_any_feasible_configuration():
    records = [
        rec(1000.0, 0.6, entity="e0"),
        rec(250.0, 0.7, entity="e1"),
        rec(2000.0, 0.8, entity="e2"),
    ]
    cell = sweep(records, [500.0]).cells[0]
    assert cell.n_entities == 3
    assert cell.n_covered == 2
    assert cell.coverage == pytest.approx(2 / 3)
    assert not cell.low_coverage_flag


def test_low_coverage_flag_is_strictly_below_one_half():
    records = [rec(1000.0, 0.6, entity="e0"), rec(100.0, 0.7, entity="e1")]
    exactly_half = sweep(records, [500.0]).cells[0]
    assert exactly_half.coverage == 0.5
    assert not exactly_half.low_coverage_flag
    none_covered = sweep(records, [5000.0]).cells[0]
    assert none_covered.coverage == 0.0
    assert none_covered.low_coverage_flag


def test_default_tau_grid_spans_the_documented_range():
    assert DEFAULT_TAUS[0] == 50.0
    assert DEFAULT_TAUS[-1] == 1e5
    assert list(DEFAULT_TAUS) == sorted(DEFAULT_TAUS)


# --- sweep: exhaustive oracle ----------------------------------------------

def _sweep_oracle(records, taus):
    """Recompute every cell with plain loops and no shared helpers."""
    groups = {}
    for r in records:
        groups.setdefault((r.method_id, r.dataset_id), {}) \
            .setdefault(r.entity_id, []).append(r)
    cells = []
    for method, dataset in sorted(groups):
        per_entity = {}
        for entity, runs in groups[(method, dataset)].items():
            by_config = {}
            for r in runs:
                if r.status != "OK" or r.timing is None:
                    continue
                by_config.setdefault(r.tier.tier_id, []).append(r)
            points = []
            for members in by_config.values():
                rates = [m.N / m.timing.t_inf for m in members]
                aucs = [m.auc_pr for m in members if m.auc_pr is not None]
                points.append((sum(rates) / len(rates),
                               sum(aucs) / len(aucs) if aucs else None))
            per_entity[entity] = points
        for tau in taus:
            best = []
            for points in per_entity.values():
                if any(rate >= tau for rate, _ in points):
                    qualities = [a for rate, a in points if rate >= tau and a is not None]
                    best.append(max(qualities) if qualities else None)
            quality = [b for b in best if b is not None]
            n = len(per_entity)
            cells.append((method, dataset, tau, n, len(best),
                          len(best) / n if n else 0.0,
                          sum(quality) / len(quality) if quality else None))
    return cells


def test_sweep_matches_the_enumeration_oracle_on_random_batches():
    rng = random.Random(42)
    started = time.perf_counter()
    for _ in range(60):
        records = []
        for method in ("m1", "m2"):
            for entity in ("e0", "e1", "e2"):
                for tier in rng.sample(TIERS, k=rng.randint(1, 4)):
                    for seed in range(rng.randint(1, 3)):
                        failed = rng.random() < 0.1
                        auc = None if failed or rng.random() < 0.1 else rng.random()
                        records.append(rec(
                            10 ** rng.uniform(1, 5), auc, method=method,
                            entity=entity, tier=tier, seed=seed,
                            status="FAILED" if failed else "OK",
                            digest=None if failed else "0" * 64,
                        ))
        assert len(records) <= 100
        taus = sorted(10 ** rng.uniform(1, 5) for _ in range(4))
        report = sweep(records, taus)
        expected = _sweep_oracle(records, taus)
        assert len(report.cells) == len(expected)
        for cell, (method, dataset, tau, n, covered, coverage, mean_best) in zip(
                report.cells, expected):
            assert (cell.method_id, cell.dataset_id, cell.tau) == (method, dataset, tau)
            assert (cell.n_entities, cell.n_covered) == (n, covered)
            assert cell.coverage == pytest.approx(coverage)
            if mean_best is None:
                assert cell.mean_best_auc_pr is None
            else:
                assert cell.mean_best_auc_pr == pytest.approx(mean_best, rel=1e-12)
            assert cell.low_coverage_flag == (coverage < 0.5)
        # coverage can only shrink as tau grows
        for group in ("m1", "m2"):
            run = [c.coverage for c in report.cells if c.method_id == group]
            assert all(a >= b for a, b in zip(run, run[1:]))
    assert time.perf_counter() - started < 5.0


# --- pareto ----------------------------------------------------------------

def test_pareto_front_keeps_the_staircase_and_drops_the_dominated():
    fast = rec(4000.0, 0.3, seed=0)
    mid = rec(2000.0, 0.6, seed=1)
    slow = rec(1000.0, 0.9, seed=2)
    dominated = rec(500.0, 0.2, seed=3)
    front = pareto_front([dominated, slow, fast, mid])
    assert front == [fast, mid, slow]  # sorted by descending throughput


def test_pareto_ties_survive():
    a = rec(1000.0, 0.5, seed=0)
    b = rec(1000.0, 0.9, seed=1)  # beats a on quality only
    c = rec(2000.0, 0.5, seed=2)  # beats a on speed only
    assert set(r.seed for r in pareto_front([a, b, c])) == {0, 1, 2}


def test_pareto_of_a_single_record():
    only = rec(100.0, 0.4)
    assert pareto_front([only]) == [only]


def test_pareto_requires_quality_values():
    with pytest.raises(DataError):
        pareto_front([rec(100.0, None)])


def test_pareto_is_idempotent_and_minimal_on_random_sets():
    rng = random.Random(7)
    for _ in range(100):
        records = [
            rec(10 ** rng.uniform(1, 5), rng.random(), seed=i)
            for i in range(rng.randint(1, 20))
        ]
        front = pareto_front(records)
        assert pareto_front(front) == front
        rates = {r.seed: throughput(r).wps_inference for r in records}
        kept = {r.seed for r in front}
        for r in records:
            beaten = any(
                rates[o.seed] > rates[r.seed] and o.auc_pr > r.auc_pr
                for o in records
            )
            assert (r.seed not in kept) == beaten
