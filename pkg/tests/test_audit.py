"""Log schema enforcement, line-numbered validation errors, dedup."""

from __future__ import annotations

import copy
import logging

import pytest

from ladderbench import audit
from ladderbench.errors import SchemaError


def _valid_run(**over):
    record = {
        "record_type": "run",
        "schema_version": 1,
        "method_id": "hbos",
        "dataset_id": "ds",
        "entity_id": "e0",
        "tier": {"id": "REF", "thread_cap": "uncapped", "scale": 1.0},
        "seed": 0,
        "status": "OK",
        "failure_reason": None,
        "base_config": {
            "method_id": "hbos",
            "params": {"n_bins": {"value": 40, "role": "work"}},
            "constraints": [],
        },
        "scaled_config": {
            "method_id": "hbos",
            "params": {"n_bins": {"value": 40, "role": "work"}},
            "constraints": [],
        },
        "diff": {"entries": [], "repairs": []},
        "thread_cap_applied": 1,
        "thread_cap_note": None,
        "warm_up": True,
        "timing": {
            "fit_time_s": 0.05,
            "infer_time_s": 0.1,
            "total_time_s": 0.15,
            "t_inf_source": "INSTRUMENTED",
        },
        "T": 1000,
        "w": 1,
        "N": 1000,
        "auc_pr": 0.5,
        "baseline": 0.05,
        "metric_note": None,
        "score_digest": "0" * 64,
        "child": None,
    }
    record.update(over)
    return record


def _valid_header(**over):
    record = {
        "record_type": "header",
        "schema_version": 1,
        "created_unix_s": 1700000000.0,
        "plan": {"methods": ["hbos"]},
        "machine_width": 1,
        "clock": {"name": "perf_counter_ns", "monotonic": True, "resolution_s": 1e-9},
        "rounding_rule": "half-away-from-zero",
        "ap_estimator": "threshold-block-step",
        "feasibility_rule": "wps >= tau (inclusive)",
    }
    record.update(over)
    return record


def test_append_then_iter_round_trips(tmp_path):
    path = tmp_path / "runs.jsonl"
    audit.append_record(path, _valid_header())
    audit.append_record(path, _valid_run())
    entries = list(audit.iter_log(path))
    assert [line for line, _ in entries] == [1, 2]
    assert entries[0][1]["record_type"] == "header"
    assert entries[1][1] == _valid_run()


def test_append_refuses_an_invalid_record(tmp_path):
    path = tmp_path / "runs.jsonl"
    bad = _valid_run()
    del bad["thread_cap_applied"]
    with pytest.raises(SchemaError):
        audit.append_record(path, bad)
    assert not path.exists()  # nothing reaches the file


@pytest.mark.parametrize("mutate, fragment", [
    (lambda r: r.pop("score_digest"), "score_digest"),
    (lambda r: r.update(surprise=1), "surprise"),
    (lambda r: r.update(score_digest="G" * 64), "score_digest"),
    (lambda r: r.update(status="MAYBE"), "status"),
    (lambda r: r.update(auc_pr=1.5), "auc_pr"),
    (lambda r: r.update(tier={"id": "REF", "thread_cap": 0, "scale": 1.0}), "thread_cap"),
])
def test_run_schema_violations_are_hard_errors(mutate, fragment):
    record = _valid_run()
    mutate(record)
    with pytest.raises(SchemaError) as info:
        audit.validate_record(record)
    assert fragment in str(info.value)


def test_unknown_schema_version_is_rejected():
    with pytest.raises(SchemaError) as info:
        audit.validate_record(_valid_run(schema_version=99))
    assert "99" in str(info.value)


def test_unknown_record_type_is_rejected():
    with pytest.raises(SchemaError) as info:
        audit.validate_record(_valid_run(record_type="summary"))
    assert "summary" in str(info.value)


def test_header_pins_the_analysis_constants():
    audit.validate_record(_valid_header())
    with pytest.raises(SchemaError):
        audit.validate_record(_valid_header(rounding_rule="banker's"))
    with pytest.raises(SchemaError):
        audit.validate_record(_valid_header(ap_estimator="trapezoid"))
    with pytest.raises(SchemaError):
        audit.validate_record(_valid_header(feasibility_rule="wps > tau"))


def test_corrupt_json_reports_its_line_number(tmp_path):
    path = tmp_path / "runs.jsonl"
    audit.append_record(path, _valid_header())
    audit.append_record(path, _valid_run())
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    with pytest.raises(SchemaError) as info:
        list(audit.iter_log(path))
    assert info.value.line_number == 3
    assert "line 3" in str(info.value)


def test_invalid_record_mid_file_reports_its_line_number(tmp_path):
    path = tmp_path / "runs.jsonl"
    audit.append_record(path, _valid_header())
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"record_type": "run", "schema_version": 1}\n')
    with pytest.raises(SchemaError) as info:
        list(audit.iter_log(path))
    assert info.value.line_number == 2


def test_blank_lines_are_ignored(tmp_path):
    path = tmp_path / "runs.jsonl"
    audit.append_record(path, _valid_run())
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("\n\n")
    audit.append_record(path, _valid_run(seed=1))
    assert [line for line, _ in audit.iter_log(path)] == [1, 4]


def test_read_log_separates_headers_from_runs(tmp_path):
    path = tmp_path / "runs.jsonl"
    audit.append_record(path, _valid_header())
    audit.append_record(path, _valid_run())
    headers, runs = audit.read_log(path)
    assert len(headers) == 1 and len(runs) == 1


def test_duplicate_records_keep_the_first_occurrence(tmp_path):
    path = tmp_path / "runs.jsonl"
    audit.append_record(path, _valid_run(auc_pr=0.5))
    audit.append_record(path, _valid_run(auc_pr=0.9))  # same key, later value
    audit.append_record(path, _valid_run(seed=1, auc_pr=0.7))
    _, runs = audit.read_log(path)
    assert len(runs) == 2
    assert runs[0]["auc_pr"] == 0.5
    assert runs[1]["seed"] == 1


def test_dedup_key_fields():
    key = audit.dedup_key(_valid_run())
    assert key == ("hbos", "ds", "e0", "REF", 0, 1)


def test_mixed_schema_versions_warn_but_load(tmp_path, monkeypatch, caplog):
    v2_run = copy.deepcopy(audit.RUN_RECORD_SCHEMA)
    v2_run["properties"]["schema_version"] = {"const": 2}
    monkeypatch.setitem(audit._SCHEMAS_BY_VERSION, 2, {"run": v2_run})
    path = tmp_path / "runs.jsonl"
    audit.append_record(path, _valid_run())
    audit.append_record(path, _valid_run(schema_version=2))
    with caplog.at_level(logging.WARNING, logger="ladderbench.audit"):
        _, runs = audit.read_log(path)
    assert len(runs) == 2  # version is part of the key, so both survive
    assert any("mixes schema versions" in message for message in caplog.messages)
