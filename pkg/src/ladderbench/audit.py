"""Append-only run log: schema, writers, and validating readers.

The log is UTF-8, one JSON object per line. A batch writes one header
object (the echoed plan plus environment facts) before any run
records. Records violating the schema are never written, and readers
treat violations as hard errors carrying the line number. Re-emitted
duplicates are legal in the file; analysis deduplicates on
(method, dataset, entity, tier, seed, schema_version), keeping the
first occurrence.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterator

import jsonschema

from .errors import SchemaError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_ROLE_NAMES = ["work", "width", "heads", "depth", "window", "unscaled"]

_TIER_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "thread_cap": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "uncapped"}]},
        "scale": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
    "required": ["id", "thread_cap", "scale"],
    "additionalProperties": False,
}

_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "method_id": {"type": "string", "minLength": 1},
        "params": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "value": {"type": "integer", "minimum": 1},
                    "role": {"enum": _ROLE_NAMES},
                },
                "required": ["value", "role"],
                "additionalProperties": False,
            },
        },
        "constraints": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "dim_param": {"type": "string"},
                    "divisor_param": {"type": "string"},
                },
                "required": ["dim_param", "divisor_param"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["method_id", "params", "constraints"],
    "additionalProperties": False,
}

_DIFF_SCHEMA = {
    "type": "object",
    "properties": {
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "param": {"type": "string"},
                    "old": {"type": "integer"},
                    "new": {"type": "integer"},
                    "role": {"enum": _ROLE_NAMES},
                    "rule": {"type": "string"},
                },
                "required": ["param", "old", "new", "role", "rule"],
                "additionalProperties": False,
            },
        },
        "repairs": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "param": {"type": "string"},
                    "before": {"type": "integer"},
                    "after": {"type": "integer"},
                    "constraint": {"type": "string"},
                },
                "required": ["param", "before", "after", "constraint"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["entries", "repairs"],
    "additionalProperties": False,
}

_TIMING_SCHEMA = {
    "type": "object",
    "properties": {
        "fit_time_s": {"type": ["number", "null"], "minimum": 0},
        "infer_time_s": {"type": ["number", "null"], "minimum": 0},
        "total_time_s": {"type": "number", "minimum": 0},
        "t_inf_source": {"enum": ["INSTRUMENTED", "E2E_FALLBACK"]},
    },
    "required": ["fit_time_s", "infer_time_s", "total_time_s", "t_inf_source"],
    "additionalProperties": False,
}

RUN_RECORD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "record_type": {"const": "run"},
        "schema_version": {"const": SCHEMA_VERSION},
        "method_id": {"type": "string", "minLength": 1},
        "dataset_id": {"type": "string", "minLength": 1},
        "entity_id": {"type": "string", "minLength": 1},
        "tier": _TIER_SCHEMA,
        "seed": {"type": "integer", "minimum": 0},
        "status": {"enum": ["OK", "FAILED"]},
        "failure_reason": {"type": ["string", "null"]},
        "base_config": {"oneOf": [_CONFIG_SCHEMA, {"type": "null"}]},
        "scaled_config": {"oneOf": [_CONFIG_SCHEMA, {"type": "null"}]},
        "diff": {"oneOf": [_DIFF_SCHEMA, {"type": "null"}]},
        "thread_cap_applied": {"type": "integer", "minimum": 1},
        "thread_cap_note": {"type": ["string", "null"]},
        "warm_up": {"type": "boolean"},
        "timing": {"oneOf": [_TIMING_SCHEMA, {"type": "null"}]},
        "T": {"type": ["integer", "null"], "minimum": 1},
        "w": {"type": ["integer", "null"], "minimum": 1},
        "N": {"type": ["integer", "null"], "minimum": 1},
        "auc_pr": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "baseline": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "metric_note": {"type": ["string", "null"]},
        "score_digest": {"type": ["string", "null"], "pattern": "^[0-9a-f]{64}$"},
        "child": {"type": ["object", "null"]},
    },
    "required": [
        "record_type", "schema_version", "method_id", "dataset_id", "entity_id",
        "tier", "seed", "status", "failure_reason", "base_config", "scaled_config",
        "diff", "thread_cap_applied", "thread_cap_note", "warm_up", "timing",
        "T", "w", "N", "auc_pr", "baseline", "metric_note", "score_digest", "child",
    ],
    "additionalProperties": False,
}

HEADER_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "record_type": {"const": "header"},
        "schema_version": {"const": SCHEMA_VERSION},
        "created_unix_s": {"type": "number"},
        "plan": {"type": "object"},
        "machine_width": {"type": "integer", "minimum": 1},
        "clock": {
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "monotonic": {"const": True},
                "resolution_s": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["name", "monotonic", "resolution_s"],
            "additionalProperties": False,
        },
        "rounding_rule": {"const": "half-away-from-zero"},
        "ap_estimator": {"const": "threshold-block-step"},
        "feasibility_rule": {"const": "wps >= tau (inclusive)"},
    },
    "required": [
        "record_type", "schema_version", "created_unix_s", "plan", "machine_width",
        "clock", "rounding_rule", "ap_estimator", "feasibility_rule",
    ],
    "additionalProperties": False,
}

_SCHEMAS_BY_VERSION: dict[int, dict[str, dict]] = {
    SCHEMA_VERSION: {"run": RUN_RECORD_SCHEMA, "header": HEADER_SCHEMA},
}


def validate_record(record: dict[str, Any], line_number: int | None = None) -> None:
    """Validate one log object against the schema for its declared version."""
    where = f"line {line_number}: " if line_number is not None else ""
    if not isinstance(record, dict):
        raise SchemaError(f"{where}log entries must be JSON objects", line_number=line_number)
    version = record.get("schema_version")
    by_type = _SCHEMAS_BY_VERSION.get(version)
    if by_type is None:
        raise SchemaError(f"{where}unknown schema_version {version!r}", line_number=line_number)
    record_type = record.get("record_type")
    schema = by_type.get(record_type)
    if schema is None:
        raise SchemaError(f"{where}unknown record_type {record_type!r}", line_number=line_number)
    try:
        jsonschema.validate(record, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{where}invalid {record_type} record at {path}: {exc.message}",
                          line_number=line_number) from None


def append_record(path: str | Path, record: dict[str, Any]) -> None:
    """Validate and append one object to the log. Never writes invalid lines."""
    validate_record(record)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def iter_log(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (1-based line number, validated object) for every log line."""
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {i}: not valid JSON: {exc.msg}", line_number=i) from None
            validate_record(record, line_number=i)
            yield i, record


def dedup_key(record: dict[str, Any]) -> tuple:
    return (
        record["method_id"],
        record["dataset_id"],
        record["entity_id"],
        record["tier"]["id"],
        record["seed"],
        record["schema_version"],
    )


def read_log(path: str | Path) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """Read and validate a log; returns (headers, deduplicated run records).

    The first occurrence of each dedup key wins, so re-emitting an
    identical record is a no-op at this layer.
    """
    headers: list[dict[str, Any]] = []
    runs: list[dict[str, Any]] = []
    seen: set[tuple] = set()
    versions: set[int] = set()
    for i, record in iter_log(path):
        versions.add(record["schema_version"])
        if record["record_type"] == "header":
            headers.append(record)
            continue
        key = dedup_key(record)
        if key in seen:
            logger.debug("duplicate record at line %d ignored: %s", i, key)
            continue
        seen.add(key)
        runs.append(record)
    if len(versions) > 1:
        logger.warning("log %s mixes schema versions %s", path, sorted(versions))
    return headers, runs
