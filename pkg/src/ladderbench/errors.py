"""Exception taxonomy shared across the package.

Grouped so the CLI can map failures onto its exit-code contract:
plan/usage problems, data problems, and record-schema problems are
distinct categories and must stay distinguishable.
"""

from __future__ import annotations


class LadderbenchError(Exception):
    """Base class for everything raised deliberately by this package."""


class PlanError(LadderbenchError):
    """A benchmark plan is unrunnable: unknown method, bad tier id, bad flags."""


class DataError(LadderbenchError):
    """Input data is unusable (base class for load/split/window problems)."""


class StructuralError(DataError):
    """File-level shape problem: ragged rows, empty file, length mismatch."""


class ParseError(DataError):
    """Cell-level problem; carries 1-based row/column for the offending cell."""

    def __init__(self, message: str, *, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class InvalidSplitError(DataError):
    """A requested contiguous split leaves some mandatory segment empty."""


class InvalidWindowError(DataError):
    """Window length is out of range for the series it is applied to."""


class ConfigError(LadderbenchError):
    """A detector configuration violates that detector's preconditions."""


class RepairFailureError(LadderbenchError):
    """A divisibility constraint could not be repaired; carries the constraint."""

    def __init__(self, message: str, *, constraint: str):
        super().__init__(message)
        self.constraint = constraint


class UndefinedMetricError(LadderbenchError):
    """The requested metric has no defined value on this input (e.g. no positives)."""


class SchemaError(LadderbenchError):
    """An audit-log record does not conform to its declared schema version."""

    def __init__(self, message: str, *, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class ProtocolViolationError(LadderbenchError):
    """Records being analysed together break a protocol discipline."""


class AdapterError(LadderbenchError):
    """Wire-protocol failure when driving an external detector process."""
