"""Series containers, file loaders, splits, and the synthetic generator.

Everything downstream (detectors, harness, reports) consumes the two
container types defined here. Files are headerless comma-separated
decimals, one timestamp per row; labels are one 0/1 per line. NaN and
Inf are rejected at load time so later stages never see them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    InvalidSplitError,
    InvalidWindowError,
    ParseError,
    StructuralError,
)

# Noise scale used by the synthetic generator. Spike and shift magnitudes
# are defined as multiples of this value; it is deliberately large
# relative to the unit-scale signal so an 8 sigma spike clears the
# sinusoid swing from any phase.
NOISE_SIGMA = 0.5

_SPIKE_SIGMAS = 8.0
_SHIFT_SIGMAS = 4.0
_MIN_INTERVAL = 5
_MAX_INTERVAL = 50


def _as_matrix(values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise StructuralError(f"series values must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise StructuralError(f"series must have at least one row and one channel, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("series contains NaN or Inf values")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """A finite multivariate series, shape (T, d), float64.

    Attributes:
        values: read-only array of shape (T, d) with T >= 1, d >= 1.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_matrix(self.values))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabeledSeries:
    """A series plus one binary anomaly label per timestamp.

    Attributes:
        series: the observations.
        labels: int8 vector of 0/1, same length as the series.
    """

    series: TimeSeries
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise StructuralError(f"labels must be 1-D, got shape {labels.shape}")
        if labels.shape[0] != self.series.length:
            raise StructuralError(
                f"label count {labels.shape[0]} does not match series length {self.series.length}"
            )
        if not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        labels = np.ascontiguousarray(labels, dtype=np.int8)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def anomaly_rate(self) -> float:
        return float(self.labels.mean())


@dataclass(frozen=True)
class WindowingSpec:
    """Whether a method scores sliding windows, and the window length.

    Non-windowed methods score timestamps directly and carry w == 1 so
    that the scored-unit count is uniformly T - w + 1.
    """

    windowed: bool
    w: int = 1

    def __post_init__(self) -> None:
        if self.w < 1:
            raise InvalidWindowError(f"window length must be >= 1, got {self.w}")
        if not self.windowed and self.w != 1:
            raise InvalidWindowError(f"non-windowed methods must declare w == 1, got {self.w}")


def window_count(T: int, spec: WindowingSpec) -> int:
    """Number of scored units for a series of length T under a windowing spec.

    Windowed methods score the T - w + 1 complete windows; non-windowed
    methods score every timestamp.
    """
    if T < 1:
        raise InvalidWindowError(f"series length must be >= 1, got {T}")
    if spec.w > T:
        raise InvalidWindowError(f"window length {spec.w} exceeds series length {T}")
    return T - spec.w + 1 if spec.windowed else T


def _parse_cell(text: str, row: int, column: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"row {row}, column {column}: cannot parse {text!r} as a decimal",
            row=row,
            column=column,
        ) from None
    if not math.isfinite(value):
        raise ParseError(
            f"row {row}, column {column}: non-finite value {text!r}",
            row=row,
            column=column,
        )
    return value


def load_csv(path: str | Path, has_header: bool = False) -> TimeSeries:
    """Load a CSV of decimals into a TimeSeries.

    Accepts LF and CRLF line endings. With has_header the first line is
    dropped unparsed; row numbers in errors still count from the top of
    the file. Raises StructuralError for empty or ragged files and
    ParseError (with 1-based row and column) for cells that are not
    finite decimals.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read: {exc}") from None
    lines = text.splitlines()
    start_row = 1
    if has_header and lines:
        lines = lines[1:]
        start_row = 2
    if not lines:
        raise StructuralError(f"{path}: file is empty")
    rows: list[list[float]] = []
    width: int | None = None
    for i, line in enumerate(lines, start=start_row):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise StructuralError(f"{path}: row {i} has {len(cells)} cells, expected {width}")
        rows.append([_parse_cell(cell, i, j) for j, cell in enumerate(cells, start=1)])
    return TimeSeries(np.array(rows, dtype=np.float64))


def write_csv(series: TimeSeries, path: str | Path) -> None:
    """Write a TimeSeries in canonical form: shortest round-tripping decimals.

    Loading a file written here yields bit-identical values, and writing
    those values again reproduces the file byte for byte.
    """
    lines = [",".join(repr(v) for v in row) for row in series.values.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_labels(path: str | Path, expected_length: int | None = None) -> np.ndarray:
    """Load a label file: one 0 or 1 per line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read: {exc}") from None
    lines = text.splitlines()
    if not lines:
        raise StructuralError(f"{path}: label file is empty")
    labels = np.empty(len(lines), dtype=np.int8)
    for i, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped not in ("0", "1"):
            raise ParseError(f"{path}: line {i}: expected 0 or 1, got {line!r}", row=i)
        labels[i - 1] = int(stripped)
    if expected_length is not None and labels.shape[0] != expected_length:
        raise StructuralError(
            f"{path}: {labels.shape[0]} labels for {expected_length} data rows"
        )
    return labels


def load_smd(data_path: str | Path, label_path: str | Path) -> LabeledSeries:
    """Load a data file and its sibling label file (SMD-style layout)."""
    series = load_csv(data_path)
    labels = load_labels(label_path, expected_length=series.length)
    return LabeledSeries(series=series, labels=labels)


@dataclass(frozen=True)
class SplitResult:
    """Contiguous train / val / test segments of one series.

    val is None exactly when the split was requested with no validation
    fraction. Labels, when the parent series had them, attach only to
    the test segment.
    """

    train: TimeSeries
    val: TimeSeries | None
    test: TimeSeries | LabeledSeries


def split_contiguous(
    series: TimeSeries | LabeledSeries,
    train_frac: float,
    val_frac_of_train: float,
) -> SplitResult:
    """Split a series into contiguous train, val, and test segments.

    The first floor(train_frac * T) rows form train+val, with the last
    val_frac_of_train of them held out as val; the remainder is test.
    Any mandatory segment of length zero raises InvalidSplitError. An
    empty val is legal only when val_frac_of_train == 0.
    """
    if not 0.0 < train_frac < 1.0:
        raise InvalidSplitError(f"train_frac must be in (0, 1), got {train_frac}")
    if not 0.0 <= val_frac_of_train < 1.0:
        raise InvalidSplitError(f"val_frac_of_train must be in [0, 1), got {val_frac_of_train}")

    labeled = isinstance(series, LabeledSeries)
    base = series.series if labeled else series
    T = base.length
    # 1e-9 nudge so fractions that are mathematically integral do not
    # floor one row short (0.3 * 10 evaluates below 3.0 in binary).
    n_trainval = int(math.floor(train_frac * T + 1e-9))
    n_val = int(math.floor(val_frac_of_train * n_trainval + 1e-9))
    n_train = n_trainval - n_val
    n_test = T - n_trainval

    if n_train < 1:
        raise InvalidSplitError(f"train segment would have {n_train} rows (T={T}, train_frac={train_frac})")
    if n_test < 1:
        raise InvalidSplitError(f"test segment would have {n_test} rows (T={T}, train_frac={train_frac})")
    if n_val < 1 and val_frac_of_train > 0.0:
        raise InvalidSplitError(
            f"val segment would be empty with val_frac_of_train={val_frac_of_train} (T={T})"
        )

    train = TimeSeries(base.values[:n_train])
    val = TimeSeries(base.values[n_train:n_trainval]) if n_val > 0 else None
    test_values = base.values[n_trainval:]
    if labeled:
        test: TimeSeries | LabeledSeries = LabeledSeries(
            series=TimeSeries(test_values), labels=series.labels[n_trainval:]
        )
    else:
        test = TimeSeries(test_values)
    return SplitResult(train=train, val=val, test=test)


def _draw_interval_lengths(total: int, rng: np.random.Generator) -> list[int]:
    """Partition a total anomalous-timestamp budget into interval lengths.

    Lengths are drawn uniformly from [5, 50]; the final interval may be
    clipped below 5 so the realized total matches the budget exactly.
    """
    lengths: list[int] = []
    remaining = total
    while remaining > 0:
        if remaining <= _MIN_INTERVAL - 1:
            lengths.append(remaining)
            break
        draw = int(rng.integers(_MIN_INTERVAL, _MAX_INTERVAL + 1))
        lengths.append(min(draw, remaining))
        remaining -= lengths[-1]
    return lengths


def _place_intervals(T: int, lengths: list[int], rng: np.random.Generator) -> list[tuple[int, int]]:
    """Place intervals at random non-overlapping, non-adjacent positions."""
    k = len(lengths)
    slack = T - sum(lengths) - (k - 1)
    if slack < 0:
        raise DataError(f"cannot place {k} anomaly intervals in {T} timestamps")
    # Stars-and-bars: k distinct cut points over slack + k cells give the
    # gap before each interval; one separating timestamp is mandatory.
    cuts = np.sort(rng.choice(slack + k, size=k, replace=False))
    gaps = np.diff(np.concatenate(([0], cuts + 1))) - 1
    spans: list[tuple[int, int]] = []
    pos = 0
    for gap, length in zip(gaps, lengths):
        start = pos + int(gap)
        spans.append((start, start + length))
        pos = start + length + 1
    return spans


def generate_synthetic(T: int, d: int, target_rate: float, seed: int) -> LabeledSeries:
    """Generate a labeled series: latent sinusoids plus planted anomalies.

    Channels are unit-norm random mixtures of max(1, d // 2) latent
    sinusoids with Gaussian noise, so the clean signal occupies a proper
    subspace when d >= 2. Anomalies are contiguous intervals, half
    spikes (8 sigma added to one random channel) and half level shifts
    (4 sigma added to every channel). Fully deterministic in
    (T, d, target_rate, seed).
    """
    if T < 100:
        raise DataError(f"synthetic series need T >= 100, got {T}")
    if d < 1:
        raise DataError(f"synthetic series need d >= 1, got {d}")
    if not 0.0 <= target_rate < 0.5:
        raise DataError(f"target anomaly rate must be in [0, 0.5), got {target_rate}")

    rng = np.random.default_rng(seed)
    n_latent = max(1, d // 2)
    periods = rng.uniform(64.0, 512.0, size=n_latent)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_latent)
    amplitudes = rng.uniform(0.8, 1.2, size=n_latent)
    t = np.arange(T, dtype=np.float64)[:, None]
    latent = amplitudes * np.sin(2.0 * np.pi * t / periods + phases)

    mixing = rng.normal(size=(d, n_latent))
    norms = np.maximum(np.linalg.norm(mixing, axis=1, keepdims=True), 1e-12)
    mixing /= norms
    values = latent @ mixing.T + rng.normal(0.0, NOISE_SIGMA, size=(T, d))

    labels = np.zeros(T, dtype=np.int8)
    budget = int(round(target_rate * T))
    if budget > 0:
        lengths = _draw_interval_lengths(budget, rng)
        for start, stop in _place_intervals(T, lengths, rng):
            labels[start:stop] = 1
            if rng.random() < 0.5:
                channel = int(rng.integers(0, d))
                values[start:stop, channel] += _SPIKE_SIGMAS * NOISE_SIGMA
            else:
                values[start:stop, :] += _SHIFT_SIGMAS * NOISE_SIGMA

    return LabeledSeries(series=TimeSeries(values), labels=labels)
