"""Loaders, contiguous splits, window arithmetic, and the synthetic generator."""

from __future__ import annotations

import numpy as np
import pytest

from ladderbench.data import (
    NOISE_SIGMA,
    LabeledSeries,
    TimeSeries,
    WindowingSpec,
    generate_synthetic,
    load_csv,
    load_labels,
    load_smd,
    split_contiguous,
    window_count,
    write_csv,
)
from ladderbench.errors import (
    DataError,
    InvalidSplitError,
    InvalidWindowError,
    ParseError,
    StructuralError,
)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# --- CSV loading -----------------------------------------------------------

def test_load_csv_two_by_two(tmp_path):
    series = load_csv(_write(tmp_path, "a.csv", "1,2\n3,4\n"))
    assert series.values.shape == (2, 2)
    assert np.array_equal(series.values, [[1.0, 2.0], [3.0, 4.0]])


def test_load_csv_ragged_row_names_the_line(tmp_path):
    with pytest.raises(StructuralError, match="row 2"):
        load_csv(_write(tmp_path, "a.csv", "1,2\n3\n"))


def test_load_csv_header_skipped(tmp_path):
    series = load_csv(_write(tmp_path, "a.csv", "a,b\n1,2\n"), has_header=True)
    assert series.values.shape == (1, 2)
    assert np.array_equal(series.values, [[1.0, 2.0]])


def test_load_csv_header_only_is_empty(tmp_path):
    with pytest.raises(StructuralError, match="empty"):
        load_csv(_write(tmp_path, "a.csv", "a,b\n"), has_header=True)


def test_load_csv_empty_file(tmp_path):
    with pytest.raises(StructuralError, match="empty"):
        load_csv(_write(tmp_path, "a.csv", ""))


def test_load_csv_bad_cell_reports_row_and_column(tmp_path):
    with pytest.raises(ParseError) as info:
        load_csv(_write(tmp_path, "a.csv", "1,2\n3,x\n"))
    assert info.value.row == 2
    assert info.value.column == 2


def test_load_csv_rejects_non_finite_cells(tmp_path):
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "a.csv", "nan,1\n"))
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "b.csv", "1,inf\n"))


def test_load_csv_accepts_crlf(tmp_path):
    series = load_csv(_write(tmp_path, "a.csv", "1,2\r\n3,4\r\n"))
    assert np.array_equal(series.values, [[1.0, 2.0], [3.0, 4.0]])


def test_write_then_load_round_trips_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    series = TimeSeries(rng.normal(size=(17, 3)))
    path = tmp_path / "r.csv"
    write_csv(series, path)
    loaded = load_csv(path)
    assert np.array_equal(loaded.values, series.values)
    first_bytes = path.read_bytes()
    write_csv(loaded, path)
    assert path.read_bytes() == first_bytes


# --- labels and the SMD layout ---------------------------------------------

def test_load_labels_zero_one(tmp_path):
    labels = load_labels(_write(tmp_path, "l.txt", "0\n1\n"))
    assert labels.dtype == np.int8
    assert labels.tolist() == [0, 1]


def test_load_labels_out_of_alphabet(tmp_path):
    with pytest.raises(ParseError, match="line 2"):
        load_labels(_write(tmp_path, "l.txt", "0\n2\n"))


def test_load_smd_counts(tmp_path):
    data = _write(tmp_path, "d.txt", "0.1,0.2\n0.3,0.9\n")
    labels = _write(tmp_path, "l.txt", "0\n1\n")
    entity = load_smd(data, labels)
    assert entity.series.length == 2
    assert entity.series.dim == 2
    assert entity.anomaly_rate == 0.5


def test_load_smd_length_mismatch(tmp_path):
    data = _write(tmp_path, "d.txt", "0.1\n0.2\n")
    labels = _write(tmp_path, "l.txt", "0\n1\n0\n")
    with pytest.raises(StructuralError, match="3 labels"):
        load_smd(data, labels)


# --- series types ----------------------------------------------------------

def test_time_series_rejects_nan():
    with pytest.raises(DataError):
        TimeSeries(np.array([[1.0], [np.nan]]))


def test_time_series_values_are_read_only():
    series = TimeSeries(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        series.values[0, 0] = 1.0


def test_labeled_series_rejects_bad_labels():
    series = TimeSeries(np.zeros((3, 1)))
    with pytest.raises(DataError):
        LabeledSeries(series=series, labels=np.array([0, 1, 2]))
    with pytest.raises(StructuralError):
        LabeledSeries(series=series, labels=np.array([0, 1]))


# --- contiguous splits -----------------------------------------------------

def test_split_telemetry_geometry():
    series = TimeSeries(np.zeros((80000, 1)))
    split = split_contiguous(series, train_frac=0.5, val_frac_of_train=0.2)
    assert split.train.length == 32000
    assert split.val.length == 8000
    assert split.test.length == 40000


def test_split_without_validation_segment():
    series = TimeSeries(np.arange(10, dtype=np.float64))
    split = split_contiguous(series, train_frac=0.5, val_frac_of_train=0.0)
    assert split.val is None
    assert split.train.values[:, 0].tolist() == [0, 1, 2, 3, 4]
    assert split.test.values[:, 0].tolist() == [5, 6, 7, 8, 9]


def test_split_val_collapsing_to_zero_is_rejected():
    series = TimeSeries(np.zeros((10, 1)))
    with pytest.raises(InvalidSplitError):
        split_contiguous(series, train_frac=0.5, val_frac_of_train=0.1)


def test_split_tiny_series_rejected():
    series = TimeSeries(np.zeros((4, 1)))
    with pytest.raises(InvalidSplitError):
        split_contiguous(series, train_frac=0.25, val_frac_of_train=0.9)


def test_split_fraction_bounds():
    series = TimeSeries(np.zeros((10, 1)))
    with pytest.raises(InvalidSplitError):
        split_contiguous(series, train_frac=0.0, val_frac_of_train=0.0)
    with pytest.raises(InvalidSplitError):
        split_contiguous(series, train_frac=1.0, val_frac_of_train=0.0)
    with pytest.raises(InvalidSplitError):
        split_contiguous(series, train_frac=0.5, val_frac_of_train=1.0)


def test_split_segments_reconstruct_the_series():
    rng = np.random.default_rng(11)
    for T in (3, 10, 100, 997):
        base = TimeSeries(rng.normal(size=(T, 2)))
        for train_frac in (0.25, 0.5, 0.8):
            for val_frac in (0.0, 0.2, 0.5):
                try:
                    split = split_contiguous(base, train_frac, val_frac)
                except InvalidSplitError:
                    continue
                parts = [split.train.values]
                if split.val is not None:
                    parts.append(split.val.values)
                parts.append(split.test.values)
                assert np.array_equal(np.concatenate(parts), base.values)


def test_split_labels_attach_only_to_test():
    rng = np.random.default_rng(3)
    labels = (rng.random(100) < 0.1).astype(np.int8)
    labeled = LabeledSeries(series=TimeSeries(rng.normal(size=(100, 2))), labels=labels)
    split = split_contiguous(labeled, train_frac=0.5, val_frac_of_train=0.2)
    assert isinstance(split.train, TimeSeries)
    assert isinstance(split.test, LabeledSeries)
    assert np.array_equal(split.test.labels, labels[50:])


# --- windows ---------------------------------------------------------------

def test_window_count_values():
    assert window_count(1000, WindowingSpec(windowed=True, w=100)) == 901
    assert window_count(1000, WindowingSpec(windowed=False, w=1)) == 1000
    assert window_count(8, WindowingSpec(windowed=True, w=8)) == 1


def test_window_count_rejects_oversized_window():
    with pytest.raises(InvalidWindowError):
        window_count(8, WindowingSpec(windowed=True, w=9))


def test_window_count_strictly_decreasing_in_w():
    T = 30
    counts = [window_count(T, WindowingSpec(windowed=True, w=w)) for w in range(1, T + 1)]
    assert counts[0] == T
    assert all(a > b for a, b in zip(counts, counts[1:]))


def test_windowing_spec_non_windowed_must_have_unit_window():
    with pytest.raises(InvalidWindowError):
        WindowingSpec(windowed=False, w=3)


# --- synthetic generator ---------------------------------------------------

def test_generate_synthetic_is_deterministic():
    a = generate_synthetic(T=4000, d=4, target_rate=0.02, seed=7)
    b = generate_synthetic(T=4000, d=4, target_rate=0.02, seed=7)
    assert np.array_equal(a.series.values, b.series.values)
    assert np.array_equal(a.labels, b.labels)


def test_generate_synthetic_realized_rate():
    entity = generate_synthetic(T=4000, d=4, target_rate=0.02, seed=7)
    assert 0.015 <= entity.anomaly_rate <= 0.025
    # The budget is exact: round(0.02 * 4000) labeled timestamps.
    assert int(entity.labels.sum()) == 80


def test_generate_synthetic_rejects_degenerate_rate():
    with pytest.raises(DataError):
        generate_synthetic(T=4000, d=4, target_rate=0.6, seed=0)
    with pytest.raises(DataError):
        generate_synthetic(T=4000, d=4, target_rate=0.5, seed=0)


def test_generate_synthetic_rejects_short_series():
    with pytest.raises(DataError):
        generate_synthetic(T=99, d=4, target_rate=0.02, seed=0)


def _label_intervals(labels):
    edges = np.flatnonzero(np.diff(np.concatenate(([0], labels, [0]))))
    return list(zip(edges[::2], edges[1::2]))


def test_generate_synthetic_intervals_are_contiguous_and_separated():
    entity = generate_synthetic(T=4000, d=4, target_rate=0.02, seed=7)
    intervals = _label_intervals(entity.labels)
    assert intervals
    assert sum(stop - start for start, stop in intervals) == int(entity.labels.sum())
    for (_, stop), (start, _) in zip(intervals, intervals[1:]):
        assert start > stop  # at least one clean timestamp between intervals


def test_generate_synthetic_injection_touches_only_labeled_rows():
    # The zero-rate twin consumes the same draws for signal and noise, so
    # rows outside the injected intervals must match it exactly and rows
    # inside must differ by the documented spike or shift offsets.
    clean = generate_synthetic(T=2000, d=4, target_rate=0.0, seed=3)
    dirty = generate_synthetic(T=2000, d=4, target_rate=0.02, seed=3)
    assert int(clean.labels.sum()) == 0
    delta = dirty.series.values - clean.series.values
    complement = dirty.labels == 0
    assert np.array_equal(delta[complement], np.zeros_like(delta[complement]))
    spike = 8.0 * NOISE_SIGMA
    shift = 4.0 * NOISE_SIGMA
    for row in np.flatnonzero(dirty.labels):
        offsets = delta[row]
        is_spike = np.isclose(offsets.max(), spike) and np.count_nonzero(offsets) == 1
        is_shift = np.allclose(offsets, shift)
        assert is_spike or is_shift
