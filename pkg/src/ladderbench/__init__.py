"""Benchmark time-series anomaly detectors across a compute-reduction ladder."""

__version__ = "0.1.0"
