"""Built-in detectors and the registry the harness resolves methods from."""

from __future__ import annotations

from .base import (
    Detector,
    ScoreSeries,
    get_detector,
    register_detector,
    registered_methods,
    unregister_detector,
)
from .copod import CopodDetector
from .hbos import HbosDetector
from .iforest import IForestDetector
from .lof import LofDetector
from .pca import PcaDetector

for _detector in (HbosDetector(), CopodDetector(), LofDetector(), IForestDetector(), PcaDetector()):
    register_detector(_detector)

__all__ = [
    "Detector",
    "ScoreSeries",
    "get_detector",
    "register_detector",
    "registered_methods",
    "unregister_detector",
    "HbosDetector",
    "CopodDetector",
    "LofDetector",
    "IForestDetector",
    "PcaDetector",
]
