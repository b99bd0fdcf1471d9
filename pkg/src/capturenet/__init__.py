"""Capture-phase detection for nanopore protein-sequencing current traces.

Train and run a windowed 1D CNN over downsampled ionic-current signals,
convert per-window confidences into capture-region boundaries, and serve
live or replayed detections for up to 512 channels.
"""

from .types import (
    CaptureAnnotation,
    CaptureRegion,
    DetectorConfig,
    MetricsReport,
    Trace,
    raw_to_downsampled,
)

__version__ = "0.1.0"

__all__ = [
    "CaptureAnnotation",
    "CaptureRegion",
    "DetectorConfig",
    "MetricsReport",
    "Trace",
    "raw_to_downsampled",
    "__version__",
]
