"""Shared domain types and coordinate conventions.

Units and coordinates used throughout:

* Currents are in picoamps (pA).
* ``raw`` indices address the original sample stream of a trace;
  ``ds`` (downsampled) indices address the block-mean reduced stream.
* Every interval in either coordinate system is half-open ``[start, end)``
  so adjacent intervals concatenate without off-by-one corrections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_CHANNELS = 512


def raw_to_downsampled(idx_raw: int, factor: int) -> int:
    """Map a raw sample index onto the downsampled stream (floor division)."""
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    if idx_raw < 0:
        raise ValueError("raw index must be >= 0")
    return idx_raw // factor


def downsampled_to_raw(idx_ds: int, factor: int) -> int:
    """Inverse of :func:`raw_to_downsampled` on block boundaries."""
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    if idx_ds < 0:
        raise ValueError("downsampled index must be >= 0")
    return idx_ds * factor


def round_half_up(x: float) -> int:
    """Round to nearest integer with ties away from zero toward +inf."""
    return int(np.floor(x + 0.5))


def derive_train_step(window_size: int) -> int:
    """Training stride: 1.1x the window, rounded half-up."""
    return round_half_up(1.1 * window_size)


@dataclass(frozen=True)
class Trace:
    """One channel's ionic-current time series.

    Full experimental runs typically carry 4.5e6 to 6e6 samples; this is
    documented, not enforced, so short synthetic traces remain usable.
    """

    run_id: str
    channel: int
    sample_rate_hz: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.channel <= MAX_CHANNELS:
            raise ValueError(f"channel must be in 1..{MAX_CHANNELS}, got {self.channel}")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        arr = np.asarray(self.samples, dtype=np.float32)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("samples must be a nonempty 1D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples contain non-finite values")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True, order=True)
class CaptureAnnotation:
    """Ground-truth capture interval in raw-sample coordinates, half-open."""

    start_raw: int
    end_raw: int

    def __post_init__(self) -> None:
        if self.start_raw < 0 or self.start_raw >= self.end_raw:
            raise ValueError(
                f"invalid annotation interval [{self.start_raw}, {self.end_raw})"
            )

    def length(self) -> int:
        return self.end_raw - self.start_raw


@dataclass(frozen=True)
class CaptureRegion:
    """Predicted capture interval in raw coordinates with a confidence score."""

    start_raw: int
    end_raw: int
    confidence: float

    def __post_init__(self) -> None:
        if self.start_raw < 0 or self.start_raw >= self.end_raw:
            raise ValueError(
                f"invalid region interval [{self.start_raw}, {self.end_raw})"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")

    def length(self) -> int:
        return self.end_raw - self.start_raw


def check_sorted_disjoint(intervals) -> None:
    """Raise ValueError unless the intervals are sorted by start and disjoint.

    Accepts any sequence of objects with ``start_raw``/``end_raw``; used to
    enforce the output invariant on every region/annotation list the system
    produces or reads.
    """
    prev_end = None
    prev_start = None
    for iv in intervals:
        if prev_end is not None:
            if iv.start_raw < prev_start:
                raise ValueError("intervals are not sorted by start")
            if iv.start_raw < prev_end:
                raise ValueError(
                    f"overlapping intervals: [{prev_start}, {prev_end}) and "
                    f"[{iv.start_raw}, {iv.end_raw})"
                )
        prev_start, prev_end = iv.start_raw, iv.end_raw


@dataclass(frozen=True)
class DetectorConfig:
    """Windowing and thresholding parameters shared by training and inference.

    ``infer_step=None`` means the step equals the window (tiling coverage);
    ``train_step`` defaults to the 1.1x-window training stride.
    ``downsample_method`` is "mean" (block means, default) or "stride"
    (plain decimation, kept for ablation).
    """

    downsample_factor: int = 100
    window_size: int = 2000
    train_step: int | None = None
    infer_step: int | None = None
    threshold: float = 0.524
    normalization_scale_pa: float = 200.0
    downsample_method: str = "mean"

    def __post_init__(self) -> None:
        if self.downsample_factor < 1:
            raise ValueError("downsample_factor must be >= 1")
        if self.downsample_method not in ("mean", "stride"):
            raise ValueError("downsample_method must be 'mean' or 'stride'")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        if self.normalization_scale_pa <= 0:
            raise ValueError("normalization_scale_pa must be positive")
        if self.train_step is None:
            object.__setattr__(self, "train_step", derive_train_step(self.window_size))
        if self.infer_step is None:
            object.__setattr__(self, "infer_step", self.window_size)
        if self.train_step < 1 or self.infer_step < 1:
            raise ValueError("steps must be >= 1")


@dataclass(frozen=True)
class MetricsReport:
    """Window-level confusion counts and derived scores.

    Accuracy/precision/recall are on the percent scale (0..100); F1 stays in
    0..1. ``maximize_score`` folds all four onto the percent scale with F1
    weighted x100 (see :func:`capturenet.metrics.maximize_score`).
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    maximize_score: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n_windows(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "maximize_score": self.maximize_score,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
        }
