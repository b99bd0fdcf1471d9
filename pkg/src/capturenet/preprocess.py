"""Trace preprocessing: downsampling, normalization, windowing, labeling.

All functions are pure and safe to run per-channel in parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .types import CaptureAnnotation


@dataclass(frozen=True)
class Window:
    """Fixed-length normalized signal window with provenance.

    ``ds_start`` is the inclusive start index in downsampled coordinates;
    the window covers ``[ds_start, ds_start + len(values))``.
    """

    run_id: str
    channel: int
    ds_start: int
    values: np.ndarray = field(repr=False)
    label: Optional[int] = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("window values must be a nonempty 1D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("window values contain non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def ds_end(self) -> int:
        return self.ds_start + int(self.values.size)


def downsample(samples: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean downsampling by an integer factor.

    Element ``i`` of the output is the arithmetic mean of raw samples
    ``[i*factor, (i+1)*factor)``. A trailing remainder shorter than one
    block is discarded. Block means preserve the absolute current level,
    which is what separates capture (~20 pA) from open pore (~180 pA).
    """
    arr = np.asarray(samples)
    if arr.size == 0:
        raise ValueError("empty trace")
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    if factor == 1:
        return arr.copy()
    n_blocks = arr.size // factor
    if n_blocks == 0:
        raise ValueError(f"trace shorter than one downsample block ({factor})")
    return arr[: n_blocks * factor].reshape(n_blocks, factor).mean(axis=1)


def decimate_strided(samples: np.ndarray, factor: int) -> np.ndarray:
    """Strided decimation (every factor-th sample); ablation alternative to
    block means, noisier but cheaper."""
    arr = np.asarray(samples)
    if arr.size == 0:
        raise ValueError("empty trace")
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    n_blocks = arr.size // factor
    if n_blocks == 0:
        raise ValueError(f"trace shorter than one downsample block ({factor})")
    return arr[: n_blocks * factor : factor].copy()


def normalize(values: np.ndarray, scale_pa: float) -> np.ndarray:
    """Divide by a fixed global scale (no centering).

    Per-window standardization would erase the absolute level difference the
    classifier relies on, so the full pA range is mapped onto roughly [0, 1]
    by a single constant instead.
    """
    if scale_pa <= 0:
        raise ValueError("scale_pa must be positive")
    return np.asarray(values) / scale_pa


def make_windows(
    ds_values: np.ndarray,
    window_size: int,
    step: int,
    *,
    run_id: str = "",
    channel: int = 0,
    end_aligned: bool = True,
) -> list[Window]:
    """Cut fixed-length windows from a downsampled sequence.

    Regular windows start at 0, step, 2*step, ... while they fit. When
    ``end_aligned`` is set and the last regular window does not end at the
    sequence end, one extra window ``[n - window_size, n)`` is appended so
    every index is covered at inference time. Training drops that tail
    (labels come from the regular grid only).
    """
    arr = np.asarray(ds_values)
    n = arr.size
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    if step < 1:
        raise ValueError("step must be >= 1")
    if n < window_size:
        raise ValueError(f"trace too short: {n} downsampled points < window {window_size}")
    windows = []
    start = 0
    while start + window_size <= n:
        windows.append(
            Window(run_id=run_id, channel=channel, ds_start=start,
                   values=arr[start : start + window_size])
        )
        start += step
    if end_aligned and windows[-1].ds_end != n:
        windows.append(
            Window(run_id=run_id, channel=channel, ds_start=n - window_size,
                   values=arr[n - window_size : n])
        )
    return windows


def label_window(
    window_interval_raw: tuple[int, int],
    annotations: Sequence[CaptureAnnotation],
) -> int:
    """Binary ground-truth label for a window given capture annotations.

    Label 1 iff the total overlap with the union of annotations covers at
    least half the window. Annotations are assumed sorted and disjoint, so
    summing per-annotation overlaps equals overlap with the union. The exact
    50% boundary resolves toward capture.
    """
    start, end = window_interval_raw
    if start >= end:
        raise ValueError("window interval must be non-empty")
    overlap = 0
    for ann in annotations:
        if ann.end_raw <= start:
            continue
        if ann.start_raw >= end:
            break
        overlap += min(end, ann.end_raw) - max(start, ann.start_raw)
    return 1 if 2 * overlap >= (end - start) else 0
