"""Turn per-window probabilities into capture regions.

Pipeline order: threshold -> single smoothing pass -> merge into regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .types import CaptureRegion, check_sorted_disjoint


@dataclass(frozen=True)
class WindowPrediction:
    """Classifier output for one window, in downsampled coordinates."""

    ds_start: int
    ds_end: int
    probability: float
    label: int

    def __post_init__(self) -> None:
        if self.ds_end <= self.ds_start:
            raise ValueError("ds_end must exceed ds_start")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must be in [0, 1]")
        if self.label not in (0, 1):
            raise ValueError("label must be binary")


def threshold_labels(probs: Sequence[float], threshold: float) -> list[int]:
    """Binarize probabilities; a probability equal to the threshold counts
    as capture (>= rule)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    return [1 if p >= threshold else 0 for p in probs]


def smooth_labels(labels: Sequence[int]) -> list[int]:
    """Flip isolated windows surrounded by opposing labels.

    One simultaneous pass over the input: for every interior index i with
    in[i-1] == in[i+1] != in[i], out[i] = in[i-1]; everything else is copied,
    and the first and last elements are never flipped. Referencing the input
    (not the partially written output) makes the pass order-independent and
    deterministic; it is applied exactly once and is not idempotent in
    general.
    """
    src = list(labels)
    out = list(src)
    for i in range(1, len(src) - 1):
        if src[i - 1] == src[i + 1] != src[i]:
            out[i] = src[i - 1]
    return out


def aggregate_regions(
    preds: Sequence[WindowPrediction],
    downsample_factor: int,
) -> list[CaptureRegion]:
    """Merge label-1 window intervals into raw-coordinate capture regions.

    Overlapping or exactly adjacent (gap 0) intervals merge; each region's
    confidence is the mean probability of its member windows. Output is
    sorted and disjoint.
    """
    if downsample_factor < 1:
        raise ValueError("downsample factor must be >= 1")
    regions: list[CaptureRegion] = []
    cur_start = cur_end = None
    cur_probs: list[float] = []

    def close():
        if cur_start is not None:
            regions.append(
                CaptureRegion(
                    start_raw=cur_start * downsample_factor,
                    end_raw=cur_end * downsample_factor,
                    confidence=region_confidence(cur_probs),
                )
            )

    prev_start = None
    for p in preds:
        if prev_start is not None and p.ds_start < prev_start:
            raise ValueError("predictions must be ordered by ds_start")
        prev_start = p.ds_start
        if p.label != 1:
            continue
        if cur_start is not None and p.ds_start <= cur_end:
            cur_end = max(cur_end, p.ds_end)
            cur_probs.append(p.probability)
        else:
            close()
            cur_start, cur_end = p.ds_start, p.ds_end
            cur_probs = [p.probability]
    close()
    check_sorted_disjoint(regions)
    return regions


def region_confidence(probs: Sequence[float]) -> float:
    """Mean member-window probability; shared by the offline aggregator and
    the streaming detector so both produce identical confidences."""
    return float(np.mean(np.asarray(probs, dtype=np.float64)))
