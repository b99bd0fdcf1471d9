"""Run-level splits and balanced window dataset assembly.

Splitting happens at the run level so windows from one experimental run can
never appear on both sides of a train/test boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .preprocess import (
    Window,
    decimate_strided,
    downsample,
    label_window,
    make_windows,
    normalize,
)
from .types import CaptureAnnotation, DetectorConfig, Trace, round_half_up


def reduce_trace(samples: np.ndarray, config: DetectorConfig) -> np.ndarray:
    """Downsample per the configured method (block mean or strided)."""
    if config.downsample_method == "stride":
        return decimate_strided(samples, config.downsample_factor)
    return downsample(samples, config.downsample_factor)


@dataclass(frozen=True)
class AnnotatedTrace:
    """A trace paired with its ground-truth capture annotations."""

    trace: Trace
    annotations: tuple[CaptureAnnotation, ...]

    def __post_init__(self) -> None:
        anns = tuple(sorted(self.annotations))
        prev_end = 0
        for a in anns:
            if a.start_raw < prev_end:
                raise ValueError("annotations overlap")
            if a.end_raw > len(self.trace):
                raise ValueError("annotation extends past trace end")
            prev_end = a.end_raw
        object.__setattr__(self, "annotations", anns)

    @property
    def run_id(self) -> str:
        return self.trace.run_id


@dataclass(frozen=True)
class RunSplit:
    """Disjoint train/validation/test run-id partitions."""

    train: frozenset[str]
    val: frozenset[str]
    test: frozenset[str]

    def __post_init__(self) -> None:
        if self.train & self.val or self.train & self.test or self.val & self.test:
            raise ValueError("split partitions overlap")

    def partition_of(self, run_id: str) -> str:
        for name in ("train", "val", "test"):
            if run_id in getattr(self, name):
                return name
        raise KeyError(f"run {run_id!r} not in split")

    def as_dict(self) -> dict:
        return {
            "train": sorted(self.train),
            "val": sorted(self.val),
            "test": sorted(self.test),
        }


def split_runs(
    run_ids: Iterable[str],
    fractions: tuple[float, float, float] = (0.72, 0.18, 0.10),
    seed: int = 0,
) -> RunSplit:
    """Seeded run-level split.

    Validation and test counts are round-half-up of their fractions; the
    remainder lands in train (the largest partition absorbs rounding error).
    Input order does not matter: ids are sorted before the seeded shuffle.
    """
    ids = sorted(set(run_ids))
    n = len(ids)
    if n < 3:
        raise ValueError(f"need at least 3 runs to split, got {n}")
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be three values summing to 1")
    n_val = round_half_up(fractions[1] * n)
    n_test = round_half_up(fractions[2] * n)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"split of {n} runs leaves an empty partition")
    rng = np.random.default_rng(seed)
    shuffled = [ids[i] for i in rng.permutation(n)]
    return RunSplit(
        train=frozenset(shuffled[:n_train]),
        val=frozenset(shuffled[n_train : n_train + n_val]),
        test=frozenset(shuffled[n_train + n_val :]),
    )


@dataclass
class BalancedDataset:
    """Label-balanced window matrix ready for training.

    ``x`` rows are normalized windows, ``y`` their binary labels; ``meta``
    keeps (run_id, channel, ds_start) provenance per row.
    """

    x: np.ndarray
    y: np.ndarray
    meta: list[tuple[str, int, int]] = field(repr=False)
    n_pos: int = 0
    n_neg: int = 0

    def __len__(self) -> int:
        return int(self.x.shape[0])


def training_windows(run: AnnotatedTrace, config: DetectorConfig) -> list[Window]:
    """Regular-grid labeled windows at the training stride (tail dropped)."""
    ds = reduce_trace(run.trace.samples, config)
    norm = normalize(ds, config.normalization_scale_pa)
    windows = make_windows(
        norm,
        config.window_size,
        config.train_step,
        run_id=run.run_id,
        channel=run.trace.channel,
        end_aligned=False,
    )
    f = config.downsample_factor
    return [
        Window(
            run_id=w.run_id,
            channel=w.channel,
            ds_start=w.ds_start,
            values=w.values,
            label=label_window((w.ds_start * f, w.ds_end * f), run.annotations),
        )
        for w in windows
    ]


def inference_windows(run: AnnotatedTrace, config: DetectorConfig) -> list[Window]:
    """Tiling labeled windows at the inference stride, tail included."""
    ds = reduce_trace(run.trace.samples, config)
    norm = normalize(ds, config.normalization_scale_pa)
    windows = make_windows(
        norm,
        config.window_size,
        config.infer_step,
        run_id=run.run_id,
        channel=run.trace.channel,
        end_aligned=True,
    )
    f = config.downsample_factor
    return [
        Window(
            run_id=w.run_id,
            channel=w.channel,
            ds_start=w.ds_start,
            values=w.values,
            label=label_window((w.ds_start * f, w.ds_end * f), run.annotations),
        )
        for w in windows
    ]


def build_balanced_dataset(
    runs: Sequence[AnnotatedTrace],
    config: DetectorConfig,
    seed: int = 0,
    allowed_run_ids: Optional[set[str]] = None,
) -> BalancedDataset:
    """Assemble a 1:1 capture/non-capture window dataset.

    All capture windows are kept and non-capture windows are subsampled
    uniformly without replacement down to the positive count. Degenerate
    data with fewer negatives than positives keeps all negatives and
    subsamples positives instead. ``allowed_run_ids`` is the leakage guard:
    any run outside it is rejected outright.
    """
    pos: list[Window] = []
    neg: list[Window] = []
    for run in runs:
        if allowed_run_ids is not None and run.run_id not in allowed_run_ids:
            raise ValueError(
                f"run {run.run_id!r} is outside the allowed partition; "
                "refusing to leak windows across the split"
            )
        for w in training_windows(run, config):
            (pos if w.label == 1 else neg).append(w)
    if not pos:
        raise ValueError("no positive examples: no window overlaps a capture annotation")

    rng = np.random.default_rng(seed)
    if len(neg) >= len(pos):
        keep = rng.choice(len(neg), size=len(pos), replace=False)
        neg = [neg[i] for i in sorted(keep)]
    else:
        keep = rng.choice(len(pos), size=len(neg), replace=False)
        pos = [pos[i] for i in sorted(keep)]

    windows = pos + neg
    x = np.stack([w.values for w in windows]).astype(np.float32)
    y = np.array([w.label for w in windows], dtype=np.float32)
    meta = [(w.run_id, w.channel, w.ds_start) for w in windows]
    return BalancedDataset(x=x, y=y, meta=meta, n_pos=len(pos), n_neg=len(neg))
