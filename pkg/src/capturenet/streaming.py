"""Incremental per-channel capture detection.

The detector consumes raw-sample chunks of arbitrary size and reproduces the
offline pipeline exactly: downsample blocks are aligned to absolute sample
indices, windows tile the downsampled stream at the inference stride, and
the isolated-window flip rule is applied with one window of latency (a
window's label is finalized once its right neighbor exists; the final
window is finalized as-is at stream end, which matches the offline rule of
never flipping endpoints). Feeding a whole trace as one chunk therefore
yields byte-identical regions to feeding it in arbitrary pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .postprocess import WindowPrediction, region_confidence
from .types import CaptureRegion, DetectorConfig

DEFAULT_DEAD_WINDOW_S = 10.0
DEFAULT_DEAD_PERCENTILE = 95.0
DEFAULT_DEAD_THRESHOLD_PA = 10.0
DEFAULT_HORIZON_DS = 120_000
_TRIM_SLACK = 16_384


@dataclass(frozen=True)
class StatusEvent:
    channel: int
    status: str


@dataclass(frozen=True)
class RegionEvent:
    channel: int
    start_raw: int
    end_raw: int
    confidence: float


@dataclass(frozen=True)
class DeadPoreRule:
    """Low-signal-activity flag: a pore is dead when the high percentile of
    |current| over the trailing window stays under the threshold. The
    defaults separate dead/closed (~5 pA) from capture (~20 pA with
    near-zero drops)."""

    window_s: float = DEFAULT_DEAD_WINDOW_S
    percentile: float = DEFAULT_DEAD_PERCENTILE
    threshold_pa: float = DEFAULT_DEAD_THRESHOLD_PA


class StreamingDetector:
    """Single-channel incremental detector (single writer, see module doc)."""

    def __init__(
        self,
        model,
        config: DetectorConfig,
        sample_rate_hz: float,
        run_id: str = "",
        channel: int = 1,
        dead_rule: DeadPoreRule = DeadPoreRule(),
        horizon_ds: int = DEFAULT_HORIZON_DS,
    ):
        if sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        self.model = model
        self.config = config
        self.sample_rate_hz = float(sample_rate_hz)
        self.run_id = run_id
        self.channel = channel
        self.dead_rule = dead_rule
        self.horizon_ds = max(
            int(horizon_ds),
            config.window_size,
            self._trailing_ds_points(),
        )

        self._threshold = config.threshold
        self._raw_rem = np.empty(0, dtype=np.float32)
        self._ds = np.empty(0, dtype=np.float32)
        self._ds_base = 0  # absolute ds index of _ds[0]
        self._ds_total = 0
        self._next_start = 0

        self._win_starts: list[int] = []
        self._probs: list[float] = []
        self._raw_labels: list[int] = []
        self._confirmed: list[int] = []

        self._regions: list[CaptureRegion] = []
        self._open: Optional[list] = None  # [start_ds, end_ds, probs]
        self._status = "active"
        self._finished = False

    # -- public views -----------------------------------------------------------

    @property
    def status(self) -> str:
        return self._status

    @property
    def ds_total(self) -> int:
        return self._ds_total

    @property
    def raw_total(self) -> int:
        return self._ds_total * self.config.downsample_factor + int(self._raw_rem.size)

    @property
    def threshold(self) -> float:
        return self._threshold

    @property
    def finished(self) -> bool:
        return self._finished

    def set_threshold(self, value: float) -> None:
        """Applies to windows classified after this call; confirmed labels
        and regions are never revised."""
        if not 0.0 < value < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        self._threshold = float(value)

    def regions(self) -> list[CaptureRegion]:
        """Confirmed regions, including the still-growing open one."""
        out = list(self._regions)
        if self._open is not None:
            out.append(self._region_from_open())
        return out

    def window_predictions(self) -> list[WindowPrediction]:
        """All classified windows; confirmed labels where available, raw
        (pre-smoothing) labels for the still-pending tail."""
        out = []
        w = self.config.window_size
        for i, start in enumerate(self._win_starts):
            label = self._confirmed[i] if i < len(self._confirmed) else self._raw_labels[i]
            out.append(
                WindowPrediction(ds_start=start, ds_end=start + w,
                                 probability=self._probs[i], label=label)
            )
        return out

    def signal_tail(self, max_points: Optional[int] = None):
        """Trailing downsampled signal as (absolute ds indices, pA values),
        min/max-decimated to at most ``max_points``."""
        if max_points is None or self._ds.size <= max_points:
            idx = np.arange(self._ds_base, self._ds_base + self._ds.size)
            return idx, self._ds.copy()
        return decimate_minmax(self._ds, self._ds_base, max_points)

    # -- ingestion ----------------------------------------------------------------

    def ingest(self, samples) -> list:
        """Append a raw chunk; returns status/region events it triggered."""
        if self._finished:
            raise RuntimeError("detector already finished")
        arr = np.asarray(samples, dtype=np.float32).ravel()
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("non-finite input")
        events: list = []
        if arr.size:
            buf = np.concatenate([self._raw_rem, arr]) if self._raw_rem.size else arr
            factor = self.config.downsample_factor
            n_blocks = buf.size // factor
            if n_blocks:
                if self.config.downsample_method == "stride":
                    reduced = buf[: n_blocks * factor : factor].copy()
                else:
                    reduced = buf[: n_blocks * factor].reshape(n_blocks, factor) \
                        .mean(axis=1)
                self._append_ds(reduced)
                self._raw_rem = buf[n_blocks * factor :].copy()
                self._run_windows(events)
            else:
                self._raw_rem = buf
        self._update_status(events)
        return events

    def finish(self) -> list:
        """End of stream: drop the partial block, classify the end-aligned
        tail window, finalize pending labels and the open region."""
        if self._finished:
            return []
        events: list = []
        w = self.config.window_size
        if self._win_starts and self._win_starts[-1] + w < self._ds_total:
            self._classify(self._ds_total - w)
        while len(self._confirmed) < len(self._raw_labels):
            self._confirm_next(events, at_end=True)
        if self._open is not None:
            self._regions.append(self._region_from_open())
            self._open = None
        self._finished = True
        self._update_status(events)
        return events

    # -- internals ------------------------------------------------------------------

    def _append_ds(self, means: np.ndarray) -> None:
        self._ds = np.concatenate([self._ds, means.astype(np.float32)])
        self._ds_total += means.size
        # trim the front once nothing (windows, display, dead rule) needs it
        needed_windows = min(self._next_start,
                             max(0, self._ds_total - self.config.window_size))
        needed_display = max(0, self._ds_total - self.horizon_ds)
        keep_from = min(needed_windows, needed_display)
        if keep_from - self._ds_base > _TRIM_SLACK:
            self._ds = self._ds[keep_from - self._ds_base :]
            self._ds_base = keep_from

    def _ds_slice(self, start: int, end: int) -> np.ndarray:
        return self._ds[start - self._ds_base : end - self._ds_base]

    def _run_windows(self, events: list) -> None:
        w = self.config.window_size
        step = self.config.infer_step
        while self._next_start + w <= self._ds_total:
            self._classify(self._next_start)
            self._next_start += step
            self._maybe_confirm(events)

    def _classify(self, start: int) -> None:
        w = self.config.window_size
        values = self._ds_slice(start, start + w) / np.float32(
            self.config.normalization_scale_pa
        )
        prob = float(self.model.predict_proba(values[None, :])[0])
        self._win_starts.append(start)
        self._probs.append(prob)
        self._raw_labels.append(1 if prob >= self._threshold else 0)

    def _maybe_confirm(self, events: list) -> None:
        # label i is final once label i+1 exists; label 0 is final immediately
        while len(self._confirmed) < len(self._raw_labels):
            i = len(self._confirmed)
            if i != 0 and i + 1 >= len(self._raw_labels):
                break
            self._confirm_next(events, at_end=False)

    def _confirm_next(self, events: list, at_end: bool) -> None:
        raw = self._raw_labels
        i = len(self._confirmed)
        if i == 0 or i == len(raw) - 1 and at_end:
            label = raw[i]
        elif raw[i - 1] == raw[i + 1] != raw[i]:
            label = raw[i - 1]
        else:
            label = raw[i]
        self._confirmed.append(label)
        if label == 1:
            self._extend_regions(i, events)
        elif self._open is not None:
            self._regions.append(self._region_from_open())
            self._open = None

    def _extend_regions(self, i: int, events: list) -> None:
        w = self.config.window_size
        start, end = self._win_starts[i], self._win_starts[i] + w
        prob = self._probs[i]
        if self._open is not None and start <= self._open[1]:
            self._open[1] = max(self._open[1], end)
            self._open[2].append(prob)
        else:
            if self._open is not None:
                self._regions.append(self._region_from_open())
            self._open = [start, end, [prob]]
        reg = self._region_from_open()
        events.append(
            RegionEvent(channel=self.channel, start_raw=reg.start_raw,
                        end_raw=reg.end_raw, confidence=reg.confidence)
        )

    def _region_from_open(self) -> CaptureRegion:
        factor = self.config.downsample_factor
        return CaptureRegion(
            start_raw=self._open[0] * factor,
            end_raw=self._open[1] * factor,
            confidence=region_confidence(self._open[2]),
        )

    def _trailing_ds_points(self) -> int:
        return max(
            1, int(round(self.dead_rule.window_s * self.sample_rate_hz
                         / self.config.downsample_factor))
        )

    def _update_status(self, events: list) -> None:
        if self._ds_total == 0:
            return
        trail = self._trailing_ds_points()
        tail = self._ds[max(0, self._ds.size - trail) :]
        if float(np.percentile(np.abs(tail), self.dead_rule.percentile)) \
                < self.dead_rule.threshold_pa:
            status = "dead"
        else:
            factor = self.config.downsample_factor
            span_start = max(0, self._ds_total - trail) * factor
            span_end = self._ds_total * factor
            in_capture = any(
                r.start_raw < span_end and r.end_raw > span_start
                for r in self.regions()
            )
            status = "capture" if in_capture else "active"
        if status != self._status:
            self._status = status
            events.append(StatusEvent(channel=self.channel, status=status))


def decimate_minmax(values: np.ndarray, base_index: int, max_points: int):
    """Bucketed min/max decimation that preserves extremes.

    Returns (absolute indices, values) with at most ``max_points`` entries,
    ordered by index.
    """
    if max_points < 2:
        raise ValueError("max_points must be >= 2")
    n = values.size
    if n <= max_points:
        return np.arange(base_index, base_index + n), values.copy()
    n_buckets = max_points // 2
    bounds = np.linspace(0, n, n_buckets + 1).astype(int)
    idx_out: list[int] = []
    val_out: list[float] = []
    for b in range(n_buckets):
        lo, hi = bounds[b], bounds[b + 1]
        if hi <= lo:
            continue
        seg = values[lo:hi]
        i_min = int(np.argmin(seg)) + lo
        i_max = int(np.argmax(seg)) + lo
        picks = sorted({i_min, i_max})
        for i in picks:
            idx_out.append(base_index + i)
            val_out.append(float(values[i]))
    return np.asarray(idx_out, dtype=np.int64), np.asarray(val_out, dtype=np.float32)
