"""Session lifecycle: sources, per-channel workers, and event fan-out.

Each channel's detector is owned by the single feeder thread (single
writer); query endpoints take the channel lock only long enough to copy a
consistent snapshot. The event broadcaster is multi-producer in principle
but fed by the one feeder; subscribers get bounded queues where overflow
drops the oldest non-region event first — region events are never dropped.
"""

from __future__ import annotations

import math
import tempfile
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..fileio import read_trace, write_trace_bin
from ..nn.weights import load_weights
from ..pipeline import config_snapshot, model_id
from ..sim import SimParams, generate_run
from ..streaming import DeadPoreRule, RegionEvent, StatusEvent, StreamingDetector
from ..types import MAX_CHANNELS, DetectorConfig
from .schemas import CreateSessionRequest, LiveSimSourceModel, ReplaySourceModel

FEED_TICK_S = 0.25
MAX_CHUNK = 4_000_000
SUBSCRIBER_QUEUE_LIMIT = 4096


class EventBroadcaster:
    """Fan-out of wire-format event dicts to subscriber queues."""

    def __init__(self, limit: int = SUBSCRIBER_QUEUE_LIMIT):
        self._limit = limit
        self._subs: list[_Subscriber] = []
        self._lock = threading.Lock()

    def subscribe(self) -> "_Subscriber":
        sub = _Subscriber(self._limit)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: "_Subscriber") -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def publish(self, event: dict) -> None:
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            sub.push(event)


class _Subscriber:
    def __init__(self, limit: int):
        self._limit = limit
        self._items: deque[dict] = deque()
        self._cond = threading.Condition()

    def push(self, event: dict) -> None:
        with self._cond:
            if len(self._items) >= self._limit:
                # shed load without ever losing a region event
                for i, item in enumerate(self._items):
                    if item.get("type") != "region":
                        del self._items[i]
                        break
            self._items.append(event)
            self._cond.notify()

    def pop(self, timeout: float) -> Optional[dict]:
        with self._cond:
            if not self._items:
                self._cond.wait(timeout)
            if self._items:
                return self._items.popleft()
            return None


def event_to_wire(event) -> dict:
    if isinstance(event, StatusEvent):
        return {"type": "channel_update", "channel": event.channel,
                "status": event.status}
    if isinstance(event, RegionEvent):
        return {
            "type": "region",
            "channel": event.channel,
            "start_raw": event.start_raw,
            "end_raw": event.end_raw,
            "confidence": event.confidence,
        }
    raise TypeError(f"unknown event {event!r}")


@dataclass
class ChannelRuntime:
    detector: StreamingDetector
    samples: np.ndarray = field(repr=False)
    cursor: int = 0
    last_update: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def exhausted(self) -> bool:
        return self.cursor >= self.samples.size


class Session:
    def __init__(self, request: CreateSessionRequest):
        self.id = uuid.uuid4().hex[:12]
        self.request = request
        self.model = load_weights(request.weights_path)
        self.config = self._detector_config(request)
        self.dead_rule = DeadPoreRule(
            window_s=request.dead_pore.window_s,
            percentile=request.dead_pore.percentile,
            threshold_pa=request.dead_pore.threshold_pa,
        )
        self.threshold = self.config.threshold
        self.speed: float = math.inf if request.speed == "max" else float(request.speed)
        if self.speed <= 0:
            raise ValueError("speed must be positive")
        self.broadcaster = EventBroadcaster()
        self.state = "running"
        self.error: Optional[str] = None
        self._stop = threading.Event()
        self._tmpdir: Optional[tempfile.TemporaryDirectory] = None
        self.channels: dict[int, ChannelRuntime] = {}
        self._load_channels(request.source)
        self._thread = threading.Thread(target=self._feed_loop, daemon=True,
                                        name=f"session-{self.id}")
        self._thread.start()

    # -- setup -------------------------------------------------------------------

    def _detector_config(self, request: CreateSessionRequest) -> DetectorConfig:
        base = DetectorConfig()
        ov = request.detector
        # the CNN fixes its own window; an absent override adopts it, an
        # explicit mismatch is a configuration error
        model_window = getattr(self.model, "window_size", None)
        window = ov.window_size or model_window or base.window_size
        if model_window is not None and window != model_window:
            raise ValueError(
                f"window_size {window} does not match the model's "
                f"window {model_window}"
            )
        return DetectorConfig(
            downsample_factor=ov.downsample_factor or base.downsample_factor,
            window_size=window,
            threshold=ov.threshold or base.threshold,
            normalization_scale_pa=ov.normalization_scale_pa
            or base.normalization_scale_pa,
        )

    def _load_channels(self, source) -> None:
        if isinstance(source, ReplaySourceModel):
            traces = [read_trace(p) for p in source.paths]
        elif isinstance(source, LiveSimSourceModel):
            traces = self._materialize_sim(source)
        else:
            raise ValueError(f"unknown source {source!r}")
        if len(traces) > MAX_CHANNELS:
            raise ValueError(f"{len(traces)} channels exceed the {MAX_CHANNELS} limit")
        for trace in traces:
            if trace.channel in self.channels:
                raise ValueError(f"duplicate channel {trace.channel} in source")
            det = StreamingDetector(
                self.model,
                self.config,
                sample_rate_hz=trace.sample_rate_hz,
                run_id=trace.run_id,
                channel=trace.channel,
                dead_rule=self.dead_rule,
            )
            self.channels[trace.channel] = ChannelRuntime(
                detector=det, samples=trace.samples
            )

    def _materialize_sim(self, src: LiveSimSourceModel):
        # simulated runs are written to session-scoped files first so very
        # large channel counts replay from disk rather than resident memory
        self._tmpdir = tempfile.TemporaryDirectory(prefix=f"capturenet-{self.id}-")
        params = SimParams(
            sample_rate_hz=src.sample_rate_hz,
            capture_duration_s=src.capture_duration_s,
            transloc_duration_s=src.transloc_duration_s,
            min_filler_s=src.min_filler_s,
        )
        traces = []
        rng = np.random.default_rng(src.seed)
        for i in range(src.n_channels):
            channel = i + 1
            n_captures = int(rng.integers(src.captures_min, src.captures_max + 1))
            trace, _ = generate_run(
                n_captures,
                src.total_samples,
                seed=int(np.random.SeedSequence([src.seed, i]).generate_state(1)[0]),
                params=params,
                run_id=f"sim-{self.id}-{channel:03d}",
                channel=channel,
            )
            path = Path(self._tmpdir.name) / f"{trace.run_id}.nptr"
            write_trace_bin(trace, path)
            traces.append(read_trace(path))
        return traces

    # -- feeding -----------------------------------------------------------------

    def _chunk_size(self, rate: float) -> int:
        if math.isinf(self.speed):
            return MAX_CHUNK
        return max(1, int(rate * FEED_TICK_S * self.speed))

    def _feed_loop(self) -> None:
        try:
            while not self._stop.is_set():
                fed_any = False
                for rt in self.channels.values():
                    if rt.exhausted:
                        continue
                    fed_any = True
                    chunk = self._chunk_size(rt.detector.sample_rate_hz)
                    with rt.lock:
                        piece = rt.samples[rt.cursor : rt.cursor + chunk]
                        rt.cursor += piece.size
                        events = rt.detector.ingest(piece)
                        if rt.exhausted:
                            events += rt.detector.finish()
                        rt.last_update = time.time()
                    for ev in events:
                        self.broadcaster.publish(event_to_wire(ev))
                if not fed_any:
                    self.state = "finished"
                    return
                if not math.isinf(self.speed):
                    time.sleep(FEED_TICK_S)
        except Exception as exc:
            self.state = "failed"
            self.error = f"{type(exc).__name__}: {exc}"
        finally:
            if self._tmpdir is not None:
                self._tmpdir.cleanup()
                self._tmpdir = None

    # -- control -----------------------------------------------------------------

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=10)
        if self.state == "running":
            self.state = "stopped"

    def set_threshold(self, value: float) -> None:
        self.threshold = value
        for rt in self.channels.values():
            with rt.lock:
                rt.detector.set_threshold(value)

    def set_speed(self, speed) -> None:
        value = math.inf if speed == "max" else float(speed)
        if value <= 0:
            raise ValueError("speed must be positive")
        self.speed = value

    # -- snapshots ---------------------------------------------------------------

    def channel(self, number: int) -> ChannelRuntime:
        if number not in self.channels:
            raise KeyError(f"unknown channel {number}")
        return self.channels[number]

    def export_channel(self, number: int):
        from ..fileio import make_export

        rt = self.channel(number)
        with rt.lock:
            det = rt.detector
            return make_export(
                run_id=det.run_id,
                channel=det.channel,
                status=det.status,
                regions=det.regions(),
                config=config_snapshot(self.model, self.config,
                                       threshold=self.threshold),
            )

    def info_dict(self) -> dict:
        return {
            "session_id": self.id,
            "state": self.state,
            "n_channels": len(self.channels),
            "threshold": self.threshold,
            "speed": "max" if math.isinf(self.speed) else self.speed,
            "model_id": model_id(self.model),
            "error": self.error,
        }


class SessionManager:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, request: CreateSessionRequest) -> Session:
        session = Session(request)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(f"unknown session {session_id}")
            return self._sessions[session_id]

    def stop(self, session_id: str) -> Session:
        session = self.get(session_id)
        session.stop()
        return session

    def list(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())
