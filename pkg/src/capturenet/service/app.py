"""HTTP surface: session control, channel queries, and the event stream.

Payloads follow the JSON Schemas shipped in ``capturenet/schemas/``. The
event stream is server-sent events with ``channel_update``, ``region``, and
``heartbeat`` payloads; it ends once the session reaches a terminal state
and the queue drains.
"""

from __future__ import annotations

import json
import time

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .. import __version__
from .schemas import (
    ChannelSummary,
    CreateSessionRequest,
    SessionInfo,
    SignalResponse,
    SpeedRequest,
    ThresholdRequest,
)
from .sessions import Session, SessionManager

HEARTBEAT_INTERVAL_S = 2.0


def create_app(manager: SessionManager | None = None) -> FastAPI:
    app = FastAPI(title="capturenet", version=__version__)
    app.state.manager = manager or SessionManager()
    # localhost tool: the dashboard is typically served from another port
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def get_session(session_id: str) -> Session:
        try:
            return app.state.manager.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    def get_channel(session: Session, channel: int):
        try:
            return session.channel(channel)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown channel {channel}")

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/sessions", response_model=SessionInfo)
    def create_session(request: CreateSessionRequest):
        try:
            session = app.state.manager.create(request)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return session.info_dict()

    @app.get("/api/sessions", response_model=list[SessionInfo])
    def list_sessions():
        return [s.info_dict() for s in app.state.manager.list()]

    @app.get("/api/sessions/{session_id}", response_model=SessionInfo)
    def session_info(session_id: str):
        return get_session(session_id).info_dict()

    @app.delete("/api/sessions/{session_id}", response_model=SessionInfo)
    def stop_session(session_id: str):
        get_session(session_id)
        return app.state.manager.stop(session_id).info_dict()

    @app.get("/api/sessions/{session_id}/channels",
             response_model=list[ChannelSummary])
    def list_channels(session_id: str):
        session = get_session(session_id)
        out = []
        for number in sorted(session.channels):
            rt = session.channels[number]
            with rt.lock:
                out.append(
                    ChannelSummary(
                        channel=number,
                        status=rt.detector.status,
                        last_update=rt.last_update,
                        n_regions=len(rt.detector.regions()),
                    )
                )
        return out

    @app.get("/api/sessions/{session_id}/channels/{channel}/signal",
             response_model=SignalResponse)
    def channel_signal(session_id: str, channel: int,
                       max_points: int = Query(default=2000, ge=2, le=100_000)):
        session = get_session(session_id)
        rt = get_channel(session, channel)
        with rt.lock:
            det = rt.detector
            indices, values = det.signal_tail(max_points=max_points)
            regions = det.regions()
            windows = det.window_predictions()
            status = det.status
        return SignalResponse(
            channel=channel,
            status=status,
            downsample_factor=session.config.downsample_factor,
            sample_rate_hz=rt.detector.sample_rate_hz,
            threshold=session.threshold,
            indices=[int(i) for i in indices],
            values=[float(v) for v in values],
            regions=[
                {"start_raw": r.start_raw, "end_raw": r.end_raw,
                 "confidence": r.confidence}
                for r in regions
            ],
            windows=[
                {"ds_start": w.ds_start, "ds_end": w.ds_end,
                 "probability": w.probability, "label": w.label}
                for w in windows
            ],
        )

    @app.get("/api/sessions/{session_id}/channels/{channel}/export")
    def channel_export(session_id: str, channel: int):
        session = get_session(session_id)
        get_channel(session, channel)
        return session.export_channel(channel).as_dict()

    @app.get("/api/sessions/{session_id}/export")
    def session_export(session_id: str):
        session = get_session(session_id)
        return [session.export_channel(n).as_dict() for n in sorted(session.channels)]

    @app.post("/api/sessions/{session_id}/threshold", response_model=SessionInfo)
    def set_threshold(session_id: str, request: ThresholdRequest):
        session = get_session(session_id)
        session.set_threshold(request.threshold)
        return session.info_dict()

    @app.post("/api/sessions/{session_id}/speed", response_model=SessionInfo)
    def set_speed(session_id: str, request: SpeedRequest):
        session = get_session(session_id)
        try:
            session.set_speed(request.speed)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return session.info_dict()

    @app.get("/api/sessions/{session_id}/events")
    def event_stream(session_id: str):
        session = get_session(session_id)

        def generate():
            sub = session.broadcaster.subscribe()
            try:
                while True:
                    item = sub.pop(timeout=HEARTBEAT_INTERVAL_S)
                    if item is not None:
                        yield f"event: {item['type']}\ndata: {json.dumps(item)}\n\n"
                        continue
                    if session.state != "running":
                        break
                    heartbeat = {"type": "heartbeat", "ts": time.time()}
                    yield f"event: heartbeat\ndata: {json.dumps(heartbeat)}\n\n"
            finally:
                session.broadcaster.unsubscribe(sub)

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app


app = create_app()
