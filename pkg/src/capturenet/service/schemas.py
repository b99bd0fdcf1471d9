"""Wire-protocol request/response models.

JSON Schemas for the non-trivial payloads (detection export, stream events,
channel summaries, signal responses) ship in ``capturenet/schemas/`` and are
what external clients should validate against; these pydantic models are the
server-side mirror.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

Status = Literal["active", "capture", "dead", "translocating"]


class ReplaySourceModel(BaseModel):
    kind: Literal["replay"] = "replay"
    paths: list[str] = Field(min_length=1, description="Trace files, one channel each")


class LiveSimSourceModel(BaseModel):
    kind: Literal["live-sim"] = "live-sim"
    n_channels: int = Field(ge=1, le=512)
    seed: int = 0
    total_samples: int = Field(default=1_200_000, ge=1)
    captures_min: int = Field(default=0, ge=0)
    captures_max: int = Field(default=3, ge=0)
    sample_rate_hz: float = Field(default=4000.0, gt=0)
    capture_duration_s: tuple[float, float] = (60.0, 240.0)
    transloc_duration_s: tuple[float, float] = (20.0, 90.0)
    min_filler_s: float = Field(default=20.0, gt=0)


class DetectorOverrides(BaseModel):
    downsample_factor: Optional[int] = Field(default=None, ge=1)
    window_size: Optional[int] = Field(default=None, ge=1)
    threshold: Optional[float] = Field(default=None, gt=0, lt=1)
    normalization_scale_pa: Optional[float] = Field(default=None, gt=0)


class DeadPoreModel(BaseModel):
    window_s: float = Field(default=10.0, gt=0)
    percentile: float = Field(default=95.0, gt=0, le=100)
    threshold_pa: float = Field(default=10.0, gt=0)


class CreateSessionRequest(BaseModel):
    source: Union[ReplaySourceModel, LiveSimSourceModel] = Field(discriminator="kind")
    weights_path: str
    speed: Union[float, Literal["max"]] = "max"
    detector: DetectorOverrides = DetectorOverrides()
    dead_pore: DeadPoreModel = DeadPoreModel()


class SessionInfo(BaseModel):
    session_id: str
    state: Literal["running", "finished", "stopped", "failed"]
    n_channels: int
    threshold: float
    speed: Union[float, Literal["max"]]
    model_id: str
    error: Optional[str] = None


class ChannelSummary(BaseModel):
    channel: int
    status: Status
    last_update: float
    n_regions: int


class RegionModel(BaseModel):
    start_raw: int
    end_raw: int
    confidence: float


class WindowProbModel(BaseModel):
    ds_start: int
    ds_end: int
    probability: float
    label: Literal[0, 1]


class SignalResponse(BaseModel):
    channel: int
    status: Status
    downsample_factor: int
    sample_rate_hz: float
    threshold: float
    indices: list[int]
    values: list[float]
    regions: list[RegionModel]
    windows: list[WindowProbModel]


class ThresholdRequest(BaseModel):
    threshold: float = Field(gt=0, lt=1)


class SpeedRequest(BaseModel):
    speed: Union[float, Literal["max"]]


class ErrorResponse(BaseModel):
    detail: str
