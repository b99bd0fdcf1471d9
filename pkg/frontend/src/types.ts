// Wire-protocol payloads (see the service's JSON Schemas for the source of
// truth; these mirror them field for field).

export type ChannelStatus = "active" | "capture" | "dead" | "translocating";

export interface SessionInfo {
  session_id: string;
  state: "running" | "finished" | "stopped" | "failed";
  n_channels: number;
  threshold: number;
  speed: number | "max";
  model_id: string;
  error: string | null;
}

export interface ChannelSummary {
  channel: number;
  status: ChannelStatus;
  last_update: number;
  n_regions: number;
}

export interface Region {
  start_raw: number;
  end_raw: number;
  confidence: number;
}

export interface WindowProb {
  ds_start: number;
  ds_end: number;
  probability: number;
  label: 0 | 1;
}

export interface SignalResponse {
  channel: number;
  status: ChannelStatus;
  downsample_factor: number;
  sample_rate_hz: number;
  threshold: number;
  indices: number[];
  values: number[];
  regions: Region[];
  windows: WindowProb[];
}

export interface DetectionExport {
  schema_version: number;
  run_id: string;
  channel: number;
  status: ChannelStatus;
  dead: boolean;
  captures: Region[];
  translocations: unknown[];
  generated_at: string;
  config: {
    threshold: number;
    window_size: number;
    downsample_factor: number;
    model_id: string;
  };
}

export type StreamEvent =
  | { type: "channel_update"; channel: number; status: ChannelStatus }
  | ({ type: "region"; channel: number } & Region)
  | { type: "heartbeat"; ts: number };
