import type {
  ChannelSummary,
  DetectionExport,
  SessionInfo,
  SignalResponse,
  StreamEvent,
} from "./types.js";

type FetchLike = typeof fetch;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}/api${path}`, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        detail = (await resp.json()).detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(body: unknown): Promise<SessionInfo> {
    return this.post("/sessions", body);
  }

  getSession(id: string): Promise<SessionInfo> {
    return this.request(`/sessions/${id}`);
  }

  listSessions(): Promise<SessionInfo[]> {
    return this.request("/sessions");
  }

  stopSession(id: string): Promise<SessionInfo> {
    return this.request(`/sessions/${id}`, { method: "DELETE" });
  }

  listChannels(id: string): Promise<ChannelSummary[]> {
    return this.request(`/sessions/${id}/channels`);
  }

  fetchSignal(id: string, channel: number, maxPoints = 2000): Promise<SignalResponse> {
    return this.request(
      `/sessions/${id}/channels/${channel}/signal?max_points=${maxPoints}`,
    );
  }

  fetchExport(id: string, channel: number): Promise<DetectionExport> {
    return this.request(`/sessions/${id}/channels/${channel}/export`);
  }

  setThreshold(id: string, threshold: number): Promise<SessionInfo> {
    return this.post(`/sessions/${id}/threshold`, { threshold });
  }

  setSpeed(id: string, speed: number | "max"): Promise<SessionInfo> {
    return this.post(`/sessions/${id}/speed`, { speed });
  }

  eventsUrl(id: string): string {
    return `${this.baseUrl}/api/sessions/${id}/events`;
  }
}

export type ConnectionState = "connecting" | "open" | "lost";

interface EventSourceLike {
  addEventListener(type: string, listener: (ev: MessageEvent) => void): void;
  onopen: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

const EVENT_TYPES = ["channel_update", "region", "heartbeat"] as const;

/**
 * Session event stream with connection-state reporting. The browser's
 * EventSource reconnects by itself; while it does, consumers get a
 * "lost" state so the UI can grey out rather than show stale data as live.
 */
export class EventStream {
  private source: EventSourceLike | null = null;

  constructor(
    private url: string,
    private onEvent: (event: StreamEvent) => void,
    private onState: (state: ConnectionState) => void,
    private factory: EventSourceFactory = (u) =>
      new EventSource(u) as unknown as EventSourceLike,
  ) {}

  connect(): void {
    this.close();
    this.onState("connecting");
    const source = this.factory(this.url);
    this.source = source;
    source.onopen = () => this.onState("open");
    source.onerror = () => this.onState("lost");
    for (const type of EVENT_TYPES) {
      source.addEventListener(type, (ev) => {
        this.onEvent(JSON.parse(ev.data) as StreamEvent);
      });
    }
  }

  close(): void {
    this.source?.close();
    this.source = null;
  }
}
