import { ApiClient, ConnectionState, EventSourceFactory, EventStream } from "./api.js";
import { DetailView } from "./detail.js";
import { ChannelGrid } from "./grid.js";
import type { SessionInfo, StreamEvent } from "./types.js";

const GRID_POLL_BATCH = 32;
const GRID_POLL_INTERVAL_MS = 1000;

export interface DashboardOptions {
  api: ApiClient;
  root: HTMLElement;
  eventSourceFactory?: EventSourceFactory;
  /** disable timers in tests */
  autoPoll?: boolean;
}

/**
 * Operator console: session controls, the 512-tile grid with live status
 * colors, and the per-channel detail view. Holds no detection logic; every
 * region, status, and likelihood shown comes straight from protocol
 * payloads.
 */
export class Dashboard {
  readonly detail: DetailView;
  private api: ApiClient;
  private root: HTMLElement;
  private session: SessionInfo | null = null;
  private stream: EventStream | null = null;
  private banner: HTMLElement;
  private header: HTMLElement;
  private gridRoot: HTMLElement;
  private selected: number | null = null;
  private pollCursor = 0;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private factory?: EventSourceFactory;
  private autoPoll: boolean;
  private _grid: ChannelGrid | null = null;

  constructor(options: DashboardOptions) {
    this.api = options.api;
    this.root = options.root;
    this.factory = options.eventSourceFactory;
    this.autoPoll = options.autoPoll ?? true;
    this.root.innerHTML = `
      <div class="reconnect-banner hidden">connection lost — reconnecting…</div>
      <header class="summary-header">
        <span class="count-dead">0 dead</span>
        <span class="count-capture">0 capture-active</span>
        <span class="count-transloc">0 translocating</span>
        <span class="session-state"></span>
        <label class="speed-control">speed
          <select class="speed-select">
            <option value="1">1x</option>
            <option value="10">10x</option>
            <option value="100">100x</option>
            <option value="max">max</option>
          </select>
        </label>
        <button class="stop-btn" type="button">stop session</button>
      </header>
      <form class="session-form">
        <input class="weights-input" placeholder="weights path on the service host">
        <input class="paths-input"
               placeholder="replay trace paths, comma separated (empty = live sim)">
        <button class="start-btn" type="submit">start session</button>
      </form>
      <main>
        <div class="grid-root"></div>
        <div class="detail-root"></div>
      </main>
    `;
    this.banner = this.root.querySelector(".reconnect-banner") as HTMLElement;
    this.header = this.root.querySelector(".summary-header") as HTMLElement;
    this.gridRoot = this.root.querySelector(".grid-root") as HTMLElement;
    this.detail = new DetailView(
      this.root.querySelector(".detail-root") as HTMLElement,
      {
        onThreshold: (v) => void this.applyThreshold(v),
        onExport: () => void this.downloadExport(),
      },
    );
    (this.root.querySelector(".speed-select") as HTMLSelectElement)
      .addEventListener("change", (ev) => {
        const raw = (ev.target as HTMLSelectElement).value;
        if (this.session) {
          void this.api.setSpeed(this.session.session_id,
                                 raw === "max" ? "max" : Number(raw));
        }
      });
    (this.root.querySelector(".stop-btn") as HTMLButtonElement)
      .addEventListener("click", () => {
        if (this.session) void this.api.stopSession(this.session.session_id);
      });
    (this.root.querySelector(".session-form") as HTMLFormElement)
      .addEventListener("submit", (ev) => {
        ev.preventDefault();
        void this.startSession();
      });
  }

  /** file-open is delegated to the service's replay source; the browser
   * never parses trace files itself */
  async startSession(): Promise<void> {
    const weights = (this.root.querySelector(".weights-input") as HTMLInputElement)
      .value.trim();
    const rawPaths = (this.root.querySelector(".paths-input") as HTMLInputElement)
      .value.trim();
    if (!weights) return;
    const source = rawPaths
      ? { kind: "replay", paths: rawPaths.split(",").map((p) => p.trim()) }
      : { kind: "live-sim", n_channels: 512, seed: 1, total_samples: 1_200_000 };
    const info = await this.api.createSession({
      source,
      weights_path: weights,
      speed: 1.0,
    });
    this.detach();
    await this.attach(info);
  }

  get gridView(): ChannelGrid | null {
    return this._grid;
  }

  async attach(session: SessionInfo): Promise<void> {
    this.session = session;
    const channels = await this.api.listChannels(session.session_id);
    this._grid = new ChannelGrid(
      this.gridRoot,
      channels.map((c) => c.channel),
      (channel) => void this.select(channel),
    );
    for (const c of channels) {
      this._grid.setStatus(c.channel, c.status);
    }
    this.refreshHeader();
    this.stream = new EventStream(
      this.api.eventsUrl(session.session_id),
      (event) => this.onEvent(event),
      (state) => this.onConnection(state),
      this.factory,
    );
    this.stream.connect();
    if (this.autoPoll) {
      this.pollTimer = setInterval(() => void this.pollSparklines(),
                                   GRID_POLL_INTERVAL_MS);
    }
  }

  detach(): void {
    this.stream?.close();
    if (this.pollTimer) clearInterval(this.pollTimer);
  }

  onEvent(event: StreamEvent): void {
    if (!this._grid) return;
    if (event.type === "channel_update") {
      this._grid.setStatus(event.channel, event.status);
      this.refreshHeader();
    } else if (event.type === "region" && event.channel === this.selected) {
      // keep the open detail view current
      void this.select(event.channel);
    }
  }

  onConnection(state: ConnectionState): void {
    const lost = state !== "open";
    this.banner.classList.toggle("hidden", !lost);
    this._grid?.setConnected(!lost);
  }

  async select(channel: number): Promise<void> {
    if (!this.session) return;
    this.selected = channel;
    const payload = await this.api.fetchSignal(this.session.session_id, channel);
    this.detail.show(payload);
  }

  async applyThreshold(value: number): Promise<void> {
    if (!this.session) return;
    this.session = await this.api.setThreshold(this.session.session_id, value);
    this.refreshHeader();
  }

  async downloadExport(): Promise<void> {
    if (!this.session || this.selected === null) return;
    const doc = await this.api.fetchExport(this.session.session_id, this.selected);
    const blob = new Blob([JSON.stringify(doc, null, 2)],
                          { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `detections-${doc.run_id}-ch${doc.channel}.json`;
    a.click();
    URL.revokeObjectURL(a.href);
  }

  refreshHeader(): void {
    if (!this._grid) return;
    const counts = this._grid.counts();
    (this.header.querySelector(".count-dead") as HTMLElement).textContent =
      `${counts.dead} dead`;
    (this.header.querySelector(".count-capture") as HTMLElement).textContent =
      `${counts.capture} capture-active`;
    // no translocation detector ships; the counter stays at 0
    (this.header.querySelector(".count-transloc") as HTMLElement).textContent =
      `${counts.translocating} translocating`;
    (this.header.querySelector(".session-state") as HTMLElement).textContent =
      this.session ? `session ${this.session.session_id}: ${this.session.state}` : "";
  }

  private async pollSparklines(): Promise<void> {
    if (!this.session || !this._grid) return;
    const channels = this._grid.channels();
    if (channels.length === 0) return;
    const batch = channels.slice(this.pollCursor, this.pollCursor + GRID_POLL_BATCH);
    this.pollCursor = (this.pollCursor + GRID_POLL_BATCH) % channels.length;
    await Promise.all(batch.map(async (channel) => {
      try {
        const sig = await this.api.fetchSignal(this.session!.session_id, channel, 64);
        this._grid!.pushSignal(channel, sig.values);
      } catch {
        // transient fetch failures surface via the connection banner
      }
    }));
  }
}
