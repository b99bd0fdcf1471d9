import { ApiClient } from "./api.js";
import { Dashboard } from "./app.js";

// Entry point: connect to the service (same origin by default, or
// ?api=http://host:port), attach to the newest running session or offer to
// start a live-sim demo session.

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "";
  const api = new ApiClient(base);
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  const dashboard = new Dashboard({ api, root });
  const sessions = await api.listSessions();
  const running = sessions.filter((s) => s.state === "running");
  const target = running[running.length - 1] ?? sessions[sessions.length - 1];
  if (target) {
    await dashboard.attach(target);
    return;
  }

  const weights = params.get("weights");
  if (!weights) {
    root.insertAdjacentHTML(
      "afterbegin",
      `<p class="hint">No session running. Start one via the API or reload
       with ?weights=/path/to/weights.cnwt to launch a 512-channel
       simulated session.</p>`,
    );
    return;
  }
  const info = await api.createSession({
    source: { kind: "live-sim", n_channels: 512, seed: 1,
              total_samples: 1_200_000, captures_min: 0, captures_max: 3 },
    weights_path: weights,
    speed: 1.0,
  });
  await dashboard.attach(info);
}

boot().catch((err) => {
  document.body.insertAdjacentHTML(
    "afterbegin",
    `<p class="boot-error">failed to start: ${String(err)}</p>`,
  );
});
