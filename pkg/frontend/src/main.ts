// Page wiring: connect to the engine, render every StateUpdate in order,
// bridge the spacebar to BlinkIn, show running metrics.

import { fetchConfig, readStream, sendInput, SessionInfo } from "./client.js";
import { KeyBridge } from "./keys.js";
import { toMetricsView } from "./metrics.js";
import type { MetricsReport, Rect, StateUpdate } from "./protocol.js";
import { drawScene, toRenderModel } from "./render.js";

const DEFAULT_BASE = `http://${location.hostname || "127.0.0.1"}:8377`;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

function setBanner(text: string, tone: "ok" | "warn") {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text;
  banner.className = tone;
}

async function start(): Promise<void> {
  const baseUrl =
    (el<HTMLInputElement>("endpoint").value || DEFAULT_BASE).replace(/\/$/, "");
  const canvas = el<HTMLCanvasElement>("scene");
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("no 2d context");
  }

  let info: SessionInfo;
  try {
    info = await fetchConfig(baseUrl);
  } catch (err) {
    setBanner(`cannot reach engine at ${baseUrl} — is "blinkscan serve" running?`, "warn");
    throw err;
  }
  setBanner(`connected · interval ${info.interval_ms} ms · ${info.targets.length} tasks`, "ok");

  const screen: Rect = info.screen;
  const scale = Math.min(canvas.width / screen[2], canvas.height / screen[3]);

  const bridge = new KeyBridge();
  const sessionStart = performance.now();
  document.addEventListener("keydown", (ev) => {
    const blink = bridge.onKeyDown(ev.key, ev.repeat, performance.now() - sessionStart);
    if (blink) {
      ev.preventDefault();
      void sendInput(baseUrl, [blink]);
      pulse();
    }
  });

  let lastUpdate: StateUpdate | null = null;
  let lastReport: MetricsReport | null = null;

  const phaseLabel = el<HTMLSpanElement>("phase");
  const taskLabel = el<HTMLSpanElement>("task");
  const actionsBar = el<HTMLDivElement>("actions");

  function repaint(): void {
    if (!lastUpdate) {
      return;
    }
    const model = toRenderModel(lastUpdate);
    drawScene(ctx!, model, screen, scale);
    phaseLabel.textContent = `${model.phase}${model.phase === "block" ? ` · depth ${model.depth}` : ""}`;
    taskLabel.textContent = `task ${model.taskId}`;
    actionsBar.innerHTML = "";
    if (model.phase === "action" || model.phase === "done") {
      model.actions.forEach((label, i) => {
        const chip = document.createElement("span");
        chip.textContent = label;
        chip.className =
          "chip" + (i === model.actionIndex || label === lastUpdate!.action ? " lit" : "");
        actionsBar.appendChild(chip);
      });
    }
  }

  function showMetrics(): void {
    const view = toMetricsView(lastReport);
    el<HTMLSpanElement>("counts").textContent = view.counts;
    el<HTMLSpanElement>("sa").textContent = view.sa;
    el<HTMLSpanElement>("far").textContent = view.far;
    el<HTMLSpanElement>("sr").textContent = view.sr;
    el<HTMLSpanElement>("avgtime").textContent = view.avgTime;
    if (view.final) {
      setBanner("session complete", "ok");
    }
  }

  function pulse(): void {
    canvas.classList.remove("pulse");
    void canvas.offsetWidth; // restart the css animation
    canvas.classList.add("pulse");
  }

  try {
    await readStream(baseUrl, (msg) => {
      if (msg.kind === "StateUpdate") {
        lastUpdate = msg;
        repaint();
      } else if (msg.kind === "MetricsReport") {
        lastReport = msg;
        showMetrics();
      } else if (msg.kind === "TargetSet") {
        taskLabel.textContent = `task ${msg.task_id}`;
      }
    });
  } catch {
    setBanner("stream lost — reconnect by pressing Start", "warn");
  }
}

el<HTMLButtonElement>("start").addEventListener("click", () => {
  void start();
});
setBanner("press Start to connect", "warn");
