// Browser entry point: wires the session to a canvas and a control panel
// generated from the server's tweakable schema.

import { ControlMessage, FrameMeta, HelloMessage, Tweakable } from "./protocol.js";
import { CanvasRenderer } from "./renderer.js";
import { SocketLike, UiSession } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

function serverUrl(): string {
  const params = new URLSearchParams(location.search);
  const explicit = params.get("server");
  if (explicit) {
    return explicit;
  }
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  const host = location.hostname || "127.0.0.1";
  const port = params.get("port") ?? "8700";
  return `${scheme}://${host}:${port}/ws`;
}

export function start(): void {
  const canvas = el<HTMLCanvasElement>("view");
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("2d canvas context unavailable");
  }
  const renderer = new CanvasRenderer(ctx, canvas.width, canvas.height);
  const banner = el<HTMLDivElement>("banner");
  const panel = el<HTMLDivElement>("panel");
  const status = el<HTMLSpanElement>("status");
  const metricsBox = el<HTMLSpanElement>("metrics");

  const sliders = new Map<string, HTMLInputElement>();
  const readouts = new Map<string, HTMLSpanElement>();

  const session = new UiSession(
    serverUrl(),
    (url) => new WebSocket(url) as unknown as SocketLike,
    {
      onHello: (hello) => buildPanel(hello),
      onMeta: (meta) => reflectSnapshot(meta),
      onStatus: (s) => {
        status.textContent = s;
        banner.hidden = s !== "readonly";
        banner.textContent = "protocol mismatch: read-only view";
      },
    },
  );

  function buildPanel(hello: HelloMessage): void {
    panel.replaceChildren();
    sliders.clear();
    readouts.clear();
    for (const t of hello.tweakables) {
      panel.appendChild(makeSlider(t));
    }
    panel.appendChild(makeButtons());
    document.title = `mesop - ${hello.scenario}`;
  }

  function makeSlider(t: Tweakable): HTMLElement {
    const row = document.createElement("label");
    row.className = "row";
    const name = document.createElement("span");
    name.textContent = t.path;
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(t.min);
    input.max = String(t.max);
    input.step = "any";
    input.value = String(t.value);
    const readout = document.createElement("span");
    readout.textContent = t.value.toPrecision(4);
    input.addEventListener("input", () => {
      const sent = session.setParam(t.path, Number(input.value));
      input.disabled = session.isPending(t.path);
      if (!sent) {
        readout.textContent = `${(session.params[t.path] ?? t.value).toPrecision(4)}*`;
      }
    });
    sliders.set(t.path, input);
    readouts.set(t.path, readout);
    row.append(name, input, readout);
    return row;
  }

  function makeButtons(): HTMLElement {
    const row = document.createElement("div");
    row.className = "row";
    const actions: Array<[string, ControlMessage]> = [
      ["pause", { type: "pause" }],
      ["resume", { type: "resume" }],
      ["step 42", { type: "step", n: 42 }],
      ["reset", { type: "reset" }],
    ];
    for (const [label, msg] of actions) {
      const button = document.createElement("button");
      button.textContent = label;
      button.addEventListener("click", () => session.sendControl(msg));
      row.appendChild(button);
    }
    const exportBtn = document.createElement("button");
    exportBtn.textContent = "export log";
    exportBtn.addEventListener("click", () => {
      const blob = new Blob([session.exportLog()], { type: "application/x-ndjson" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "steering-log.ndjson";
      a.click();
    });
    row.appendChild(exportBtn);
    return row;
  }

  // server-authoritative display: sliders snap to the snapshot, never to
  // the local drag position
  function reflectSnapshot(meta: FrameMeta): void {
    for (const [path, value] of Object.entries(meta.params)) {
      const slider = sliders.get(path);
      const readout = readouts.get(path);
      if (slider && document.activeElement !== slider) {
        slider.value = String(value);
      }
      if (slider) {
        slider.disabled = session.isPending(path);
      }
      if (readout) {
        readout.textContent = value.toPrecision(4);
      }
    }
    if (meta.metrics) {
      metricsBox.textContent =
        `${meta.metrics.label}  repose ${meta.metrics.repose_angle_deg.toFixed(1)}deg`;
    }
  }

  function paint(): void {
    const frame = session.takeLatestFrame();
    if (frame) {
      renderer.render(frame);
    }
    requestAnimationFrame(paint);
  }

  session.connect();
  requestAnimationFrame(paint);
}

start();
