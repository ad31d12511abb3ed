// UiSession: the connection/controller half of the steering client.
//
// The session is a pure view/controller: no client-side physics, and every
// displayed parameter value comes from the last frame_meta snapshot (the
// server is authoritative).  The control panel model is built dynamically
// from the hello's tweakable schema, so new server parameters need no UI
// change here.

import {
  ControlMessage,
  ControlReply,
  DecodedFrame,
  FrameMeta,
  HelloMessage,
  PROTOCOL_VERSION,
  Tweakable,
  clampToRange,
  decodeFrame,
  parseServerMessage,
} from "./protocol.js";
import { RateLimiter } from "./throttle.js";

export type ConnectionStatus =
  | "connecting"
  | "connected"
  | "readonly" // protocol mismatch: render only, controls disabled
  | "reconnecting"
  | "closed";

// the subset of the WebSocket surface the session needs; injectable so the
// suite can drive a fake and node can pass the `ws` implementation
export interface SocketLike {
  binaryType: string;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionEvents {
  onHello?: (hello: HelloMessage) => void;
  onFrame?: (frame: DecodedFrame, meta: FrameMeta | null) => void;
  onMeta?: (meta: FrameMeta) => void;
  onStatus?: (status: ConnectionStatus) => void;
  onControlReply?: (reply: ControlReply) => void;
}

export interface SessionOptions {
  maxSetParamPerSecond?: number;
  reconnectBaseMs?: number;
  reconnectMaxMs?: number;
  now?: () => number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

interface LogEntry {
  t: number;
  msg: ControlMessage;
}

export class UiSession {
  status: ConnectionStatus = "closed";
  hello: HelloMessage | null = null;
  /** last authoritative snapshot (never optimistic slider state) */
  params: Record<string, number> = {};
  lastMeta: FrameMeta | null = null;
  framesMalformed = 0;
  framesDropped = 0;

  private socket: SocketLike | null = null;
  private latestFrame: DecodedFrame | null = null;
  private latestConsumed = true;
  private pendingEchoes = new Map<string, number>();
  private limiter: RateLimiter;
  private attempts = 0;
  private closedByUser = false;
  private log: LogEntry[] = [];
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;

  constructor(
    private readonly url: string,
    private readonly makeSocket: SocketFactory,
    private readonly events: SessionEvents = {},
    options: SessionOptions = {},
  ) {
    this.now = options.now ?? (() => Date.now());
    this.schedule =
      options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.limiter = new RateLimiter(options.maxSetParamPerSecond ?? 10, this.now);
    this.reconnectBaseMs = options.reconnectBaseMs ?? 500;
    this.reconnectMaxMs = options.reconnectMaxMs ?? 10_000;
  }

  private readonly reconnectBaseMs: number;
  private readonly reconnectMaxMs: number;

  connect(): void {
    this.closedByUser = false;
    this.open();
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
    this.socket = null;
    this.setStatus("closed");
  }

  /** Slider schema for the dynamically built control panel. */
  tweakables(): Tweakable[] {
    if (!this.hello) {
      return [];
    }
    // reflect the authoritative snapshot in the schema's current values
    return this.hello.tweakables.map((t) => ({
      ...t,
      value: this.params[t.path] ?? t.value,
    }));
  }

  controlsEnabled(): boolean {
    return this.status === "connected";
  }

  /** A path with an un-echoed set_param is disabled (no optimistic UI). */
  isPending(path: string): boolean {
    return this.pendingEchoes.has(path);
  }

  /**
   * Clamp to the server-declared range and send; returns false when the
   * control is disabled, pending, throttled or unknown.
   */
  setParam(path: string, value: number): boolean {
    if (!this.controlsEnabled()) {
      return false;
    }
    const schema = this.hello?.tweakables.find((t) => t.path === path);
    if (!schema) {
      return false;
    }
    if (this.pendingEchoes.has(path)) {
      return false;
    }
    if (!this.limiter.tryAcquire()) {
      return false;
    }
    const clamped = clampToRange(value, schema);
    if (this.sendControl({ type: "set_param", path, value: clamped })) {
      this.pendingEchoes.set(path, clamped);
      return true;
    }
    return false;
  }

  sendControl(msg: ControlMessage): boolean {
    if (!this.controlsEnabled() || !this.socket) {
      return false;
    }
    this.socket.send(JSON.stringify(msg));
    this.log.push({ t: this.now(), msg });
    return true;
  }

  /** Latest frame exactly once; stale frames are dropped, never queued. */
  takeLatestFrame(): DecodedFrame | null {
    if (this.latestConsumed) {
      return null;
    }
    this.latestConsumed = true;
    return this.latestFrame;
  }

  /** Sent-control log as newline-delimited JSON. */
  exportLog(): string {
    return this.log.map((entry) => JSON.stringify(entry)).join("\n");
  }

  // -- internals -----------------------------------------------------------

  private open(): void {
    this.setStatus(this.attempts === 0 ? "connecting" : "reconnecting");
    const socket = this.makeSocket(this.url);
    socket.binaryType = "arraybuffer";
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
    };
    socket.onmessage = (ev) => this.handleMessage(ev.data);
    socket.onerror = () => {
      /* close follows */
    };
    socket.onclose = () => {
      this.socket = null;
      this.hello = null;
      this.pendingEchoes.clear();
      if (this.closedByUser) {
        this.setStatus("closed");
        return;
      }
      const delay = Math.min(
        this.reconnectMaxMs,
        this.reconnectBaseMs * 2 ** this.attempts,
      );
      this.attempts += 1;
      this.setStatus("reconnecting");
      this.schedule(() => {
        if (!this.closedByUser) {
          this.open();
        }
      }, delay);
    };
  }

  private handleMessage(data: unknown): void {
    if (typeof data === "string") {
      const msg = parseServerMessage(data);
      if (!msg) {
        this.framesMalformed += 1;
        return;
      }
      if (msg.type === "hello") {
        this.hello = msg;
        this.params = Object.fromEntries(
          msg.tweakables.map((t) => [t.path, t.value]),
        );
        const compatible = msg.protocol_version === PROTOCOL_VERSION;
        this.setStatus(compatible ? "connected" : "readonly");
        this.events.onHello?.(msg);
      } else if (msg.type === "frame_meta") {
        this.lastMeta = msg;
        this.params = msg.params;
        for (const [path, sent] of [...this.pendingEchoes]) {
          if (msg.params[path] === sent) {
            this.pendingEchoes.delete(path);
          }
        }
        this.events.onMeta?.(msg);
      } else {
        this.events.onControlReply?.(msg);
      }
      return;
    }
    const buffer = toArrayBuffer(data);
    if (!buffer) {
      this.framesMalformed += 1;
      return;
    }
    const frame = decodeFrame(buffer);
    if (!frame) {
      this.framesMalformed += 1;
      return;
    }
    if (!this.latestConsumed) {
      this.framesDropped += 1; // a newer frame replaces the unrendered one
    }
    this.latestFrame = frame;
    this.latestConsumed = false;
    this.events.onFrame?.(frame, this.lastMeta);
  }

  private setStatus(status: ConnectionStatus): void {
    if (this.status !== status) {
      this.status = status;
      this.events.onStatus?.(status);
    }
  }
}

function toArrayBuffer(data: unknown): ArrayBuffer | null {
  if (data instanceof ArrayBuffer) {
    return data;
  }
  if (ArrayBuffer.isView(data)) {
    const view = data as ArrayBufferView;
    return view.buffer.slice(
      view.byteOffset,
      view.byteOffset + view.byteLength,
    ) as ArrayBuffer;
  }
  return null;
}
