// Wire protocol (version 1) shared with the simulation server.
//
// Per broadcast the server sends one JSON frame_meta message followed by one
// binary frame:
//   magic "MPS1" | u32 step | f32 time | u8 dim | u32 count
//   count*dim f32 positions | count u16 material ids      (little-endian)

export const PROTOCOL_VERSION = 1;
export const FRAME_MAGIC = 0x4d505331; // "MPS1" big-endian read of the 4 bytes
const HEADER_BYTES = 17;

export interface Tweakable {
  path: string;
  min: number;
  max: number;
  value: number;
}

export interface HelloMessage {
  type: "hello";
  protocol_version: number;
  engine_version?: string;
  scenario: string;
  dim: number;
  tweakables: Tweakable[];
  steps_per_frame: number;
  paused: boolean;
}

export interface MetricsSummary {
  label: string;
  repose_angle_deg: number;
  largest_cluster_fraction: number;
  stress_cv: number;
  kinetic_energy_per_particle: number;
}

export interface FrameMeta {
  type: "frame_meta";
  step: number;
  time: number;
  params: Record<string, number>;
  paused: boolean;
  steps_per_frame: number;
  metrics?: MetricsSummary;
}

export interface ControlReply {
  type: "ack" | "error";
  applied?: string;
  step?: number;
  reason?: string;
}

export type ServerMessage = HelloMessage | FrameMeta | ControlReply;

export type ControlMessage =
  | { type: "set_param"; path: string; value: number }
  | { type: "load_preset"; name: string }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "step"; n: number }
  | { type: "reset" }
  | { type: "set_speed"; frames_per_second: number };

export interface DecodedFrame {
  step: number;
  time: number;
  dim: number;
  count: number;
  /** packed xy[z] positions, count*dim floats */
  positions: Float32Array;
  materialIds: Uint16Array;
}

export function decodeFrame(buffer: ArrayBuffer): DecodedFrame | null {
  if (buffer.byteLength < HEADER_BYTES) {
    return null;
  }
  const view = new DataView(buffer);
  if (view.getUint32(0, false) !== FRAME_MAGIC) {
    return null;
  }
  const step = view.getUint32(4, true);
  const time = view.getFloat32(8, true);
  const dim = view.getUint8(12);
  const count = view.getUint32(13, true);
  if (dim !== 2 && dim !== 3) {
    return null;
  }
  const posBytes = 4 * count * dim;
  if (buffer.byteLength !== HEADER_BYTES + posBytes + 2 * count) {
    return null;
  }
  // copy out: the underlying buffer may be reused by the socket
  const positions = new Float32Array(count * dim);
  const materialIds = new Uint16Array(count);
  let off = HEADER_BYTES;
  for (let i = 0; i < count * dim; i++, off += 4) {
    positions[i] = view.getFloat32(off, true);
  }
  for (let i = 0; i < count; i++, off += 2) {
    materialIds[i] = view.getUint16(off, true);
  }
  return { step, time, dim, count, positions, materialIds };
}

export function encodeFrame(frame: DecodedFrame): ArrayBuffer {
  const bytes = HEADER_BYTES + 4 * frame.count * frame.dim + 2 * frame.count;
  const buffer = new ArrayBuffer(bytes);
  const view = new DataView(buffer);
  view.setUint32(0, FRAME_MAGIC, false);
  view.setUint32(4, frame.step, true);
  view.setFloat32(8, frame.time, true);
  view.setUint8(12, frame.dim);
  view.setUint32(13, frame.count, true);
  let off = HEADER_BYTES;
  for (let i = 0; i < frame.count * frame.dim; i++, off += 4) {
    view.setFloat32(off, frame.positions[i], true);
  }
  for (let i = 0; i < frame.count; i++, off += 2) {
    view.setUint16(off, frame.materialIds[i], true);
  }
  return buffer;
}

export function parseServerMessage(text: string): ServerMessage | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof parsed !== "object" || parsed === null) {
    return null;
  }
  const type = (parsed as { type?: unknown }).type;
  if (type === "hello" || type === "frame_meta" || type === "ack" || type === "error") {
    return parsed as ServerMessage;
  }
  return null;
}

/** Clamp a slider value into the server-declared range (NaN keeps the
 * current value; infinities clamp to the nearer bound). */
export function clampToRange(value: number, tweakable: Tweakable): number {
  if (Number.isNaN(value)) {
    return tweakable.value;
  }
  return Math.min(tweakable.max, Math.max(tweakable.min, value));
}
