// Canvas particle renderer: pure presentation (the simulation lives on the
// server).  Draws the latest frame only; color by material id or by speed
// estimated from consecutive frames.

import { DecodedFrame } from "./protocol.js";

export type ColorMode = "material" | "speed";

export interface RenderSettings {
  zoom: number;          // world units visible across the canvas width
  centerX: number;
  centerY: number;
  particleRadius: number; // world units
  colorMode: ColorMode;
  background: string;
}

export const DEFAULT_SETTINGS: RenderSettings = {
  zoom: 70,
  centerX: 0,
  centerY: 4,
  particleRadius: 0.5,
  colorMode: "material",
  background: "#101014",
};

const MATERIAL_PALETTE = [
  "#e8c268", "#6fa8dc", "#c878c8", "#8fce8f", "#e06666",
  "#76c7c0", "#d9a648", "#b4a7d6",
];

// quantized speed ramp (cold blue -> hot white); buckets avoid per-particle
// style-string churn in the hot loop
const SPEED_RAMP: string[] = [];
for (let i = 0; i < 32; i++) {
  const t = i / 31;
  const r = Math.round(40 + 215 * t);
  const g = Math.round(70 + 150 * t);
  const b = Math.round(160 + 95 * t);
  SPEED_RAMP.push(`rgb(${r},${g},${b})`);
}

// the 2D-context subset used, so tests can pass a counting stub and the
// browser can pass a real CanvasRenderingContext2D
export interface Context2DLike {
  fillStyle: string | unknown;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
}

export class CanvasRenderer {
  private lastStep = -1;
  private prevPositions: Float32Array | null = null;
  private prevStep = -1;
  framesRendered = 0;

  constructor(
    private readonly ctx: Context2DLike,
    private width: number,
    private height: number,
    public settings: RenderSettings = { ...DEFAULT_SETTINGS },
  ) {}

  resize(width: number, height: number): void {
    this.width = width;
    this.height = height;
  }

  clear(): void {
    this.ctx.fillStyle = this.settings.background;
    this.ctx.fillRect(0, 0, this.width, this.height);
  }

  /** Draw one frame; out-of-order (stale) frames are ignored. */
  render(frame: DecodedFrame, dtPerStep = 1 / 1050): boolean {
    if (frame.step < this.lastStep) {
      return false;
    }
    const { zoom, centerX, centerY, particleRadius, colorMode } = this.settings;
    const scale = this.width / zoom;
    const radius = Math.max(1, particleRadius * scale);
    this.clear();

    const speeds = colorMode === "speed"
      ? this.estimateSpeeds(frame, dtPerStep)
      : null;
    const dim = frame.dim;
    const ctx = this.ctx;
    let currentStyle = "";
    for (let i = 0; i < frame.count; i++) {
      const wx = frame.positions[i * dim];
      const wy = frame.positions[i * dim + 1];
      const px = (wx - centerX) * scale + this.width / 2;
      const py = this.height / 2 - (wy - centerY) * scale;
      if (px < -radius || px > this.width + radius
          || py < -radius || py > this.height + radius) {
        continue;
      }
      let style: string;
      if (speeds) {
        const bucket = Math.min(31, Math.floor(speeds[i] * 4));
        style = SPEED_RAMP[bucket];
      } else {
        style = MATERIAL_PALETTE[frame.materialIds[i] % MATERIAL_PALETTE.length];
      }
      if (style !== currentStyle) {
        ctx.fillStyle = style;
        currentStyle = style;
      }
      ctx.beginPath();
      ctx.arc(px, py, radius, 0, 2 * Math.PI);
      ctx.fill();
    }
    this.lastStep = frame.step;
    this.prevPositions = frame.positions;
    this.prevStep = frame.step;
    this.framesRendered += 1;
    return true;
  }

  /** |v| per particle from consecutive frames (0 when not derivable). */
  private estimateSpeeds(frame: DecodedFrame, dtPerStep: number): Float32Array {
    const speeds = new Float32Array(frame.count);
    const prev = this.prevPositions;
    const steps = frame.step - this.prevStep;
    if (!prev || steps <= 0) {
      return speeds;
    }
    const dt = steps * dtPerStep;
    const dim = frame.dim;
    const n = Math.min(frame.count, prev.length / dim);
    for (let i = 0; i < n; i++) {
      let sq = 0;
      for (let c = 0; c < dim; c++) {
        const d = frame.positions[i * dim + c] - prev[i * dim + c];
        sq += d * d;
      }
      speeds[i] = Math.sqrt(sq) / dt;
    }
    return speeds;
  }
}
