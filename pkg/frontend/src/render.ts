/**
 * Ink rendering: pen-down segments drawn with line thickness modulated by
 * pressure. Takes the minimal 2D-context surface it needs, so tests can
 * pass a recording stub.
 */

import { CaptureSample } from "./capture.js";

export interface InkContext {
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineCap: CanvasLineCap;
}

export interface InkOptions {
  baseWidth: number;
  pressureGain: number;
  color: string;
}

export const DEFAULT_INK: InkOptions = {
  baseWidth: 1.0,
  pressureGain: 3.0,
  color: "#1d2f6f",
};

export function strokeWidth(pressure: number, options: InkOptions = DEFAULT_INK): number {
  return options.baseWidth + options.pressureGain * Math.max(0, Math.min(1, pressure));
}

/** Draw the segment from the previous sample to the current one. */
export function drawSegment(
  ctx: InkContext,
  from: CaptureSample,
  to: CaptureSample,
  options: InkOptions = DEFAULT_INK,
): boolean {
  if (!from.penDown || !to.penDown) {
    return false;
  }
  ctx.lineWidth = strokeWidth((from.pressure + to.pressure) / 2, options);
  ctx.strokeStyle = options.color;
  ctx.lineCap = "round";
  ctx.beginPath();
  ctx.moveTo(from.x, from.y);
  ctx.lineTo(to.x, to.y);
  ctx.stroke();
  return true;
}

/** Redraw a whole capture (used after clearing or when replaying). */
export function drawAll(
  ctx: InkContext,
  samples: CaptureSample[],
  options: InkOptions = DEFAULT_INK,
): number {
  let drawn = 0;
  for (let i = 1; i < samples.length; i++) {
    if (drawSegment(ctx, samples[i - 1], samples[i], options)) {
      drawn++;
    }
  }
  return drawn;
}
