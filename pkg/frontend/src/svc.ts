/**
 * Export of captured strokes to the signature file format.
 *
 * One header line with the sample count, then one line per sample:
 *
 *     x y t button azimuth altitude pressure
 *
 * x/y become integer canvas units (CSS pixels times the device pixel
 * ratio), pressure scales from [0, 1] to [0, 255], timestamps round to
 * integer milliseconds, azimuth/altitude are always 0. Rounding is
 * floor(v + 0.5) everywhere so the output matches the server's writer byte
 * for byte on identical data.
 */

import type { CaptureStream } from "./capture.js";

export class TooShortError extends Error {
  constructor(count: number) {
    super(`a signature needs at least 2 samples, got ${count}`);
    this.name = "TooShortError";
  }
}

export function iround(v: number): number {
  return Math.floor(v + 0.5);
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

export function exportSvc(stream: CaptureStream): string {
  const samples = stream.samples;
  if (samples.length < 2) {
    throw new TooShortError(samples.length);
  }
  const dpr = stream.devicePixelRatio > 0 ? stream.devicePixelRatio : 1;
  const lines: string[] = [String(samples.length)];
  let prevT = -1;
  for (const s of samples) {
    // Browser move events can share a millisecond; the format needs
    // strictly increasing timestamps, so collisions bump forward by 1 ms.
    let t = iround(s.t);
    if (t <= prevT) {
      t = prevT + 1;
    }
    prevT = t;
    const x = iround(s.x * dpr);
    const y = iround(s.y * dpr);
    const pressure = clamp(iround(s.pressure * 255), 0, 255);
    const button = s.penDown ? 1 : 0;
    lines.push(`${x} ${y} ${t} ${button} 0 0 ${pressure}`);
  }
  return lines.join("\n") + "\n";
}
