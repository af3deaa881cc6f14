/**
 * Deterministic scripted signers: seeded stroke streams for automated
 * enrollment/verification runs without a human at the canvas.
 *
 * A signer is a smooth two-harmonic curve with a slowly varying pressure
 * profile; repetitions jitter the phases and amplitudes slightly, like a
 * person signing again. The generator is a small seeded LCG, so streams
 * are reproducible across runs and platforms.
 */

import { CaptureSample, CaptureStream } from "./capture.js";

class Lcg {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
    if (this.state === 0) {
      this.state = 0x9e3779b9;
    }
  }

  next(): number {
    // Numerical Recipes constants; 32-bit wrap via Math.imul.
    this.state = (Math.imul(1664525, this.state) + 1013904223) >>> 0;
    return this.state / 0x100000000;
  }

  centered(scale: number): number {
    return (this.next() + this.next() - 1.0) * scale;
  }
}

export interface ScriptedOptions {
  samples?: number;
  periodMs?: number;
  jitter?: number;
}

export function scriptedCapture(
  signerSeed: number,
  repetition: number,
  options: ScriptedOptions = {},
): CaptureStream {
  const n = options.samples ?? 280;
  const period = options.periodMs ?? 8;
  const jitter = options.jitter ?? 1.0;

  const signer = new Lcg(signerSeed * 2654435761 + 1);
  const f1 = 1.0 + signer.next() * 1.5;
  const f2 = 2.5 + signer.next() * 1.5;
  const ax = 120 + signer.next() * 90;
  const ay = 60 + signer.next() * 60;
  const bx = 35 + signer.next() * 40;
  const by = 25 + signer.next() * 30;
  const p1 = signer.next() * Math.PI * 2;
  const p2 = signer.next() * Math.PI * 2;
  const p3 = signer.next() * Math.PI * 2;
  const pressurePhase = signer.next() * Math.PI * 2;

  const rep = new Lcg(signerSeed * 40503 + repetition * 9176 + 11);
  const q1 = p1 + rep.centered(0.05 * jitter);
  const q2 = p2 + rep.centered(0.05 * jitter);
  const q3 = p3 + rep.centered(0.05 * jitter);
  const gx = ax * (1 + rep.centered(0.03 * jitter));
  const gy = ay * (1 + rep.centered(0.03 * jitter));

  const samples: CaptureSample[] = [];
  for (let i = 0; i < n; i++) {
    const u = i / (n - 1);
    const x =
      300 +
      gx * Math.sin(2 * Math.PI * (f1 * u) + q1) +
      bx * Math.sin(2 * Math.PI * (f2 * u) + q2);
    const y =
      220 +
      gy * Math.cos(2 * Math.PI * (f1 * u) + q1) +
      by * Math.sin(2 * Math.PI * (f2 * u) + q3);
    const pressure =
      0.5 + 0.28 * Math.sin(2 * Math.PI * 2 * u + pressurePhase) + rep.centered(0.01 * jitter);
    samples.push({
      x,
      y,
      pressure: Math.min(1, Math.max(0.02, pressure)),
      t: Math.max(0, i * period + rep.centered(0.4 * jitter)),
      penDown: true,
    });
  }
  return { samples, devicePixelRatio: 1, pressureSynthetic: false };
}
