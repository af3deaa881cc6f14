/**
 * Stroke capture: accumulates pointer samples into a CaptureStream.
 *
 * The recorder is DOM-free (it consumes plain event-shaped objects), so the
 * capture logic is unit-testable in node; the canvas wiring lives in
 * main.ts. Timestamps are milliseconds since the first pen-down of the
 * capture, clamped non-decreasing. Devices that cannot measure pressure
 * report a constant value (pointer events use 0.5 while a button is held);
 * such captures are flagged so the UI can show a badge, and a constant 0 is
 * lifted to the mid value.
 */

export interface CaptureSample {
  x: number;
  y: number;
  pressure: number;
  t: number;
  penDown: boolean;
}

export interface CaptureStream {
  samples: CaptureSample[];
  devicePixelRatio: number;
  pressureSynthetic: boolean;
}

export interface PointerSample {
  kind: "down" | "move" | "up";
  x: number;
  y: number;
  pressure: number;
  timeStamp: number;
}

export class StrokeRecorder {
  private samples: CaptureSample[] = [];
  private startTime: number | null = null;
  private lastT = 0;
  private penDown = false;

  get isEmpty(): boolean {
    return this.samples.length === 0;
  }

  get sampleCount(): number {
    return this.samples.length;
  }

  clear(): void {
    this.samples = [];
    this.startTime = null;
    this.lastT = 0;
    this.penDown = false;
  }

  /** Feed one pointer event; returns the recorded sample, if any. */
  handle(event: PointerSample): CaptureSample | null {
    if (event.kind === "down") {
      this.penDown = true;
    }
    if (this.startTime === null) {
      if (event.kind !== "down") {
        return null; // ignore hover before the first touch
      }
      this.startTime = event.timeStamp;
    }
    if (event.kind === "up") {
      this.penDown = false;
      return null;
    }
    let t = event.timeStamp - this.startTime;
    if (t < this.lastT) {
      t = this.lastT;
    }
    this.lastT = t;
    const sample: CaptureSample = {
      x: event.x,
      y: event.y,
      pressure: event.pressure,
      t,
      penDown: this.penDown,
    };
    this.samples.push(sample);
    return sample;
  }

  finish(devicePixelRatio: number): CaptureStream {
    const down = this.samples.filter((s) => s.penDown);
    const reference = down.length ? down : this.samples;
    const constant =
      reference.length > 0 &&
      reference.every((s) => s.pressure === reference[0].pressure);
    const samples = this.samples.map((s) => ({ ...s }));
    if (constant) {
      for (const s of samples) {
        s.pressure = 0.5;
      }
    }
    return {
      samples,
      devicePixelRatio,
      pressureSynthetic: constant,
    };
  }
}
