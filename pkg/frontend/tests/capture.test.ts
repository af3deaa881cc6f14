import assert from "node:assert/strict";
import test from "node:test";

import { PointerSample, StrokeRecorder } from "../src/capture.js";

function down(x: number, y: number, timeStamp: number, pressure = 0.7): PointerSample {
  return { kind: "down", x, y, pressure, timeStamp };
}

function move(x: number, y: number, timeStamp: number, pressure = 0.7): PointerSample {
  return { kind: "move", x, y, pressure, timeStamp };
}

function up(x: number, y: number, timeStamp: number): PointerSample {
  return { kind: "up", x, y, pressure: 0, timeStamp };
}

test("records move events relative to first pen-down", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(down(10, 10, 1000));
  recorder.handle(move(12, 11, 1008));
  recorder.handle(move(14, 12, 1016));
  const stream = recorder.finish(1);
  assert.equal(stream.samples.length, 3);
  assert.deepEqual(
    stream.samples.map((s) => s.t),
    [0, 8, 16],
  );
  assert.ok(stream.samples.every((s) => s.penDown));
});

test("hover before the first touch is ignored", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(move(5, 5, 900));
  recorder.handle(down(10, 10, 1000));
  recorder.handle(move(11, 11, 1010));
  assert.equal(recorder.sampleCount, 2);
});

test("moves after pen-up are recorded as pen-up samples", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(down(0, 0, 0));
  recorder.handle(move(1, 0, 8));
  recorder.handle(up(1, 0, 12));
  recorder.handle(move(2, 0, 16));
  recorder.handle(down(3, 0, 24));
  recorder.handle(move(4, 0, 32));
  const stream = recorder.finish(1);
  assert.deepEqual(
    stream.samples.map((s) => s.penDown),
    [true, true, false, true, true],
  );
});

test("timestamps never decrease even if events do", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(down(0, 0, 100));
  recorder.handle(move(1, 1, 108));
  recorder.handle(move(2, 2, 105)); // out-of-order event
  const stream = recorder.finish(1);
  assert.deepEqual(
    stream.samples.map((s) => s.t),
    [0, 8, 8],
  );
});

test("constant pressure is flagged and lifted to the mid value", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(down(0, 0, 0, 0));
  recorder.handle(move(1, 1, 8, 0));
  recorder.handle(move(2, 2, 16, 0));
  const stream = recorder.finish(1);
  assert.equal(stream.pressureSynthetic, true);
  assert.ok(stream.samples.every((s) => s.pressure === 0.5));
});

test("varying pressure is not flagged", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(down(0, 0, 0, 0.3));
  recorder.handle(move(1, 1, 8, 0.6));
  recorder.handle(move(2, 2, 16, 0.8));
  const stream = recorder.finish(1);
  assert.equal(stream.pressureSynthetic, false);
  assert.equal(stream.samples[1].pressure, 0.6);
});

test("clear empties the capture", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(down(0, 0, 0));
  recorder.handle(move(1, 1, 8));
  assert.equal(recorder.isEmpty, false);
  recorder.clear();
  assert.equal(recorder.isEmpty, true);
  assert.equal(recorder.finish(1).samples.length, 0);
});

test("device pixel ratio is carried on the stream", () => {
  const recorder = new StrokeRecorder();
  recorder.handle(down(0, 0, 0));
  assert.equal(recorder.finish(2.5).devicePixelRatio, 2.5);
});
