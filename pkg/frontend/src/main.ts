/**
 * Canvas wiring and UI state for the signing pad.
 *
 * Nothing biometric is kept in the page beyond the in-progress capture:
 * refreshing loses only the unsent stroke, and every progress display is
 * re-fetched from the service.
 */

import { ApiClient, ApiError } from "./api.js";
import { PointerSample, StrokeRecorder } from "./capture.js";
import { EnrollFlow, VerifyFlow } from "./flows.js";
import { DEFAULT_INK, drawSegment } from "./render.js";
import { exportSvc, TooShortError } from "./svc.js";

type Mode = "enroll" | "verify";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

function setup(): void {
  const canvas = byId<HTMLCanvasElement>("pad");
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("2d canvas context unavailable");
  }
  const statusLine = byId<HTMLElement>("status");
  const decisionLine = byId<HTMLElement>("decision");
  const pressureBadge = byId<HTMLElement>("pressure-badge");
  const userInput = byId<HTMLInputElement>("user-id");
  const modeSelect = byId<HTMLSelectElement>("mode");
  const session2Button = byId<HTMLButtonElement>("session2");
  const submitButton = byId<HTMLButtonElement>("submit");
  const clearButton = byId<HTMLButtonElement>("clear");
  const downloadButton = byId<HTMLButtonElement>("download");
  const resetButton = byId<HTMLButtonElement>("reset");

  const api = new ApiClient("");
  const recorder = new StrokeRecorder();
  let lastSample: ReturnType<StrokeRecorder["handle"]> = null;
  let pointerActive = false;

  const dpr = window.devicePixelRatio || 1;
  const cssWidth = canvas.clientWidth || 640;
  const cssHeight = canvas.clientHeight || 360;
  canvas.width = Math.round(cssWidth * dpr);
  canvas.height = Math.round(cssHeight * dpr);
  ctx.scale(dpr, dpr);

  function clearPad(): void {
    recorder.clear();
    lastSample = null;
    ctx!.clearRect(0, 0, cssWidth, cssHeight);
    pressureBadge.hidden = true;
    decisionLine.textContent = "";
    decisionLine.className = "";
  }

  function toPointerSample(event: PointerEvent, kind: PointerSample["kind"]): PointerSample {
    const rect = canvas.getBoundingClientRect();
    return {
      kind,
      x: event.clientX - rect.left,
      y: event.clientY - rect.top,
      pressure: event.pressure,
      timeStamp: event.timeStamp,
    };
  }

  function record(event: PointerEvent, kind: PointerSample["kind"]): void {
    const sample = recorder.handle(toPointerSample(event, kind));
    if (sample && lastSample) {
      drawSegment(ctx!, lastSample, sample, DEFAULT_INK);
    }
    if (sample) {
      lastSample = sample;
    }
  }

  canvas.addEventListener("pointerdown", (e) => {
    pointerActive = true;
    canvas.setPointerCapture(e.pointerId);
    record(e, "down");
  });
  canvas.addEventListener("pointermove", (e) => {
    if (pointerActive || recorder.sampleCount > 0) {
      record(e, "move");
    }
  });
  canvas.addEventListener("pointerup", (e) => {
    pointerActive = false;
    record(e, "up");
  });

  function currentUser(): string {
    return userInput.value.trim() || "demo";
  }

  let enroll = new EnrollFlow(api, currentUser());

  async function showProgress(): Promise<void> {
    if (enroll.userId !== currentUser()) {
      enroll = new EnrollFlow(api, currentUser());
      enroll.currentSession = 1;
    }
    await enroll.refresh();
    const p = enroll.progress();
    if (p.trained) {
      statusLine.textContent = `user ${enroll.userId}: enrolled`;
    } else {
      statusLine.textContent =
        `user ${enroll.userId}: session 1 ${p.session1}/3, session 2 ${p.session2}/2` +
        ` (capturing session ${enroll.currentSession})`;
    }
  }

  async function submit(): Promise<void> {
    const user = currentUser();
    const stream = recorder.finish(dpr);
    if (stream.pressureSynthetic) {
      pressureBadge.hidden = false;
    }
    try {
      if ((modeSelect.value as Mode) === "enroll") {
        if (enroll.userId !== user) {
          enroll = new EnrollFlow(api, user);
        }
        await enroll.submit(stream);
        await showProgress();
        const p = enroll.progress();
        decisionLine.textContent = p.trained ? "enrollment complete" : "sample stored";
        decisionLine.className = p.trained ? "accept" : "";
      } else {
        const verify = new VerifyFlow(api, user);
        const result = await verify.submit(stream);
        decisionLine.textContent =
          `${result.decision.toUpperCase()}  score ${result.score.toFixed(3)}` +
          ` vs threshold ${result.threshold.toFixed(3)}`;
        decisionLine.className = result.decision;
      }
      recorder.clear();
      lastSample = null;
      ctx!.clearRect(0, 0, cssWidth, cssHeight);
    } catch (err) {
      if (err instanceof TooShortError) {
        decisionLine.textContent = "sign first: the capture is empty";
      } else if (err instanceof ApiError) {
        decisionLine.textContent = `${err.code}: ${err.message}`;
      } else {
        decisionLine.textContent = String(err);
      }
      decisionLine.className = "reject";
    }
  }

  function download(): void {
    try {
      const text = exportSvc(recorder.finish(dpr));
      const blob = new Blob([text], { type: "text/plain" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${currentUser()}-capture.svc`;
      link.click();
      URL.revokeObjectURL(link.href);
    } catch (err) {
      decisionLine.textContent = String(err);
    }
  }

  submitButton.addEventListener("click", () => void submit());
  clearButton.addEventListener("click", clearPad);
  downloadButton.addEventListener("click", download);
  session2Button.addEventListener("click", () => {
    enroll.advanceToSession2();
    void showProgress();
  });
  resetButton.addEventListener("click", () => {
    void api.reset(currentUser()).then(() => {
      enroll = new EnrollFlow(api, currentUser());
      void showProgress();
    });
  });
  userInput.addEventListener("change", () => void showProgress());
  modeSelect.addEventListener("change", () => {
    decisionLine.textContent = "";
    decisionLine.className = "";
  });

  void showProgress();
}

if (typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", setup);
}
