import { describe, expect, it } from "vitest";

import { Recorder, type MediaRecorderLike, type RecorderDeps } from "../src/recorder.js";
import { canSubmit, emptySession, textRecording } from "../src/session.js";

class FakeMediaRecorder implements MediaRecorderLike {
  mimeType = "audio/webm";
  ondataavailable: ((event: { data: Blob }) => void) | null = null;
  onstop: (() => void) | null = null;
  started = 0;

  start(): void {
    this.started += 1;
  }

  stop(): void {
    this.ondataavailable?.({ data: new Blob(["chunk-one "], { type: this.mimeType }) });
    this.ondataavailable?.({ data: new Blob(["chunk-two"], { type: this.mimeType }) });
    this.onstop?.();
  }
}

function fakeDeps(overrides: Partial<RecorderDeps> = {}): RecorderDeps {
  return {
    getStream: async () => ({}),
    createRecorder: () => new FakeMediaRecorder(),
    ...overrides,
  };
}

describe("Recorder", () => {
  it("captures chunks into a typed blob on stop", async () => {
    const recorder = new Recorder(fakeDeps());
    await recorder.start();
    expect(recorder.state).toBe("recording");
    recorder.stop();
    expect(recorder.state).toBe("ready");
    expect(recorder.hasRecording).toBe(true);
    expect(recorder.blob!.size).toBeGreaterThan(0);
    expect(recorder.mediaType).toBe("audio/webm");
  });

  it("reports denial without throwing", async () => {
    const recorder = new Recorder(
      fakeDeps({ getStream: async () => Promise.reject(new Error("Permission denied")) }),
    );
    await recorder.start();
    expect(recorder.state).toBe("denied");
    expect(recorder.errorMessage).toContain("denied");
    expect(recorder.hasRecording).toBe(false);
  });

  it("re-recording discards the previous blob", async () => {
    const recorder = new Recorder(fakeDeps());
    await recorder.start();
    recorder.stop();
    const first = recorder.blob;
    expect(first).not.toBeNull();
    await recorder.start();
    expect(recorder.blob).toBeNull();
    expect(recorder.state).toBe("recording");
    recorder.stop();
    expect(recorder.blob).not.toBe(first);
  });

  it("releases the stream when capture ends", async () => {
    let released = 0;
    const recorder = new Recorder(fakeDeps({ stopStream: () => (released += 1) }));
    await recorder.start();
    recorder.stop();
    expect(released).toBe(1);
  });
});

describe("submit gating", () => {
  it("needs both a recording and a language", () => {
    const session = emptySession();
    expect(canSubmit(session)).toBe(false);
    session.recording = textRecording("what is sum");
    expect(canSubmit(session)).toBe(false);
    session.language = "hi";
    expect(canSubmit(session)).toBe(true);
  });

  it("rejects unknown language tags and empty recordings", () => {
    const session = emptySession();
    session.recording = textRecording("q");
    session.language = "zz";
    expect(canSubmit(session)).toBe(false);
    session.language = "en";
    session.recording = { blob: new Blob([]), mediaType: "text/plain", filename: "q.txt" };
    expect(canSubmit(session)).toBe(false);
  });

  it("blocks while a task is in flight", () => {
    const session = emptySession();
    session.recording = textRecording("q");
    session.language = "en";
    session.busy = true;
    expect(canSubmit(session)).toBe(false);
  });
});
