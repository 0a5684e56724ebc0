/** Microphone capture with swappable browser plumbing for tests. */

export interface MediaRecorderLike {
  readonly mimeType: string;
  start(): void;
  stop(): void;
  ondataavailable: ((event: { data: Blob }) => void) | null;
  onstop: (() => void) | null;
}

export interface RecorderDeps {
  getStream(): Promise<unknown>;
  createRecorder(stream: unknown): MediaRecorderLike;
  stopStream?(stream: unknown): void;
}

export type RecorderState = "idle" | "recording" | "ready" | "denied";

export function browserRecorderDeps(): RecorderDeps {
  return {
    getStream: () => navigator.mediaDevices.getUserMedia({ audio: true }),
    createRecorder: (stream) => new MediaRecorder(stream as MediaStream) as unknown as MediaRecorderLike,
    stopStream: (stream) => {
      (stream as MediaStream).getTracks().forEach((track) => track.stop());
    },
  };
}

export class Recorder {
  state: RecorderState = "idle";
  blob: Blob | null = null;
  mediaType = "";
  errorMessage = "";
  private startedAtMs = 0;
  durationMs = 0;
  private recorder: MediaRecorderLike | null = null;
  private stream: unknown = null;
  private chunks: Blob[] = [];

  constructor(private readonly deps: RecorderDeps) {}

  /** Begin capturing; a re-record discards the previous blob. */
  async start(): Promise<void> {
    this.blob = null;
    this.mediaType = "";
    this.durationMs = 0;
    this.errorMessage = "";
    try {
      this.stream = await this.deps.getStream();
    } catch (err) {
      this.state = "denied";
      this.errorMessage =
        err instanceof Error ? err.message : "microphone permission was denied";
      return;
    }
    this.chunks = [];
    this.recorder = this.deps.createRecorder(this.stream);
    this.recorder.ondataavailable = (event) => {
      this.chunks.push(event.data);
    };
    this.recorder.onstop = () => {
      this.mediaType = this.recorder?.mimeType || "audio/webm";
      this.blob = new Blob(this.chunks, { type: this.mediaType });
      this.durationMs = Date.now() - this.startedAtMs;
      this.state = "ready";
      if (this.stream !== null) this.deps.stopStream?.(this.stream);
      this.stream = null;
    };
    this.startedAtMs = Date.now();
    this.state = "recording";
    this.recorder.start();
  }

  stop(): void {
    if (this.state === "recording") this.recorder?.stop();
  }

  get hasRecording(): boolean {
    return this.state === "ready" && this.blob !== null && this.blob.size > 0;
  }
}
