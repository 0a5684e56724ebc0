/** Typed client for the query service HTTP endpoints. */

export type TaskState =
  | "QUEUED"
  | "TRANSCRIBING"
  | "REFINING"
  | "GENERATING"
  | "SYNTHESIZING"
  | "SUCCEEDED"
  | "FAILED";

export interface EditSpan {
  span: [number, number];
  original: string;
  replacement: string;
  rule: string;
}

export interface TaskError {
  stage: string;
  message: string;
}

export interface TaskSnapshot {
  task_id: string;
  state: TaskState;
  raw_transcript: string | null;
  refined_transcript: string | null;
  edits: EditSpan[] | null;
  response_text: string | null;
  audio_available: boolean;
  error: TaskError | null;
  created_at: string;
  stage_timestamps: Record<string, [string, string | null]>;
}

export interface HistoryEntry {
  task_id: string;
  created_at: string;
  language: string;
  state: string;
  durations: Record<string, number>;
  raw_transcript: string | null;
  refined_transcript: string | null;
  response_text: string | null;
}

export interface SubmitRequest {
  language: string;
  code: string;
  problem: string;
  audio: Blob;
  filename?: string;
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export const TERMINAL_STATES: ReadonlySet<string> = new Set(["SUCCEEDED", "FAILED"]);

interface ApiOptions {
  fetchImpl?: typeof fetch;
  sleep?: (ms: number) => Promise<void>;
  now?: () => number;
  pollIntervalMs?: number;
  pollTimeoutMs?: number;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = "HTTP_ERROR";
  let message = `request failed with status ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(code, message, response.status);
}

export class ConsoleApi {
  private readonly fetchImpl: typeof fetch;
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly now: () => number;
  readonly pollIntervalMs: number;
  readonly pollTimeoutMs: number;

  constructor(
    public readonly origin: string,
    options: ApiOptions = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
    this.sleep = options.sleep ?? defaultSleep;
    this.now = options.now ?? (() => Date.now());
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.pollTimeoutMs = options.pollTimeoutMs ?? 120000;
  }

  async submit(request: SubmitRequest): Promise<string> {
    const form = new FormData();
    form.append("audio", request.audio, request.filename ?? "query.bin");
    form.append("language", request.language);
    form.append("code", request.code);
    form.append("problem", request.problem);
    const response = await this.fetchImpl(`${this.origin}/api/v1/queries`, {
      method: "POST",
      body: form,
    });
    await raiseForStatus(response);
    const body = await response.json();
    return body.task_id as string;
  }

  async snapshot(taskId: string): Promise<TaskSnapshot> {
    const response = await this.fetchImpl(
      `${this.origin}/api/v1/queries/${encodeURIComponent(taskId)}`,
    );
    await raiseForStatus(response);
    return (await response.json()) as TaskSnapshot;
  }

  async history(limit = 20): Promise<HistoryEntry[]> {
    const response = await this.fetchImpl(`${this.origin}/api/v1/queries?limit=${limit}`);
    await raiseForStatus(response);
    return (await response.json()) as HistoryEntry[];
  }

  audioUrl(taskId: string): string {
    return `${this.origin}/api/v1/queries/${encodeURIComponent(taskId)}/audio`;
  }

  async health(): Promise<Record<string, unknown>> {
    const response = await this.fetchImpl(`${this.origin}/healthz`);
    await raiseForStatus(response);
    return (await response.json()) as Record<string, unknown>;
  }

  /**
   * Submit a query and poll its snapshot once a second until terminal.
   *
   * A NOT_FOUND right after submit can be a race with task registration and
   * is tolerated for three consecutive polls before it is surfaced.
   */
  async submitAndPoll(
    request: SubmitRequest,
    onUpdate?: (snapshot: TaskSnapshot) => void,
  ): Promise<TaskSnapshot> {
    const taskId = await this.submit(request);
    return this.pollUntilTerminal(taskId, onUpdate);
  }

  async pollUntilTerminal(
    taskId: string,
    onUpdate?: (snapshot: TaskSnapshot) => void,
  ): Promise<TaskSnapshot> {
    const deadline = this.now() + this.pollTimeoutMs;
    let notFoundStreak = 0;
    for (;;) {
      let snapshot: TaskSnapshot | null = null;
      try {
        snapshot = await this.snapshot(taskId);
        notFoundStreak = 0;
      } catch (err) {
        if (err instanceof ApiError && err.code === "NOT_FOUND" && notFoundStreak < 3) {
          notFoundStreak += 1;
        } else {
          throw err;
        }
      }
      if (snapshot) {
        onUpdate?.(snapshot);
        if (TERMINAL_STATES.has(snapshot.state)) return snapshot;
      }
      if (this.now() >= deadline) {
        throw new ApiError("POLL_TIMEOUT", `task ${taskId} still running after ${this.pollTimeoutMs} ms`, 0);
      }
      await this.sleep(this.pollIntervalMs);
    }
  }
}
