/** Per-tab console state; one in-flight task at a time. */

import type { TaskSnapshot } from "./api.js";

export interface RecordingRef {
  blob: Blob;
  mediaType: string;
  filename: string;
}

export interface ConsoleSession {
  language: string;
  code: string;
  problem: string;
  recording: RecordingRef | null;
  activeTaskId: string | null;
  lastSnapshot: TaskSnapshot | null;
  busy: boolean;
}

export const LANGUAGES = ["en", "hi", "mr", "gu", "ta", "te", "bn", "ml", "kn", "or"];

export function emptySession(): ConsoleSession {
  return {
    language: "",
    code: "",
    problem: "",
    recording: null,
    activeTaskId: null,
    lastSnapshot: null,
    busy: false,
  };
}

/** Submit stays disabled until a recording exists and a language is chosen. */
export function canSubmit(session: ConsoleSession): boolean {
  return (
    !session.busy &&
    session.recording !== null &&
    session.recording.blob.size > 0 &&
    LANGUAGES.includes(session.language)
  );
}

export function textRecording(text: string): RecordingRef {
  return {
    blob: new Blob([text], { type: "text/plain" }),
    mediaType: "text/plain",
    filename: "query.txt",
  };
}
