/** Pure HTML-string builders for the console panels.
 *
 * Everything user- or server-provided goes through escapeHtml; the
 * builders are plain functions so they can be tested without a DOM.
 */

import type { EditSpan, HistoryEntry, TaskError, TaskSnapshot, TaskState } from "./api.js";
import { replayEdits } from "./edits.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const PIPELINE_STAGES: TaskState[] = [
  "QUEUED",
  "TRANSCRIBING",
  "REFINING",
  "GENERATING",
  "SYNTHESIZING",
];

const STAGE_OF_ERROR: Record<string, TaskState> = {
  ASR: "TRANSCRIBING",
  REFINER: "REFINING",
  CODEGEN: "GENERATING",
  TTS: "SYNTHESIZING",
};

export function renderStageStrip(state: TaskState | null, error: TaskError | null = null): string {
  const failedStage = error ? STAGE_OF_ERROR[error.stage] : undefined;
  const current = state === null ? -1 : PIPELINE_STAGES.indexOf(state);
  const parts = PIPELINE_STAGES.map((stage, i) => {
    let cls = "pending";
    if (state === "SUCCEEDED") {
      cls = "done";
    } else if (state === "FAILED") {
      cls = stage === failedStage ? "failed" : "muted";
    } else if (current >= 0) {
      cls = i < current ? "done" : i === current ? "active" : "pending";
    }
    return `<span class="stage ${cls}">${stage}</span>`;
  });
  return `<div class="stage-strip">${parts.join('<span class="arrow">&rarr;</span>')}</div>`;
}

/** Refined transcript with repairs wrapped in <mark>; hover shows what was heard. */
export function renderHeard(rawTranscript: string | null, edits: EditSpan[] | null): string {
  if (rawTranscript === null) {
    return '<p class="placeholder">Nothing transcribed yet.</p>';
  }
  let tokens;
  try {
    tokens = replayEdits(rawTranscript, edits ?? []);
  } catch {
    // a malformed edit list must not take the panel down
    return `<p class="transcript">${escapeHtml(rawTranscript)}</p>`;
  }
  const parts: string[] = [];
  let i = 0;
  while (i < tokens.length) {
    const token = tokens[i];
    if (!token.edit) {
      parts.push(escapeHtml(token.text));
      i += 1;
      continue;
    }
    const edit = token.edit;
    const run: string[] = [];
    while (i < tokens.length && tokens[i].edit === edit) {
      run.push(tokens[i].text);
      i += 1;
    }
    const rule = escapeHtml(edit.rule.toLowerCase());
    const heard = escapeHtml(`heard: ${edit.original}`);
    parts.push(`<mark class="edit edit-${rule}" title="${heard}">${escapeHtml(run.join(" "))}</mark>`);
  }
  return `<p class="transcript">${parts.join(" ")}</p>`;
}

export function renderResponse(responseText: string | null): string {
  if (responseText === null) {
    return '<p class="placeholder">No answer yet.</p>';
  }
  return `<p class="response">${escapeHtml(responseText)}</p>`;
}

/** Play control, only when the pipeline actually produced audio. */
export function renderAudio(snapshot: TaskSnapshot, audioUrl: string): string {
  if (!snapshot.audio_available) return "";
  return `<audio controls preload="none" src="${escapeHtml(audioUrl)}"></audio>`;
}

export function renderErrorBanner(error: TaskError): string {
  const text = escapeHtml(`stage ${error.stage} failed: ${error.message}`);
  return `<div class="banner error">${text}<button class="dismiss" type="button">&times;</button></div>`;
}

export function renderApiBanner(message: string): string {
  return `<div class="banner error">${escapeHtml(message)}<button class="dismiss" type="button">&times;</button></div>`;
}

export function renderHistory(entries: HistoryEntry[]): string {
  if (entries.length === 0) {
    return '<p class="placeholder">No finished queries yet.</p>';
  }
  const rows = entries.map((entry) => {
    const summary = entry.refined_transcript ?? entry.raw_transcript ?? "";
    return (
      `<tr class="history-row" data-task-id="${escapeHtml(entry.task_id)}">` +
      `<td>${escapeHtml(entry.created_at)}</td>` +
      `<td>${escapeHtml(entry.language)}</td>` +
      `<td class="state-${escapeHtml(entry.state.toLowerCase())}">${escapeHtml(entry.state)}</td>` +
      `<td>${escapeHtml(summary)}</td>` +
      `</tr>`
    );
  });
  return (
    '<table class="history"><thead><tr>' +
    "<th>when</th><th>lang</th><th>state</th><th>heard</th>" +
    `</tr></thead><tbody>${rows.join("")}</tbody></table>`
  );
}
