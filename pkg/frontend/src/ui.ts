/** DOM glue between the page, the recorder, and the API client. */

import { ApiError, ConsoleApi, type TaskSnapshot } from "./api.js";
import { browserRecorderDeps, Recorder } from "./recorder.js";
import {
  renderApiBanner,
  renderAudio,
  renderErrorBanner,
  renderHeard,
  renderHistory,
  renderResponse,
  renderStageStrip,
} from "./render.js";
import { canSubmit, emptySession, textRecording, type ConsoleSession } from "./session.js";

function byId<T extends HTMLElement>(root: Document, id: string): T {
  const el = root.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function wireConsole(root: Document, makeApi: (origin: string) => ConsoleApi): void {
  const session: ConsoleSession = emptySession();
  const recorder = new Recorder(browserRecorderDeps());
  let api = makeApi((byId<HTMLInputElement>(root, "server-origin")).value);

  const els = {
    origin: byId<HTMLInputElement>(root, "server-origin"),
    language: byId<HTMLSelectElement>(root, "language"),
    code: byId<HTMLTextAreaElement>(root, "code"),
    problem: byId<HTMLTextAreaElement>(root, "problem"),
    recordBtn: byId<HTMLButtonElement>(root, "record-toggle"),
    recordStatus: byId<HTMLElement>(root, "record-status"),
    upload: byId<HTMLInputElement>(root, "audio-upload"),
    testMode: byId<HTMLInputElement>(root, "test-mode"),
    testText: byId<HTMLTextAreaElement>(root, "test-text"),
    submit: byId<HTMLButtonElement>(root, "submit"),
    banners: byId<HTMLElement>(root, "banners"),
    stageStrip: byId<HTMLElement>(root, "stage-strip"),
    heard: byId<HTMLElement>(root, "heard-panel"),
    response: byId<HTMLElement>(root, "response-panel"),
    audio: byId<HTMLElement>(root, "audio-panel"),
    history: byId<HTMLElement>(root, "history-panel"),
    historyRefresh: byId<HTMLButtonElement>(root, "history-refresh"),
  };

  const syncSubmit = () => {
    session.language = els.language.value;
    session.code = els.code.value;
    session.problem = els.problem.value;
    if (els.testMode.checked && els.testText.value.trim()) {
      session.recording = textRecording(els.testText.value);
    }
    els.submit.disabled = !canSubmit(session);
  };

  const banner = (html: string) => {
    els.banners.insertAdjacentHTML("beforeend", html);
    const added = els.banners.lastElementChild;
    added?.querySelector(".dismiss")?.addEventListener("click", () => added.remove());
  };

  const showSnapshot = (snapshot: TaskSnapshot, readOnly = false) => {
    session.lastSnapshot = snapshot;
    els.stageStrip.innerHTML = renderStageStrip(snapshot.state, snapshot.error);
    els.heard.innerHTML = renderHeard(snapshot.raw_transcript, snapshot.edits);
    els.response.innerHTML = renderResponse(snapshot.response_text);
    els.audio.innerHTML = renderAudio(snapshot, api.audioUrl(snapshot.task_id));
    if (snapshot.state === "FAILED" && snapshot.error && !readOnly) {
      banner(renderErrorBanner(snapshot.error));
    }
  };

  const refreshHistory = async () => {
    try {
      els.history.innerHTML = renderHistory(await api.history(20));
      for (const row of Array.from(els.history.querySelectorAll<HTMLElement>(".history-row"))) {
        row.addEventListener("click", async () => {
          const taskId = row.dataset.taskId;
          if (!taskId) return;
          try {
            showSnapshot(await api.snapshot(taskId), true);
          } catch (err) {
            banner(renderApiBanner(err instanceof Error ? err.message : String(err)));
          }
        });
      }
    } catch {
      els.history.innerHTML =
        '<p class="placeholder">History unavailable.</p>' +
        '<button type="button" id="history-retry">retry</button>';
      root.getElementById("history-retry")?.addEventListener("click", refreshHistory);
    }
  };

  els.origin.addEventListener("change", () => {
    api = makeApi(els.origin.value);
    void refreshHistory();
  });

  els.recordBtn.addEventListener("click", async () => {
    if (recorder.state === "recording") {
      recorder.stop();
      setTimeout(() => {
        if (recorder.hasRecording && recorder.blob) {
          session.recording = {
            blob: recorder.blob,
            mediaType: recorder.mediaType,
            filename: "recording",
          };
          els.recordStatus.textContent = `captured ${(recorder.durationMs / 1000).toFixed(1)} s`;
        }
        els.recordBtn.textContent = "record";
        syncSubmit();
      }, 50);
      return;
    }
    await recorder.start();
    if (recorder.state === "denied") {
      banner(renderApiBanner(`microphone unavailable: ${recorder.errorMessage}`));
      els.recordStatus.textContent = "permission denied";
      return;
    }
    els.recordBtn.textContent = "stop";
    els.recordStatus.textContent = "recording...";
  });

  els.upload.addEventListener("change", () => {
    const file = els.upload.files?.[0];
    if (file) {
      session.recording = { blob: file, mediaType: file.type, filename: file.name };
      els.recordStatus.textContent = `file: ${file.name}`;
    }
    syncSubmit();
  });

  for (const el of [els.language, els.code, els.problem, els.testMode, els.testText]) {
    el.addEventListener("input", syncSubmit);
    el.addEventListener("change", syncSubmit);
  }

  els.submit.addEventListener("click", async () => {
    syncSubmit();
    if (!canSubmit(session) || !session.recording) return;
    session.busy = true;
    els.submit.disabled = true;
    els.stageStrip.innerHTML = renderStageStrip("QUEUED");
    try {
      const snapshot = await api.submitAndPoll(
        {
          language: session.language,
          code: session.code,
          problem: session.problem,
          audio: session.recording.blob,
          filename: session.recording.filename,
        },
        (update) => showSnapshot(update),
      );
      showSnapshot(snapshot);
      await refreshHistory();
    } catch (err) {
      if (err instanceof ApiError) {
        banner(renderApiBanner(`${err.code}: ${err.message}`));
      } else {
        banner(renderApiBanner(err instanceof Error ? err.message : String(err)));
      }
    } finally {
      session.busy = false;
      syncSubmit();
    }
  });

  els.historyRefresh.addEventListener("click", refreshHistory);
  syncSubmit();
  void refreshHistory();
}
