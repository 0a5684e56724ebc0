"""Task lifecycle: bounded queue, worker pool, snapshots, request log.

A submitted query becomes a task that one worker drives through
transcribe, refine, generate, and optionally synthesize. State changes
are atomic and immediately visible to poll(); every task records its
transition walk. Terminal tasks append one JSON line to an append-only
request log, and audio lives in a content-addressed blob directory.
"""

from __future__ import annotations

import hashlib
import json
import os
import queue
import threading
import time
import uuid
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Optional

from .lexicon import detect_source_language
from .providers import LanguageTag, ProviderError, ProviderGateway, ProviderKind
from .refine import ConfusionTable, Edit, RawTranscript, RefinementConfig, SymbolTable, refine


class TaskState(str, Enum):
    QUEUED = "QUEUED"
    TRANSCRIBING = "TRANSCRIBING"
    REFINING = "REFINING"
    GENERATING = "GENERATING"
    SYNTHESIZING = "SYNTHESIZING"
    SUCCEEDED = "SUCCEEDED"
    FAILED = "FAILED"


_NEXT = {
    TaskState.QUEUED: {TaskState.TRANSCRIBING, TaskState.FAILED},
    TaskState.TRANSCRIBING: {TaskState.REFINING, TaskState.FAILED},
    TaskState.REFINING: {TaskState.GENERATING, TaskState.FAILED},
    TaskState.GENERATING: {TaskState.SYNTHESIZING, TaskState.SUCCEEDED, TaskState.FAILED},
    TaskState.SYNTHESIZING: {TaskState.SUCCEEDED, TaskState.FAILED},
    TaskState.SUCCEEDED: set(),
    TaskState.FAILED: set(),
}

TERMINAL = {TaskState.SUCCEEDED, TaskState.FAILED}

# stage-attribution group per pipeline state
_STATE_STAGE = {
    TaskState.TRANSCRIBING: "ASR",
    TaskState.REFINING: "REFINER",
    TaskState.GENERATING: "CODEGEN",
    TaskState.SYNTHESIZING: "TTS",
}


def legal_walk(states: list[str]) -> bool:
    """True when a recorded transition sequence follows the task graph."""
    if not states or states[0] != TaskState.QUEUED.value:
        return False
    for prev, cur in zip(states, states[1:]):
        if TaskState(cur) not in _NEXT[TaskState(prev)]:
            return False
    return True


class QueueFullError(Exception):
    pass


@dataclass
class QueryTask:
    task_id: str
    created_at: str
    language: LanguageTag
    audio_ref: str
    media_type: str
    code: str
    problem: str
    state: TaskState = TaskState.QUEUED
    raw_transcript: Optional[str] = None
    refined_transcript: Optional[str] = None
    edits: Optional[tuple[Edit, ...]] = None
    notes: tuple[str, ...] = ()
    response_text: Optional[str] = None
    response_audio_ref: Optional[str] = None
    error: Optional[dict] = None
    stage_timestamps: dict = field(default_factory=dict)
    transitions: list = field(default_factory=lambda: [TaskState.QUEUED.value])


@dataclass(frozen=True)
class TaskSnapshot:
    task_id: str
    created_at: str
    language: str
    state: str
    raw_transcript: Optional[str]
    refined_transcript: Optional[str]
    edits: Optional[tuple[Edit, ...]]
    notes: tuple[str, ...]
    response_text: Optional[str]
    audio_available: bool
    error: Optional[dict]
    stage_timestamps: dict
    transitions: tuple[str, ...]


class BlobStore:
    """Content-addressed blobs: blobs/<2 hex>/<full hex> plus .mime sidecar."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes, media_type: str) -> str:
        digest = hashlib.sha256(data).hexdigest()
        target = self.root / digest[:2] / digest
        if target.exists():
            return digest
        target.parent.mkdir(parents=True, exist_ok=True)
        self._write_atomic(target, data)
        self._write_atomic(target.with_suffix(".mime"), media_type.encode("utf-8"))
        return digest

    def get(self, ref: str) -> tuple[bytes, str]:
        target = self.root / ref[:2] / ref
        data = target.read_bytes()
        mime = target.with_suffix(".mime").read_text(encoding="utf-8")
        return data, mime

    @staticmethod
    def _write_atomic(target: Path, data: bytes):
        tmp = target.with_name(f"{target.name}.{os.getpid()}.{threading.get_ident()}.tmp")
        tmp.write_bytes(data)
        os.replace(tmp, target)


class RequestLog:
    """Append-only JSON lines; a torn final line is skipped on read."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fd = os.open(self.path, os.O_APPEND | os.O_CREAT | os.O_WRONLY, 0o644)
        self._lock = threading.Lock()

    def append(self, record: dict):
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._lock:
            os.write(self._fd, line.encode("utf-8"))

    def close(self):
        os.close(self._fd)

    @staticmethod
    def read_all(path: Path) -> list[dict]:
        entries = []
        try:
            raw = Path(path).read_bytes()
        except FileNotFoundError:
            return entries
        for line in raw.split(b"\n"):
            if not line:
                continue
            try:
                entries.append(json.loads(line.decode("utf-8")))
            except (ValueError, UnicodeDecodeError):
                continue  # torn or foreign line
        return entries


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class Orchestrator:
    """Owns tasks from submit to terminal state."""

    def __init__(
        self,
        gateway: ProviderGateway,
        data_dir: Path,
        workers: int = 4,
        queue_capacity: int = 1000,
        retention: int = 10000,
        refinement: Optional[RefinementConfig] = None,
        symbols: Optional[SymbolTable] = None,
        confusions: Optional[ConfusionTable] = None,
    ):
        self.gateway = gateway
        self.data_dir = Path(data_dir)
        self.refinement = refinement or RefinementConfig()
        self.symbols = symbols or SymbolTable.builtin()
        self.confusions = confusions or ConfusionTable.builtin()
        self.retention = retention
        self.blobs = BlobStore(self.data_dir / "blobs")
        self.log = RequestLog(self.data_dir / "requests.log")
        self._tasks: OrderedDict[str, QueryTask] = OrderedDict()
        self._lock = threading.RLock()
        self._queue: queue.Queue = queue.Queue(maxsize=queue_capacity)
        self._history: deque = deque(maxlen=retention)
        for entry in RequestLog.read_all(self.log.path):
            self._history.append(entry)
        self._threads = [
            threading.Thread(target=self._worker_loop, name=f"worker-{i}", daemon=True)
            for i in range(workers)
        ]
        self._started = False

    def start(self):
        if not self._started:
            self._started = True
            for t in self._threads:
                t.start()

    def stop(self):
        if self._started:
            for _ in self._threads:
                self._queue.put(None)
            for t in self._threads:
                t.join(timeout=10)
            self._started = False
        self.log.close()

    # -- public operations

    def submit(
        self, language: LanguageTag, audio: bytes, media_type: str, code: str, problem: str
    ) -> str:
        audio_ref = self.blobs.put(audio, media_type)
        task = QueryTask(
            task_id=str(uuid.uuid4()),
            created_at=_now_iso(),
            language=language,
            audio_ref=audio_ref,
            media_type=media_type,
            code=code,
            problem=problem,
        )
        with self._lock:
            self._tasks[task.task_id] = task
            self._evict()
        try:
            self._queue.put_nowait(task.task_id)
        except queue.Full:
            with self._lock:
                self._tasks.pop(task.task_id, None)
            raise QueueFullError("task queue is at capacity") from None
        return task.task_id

    def poll(self, task_id: str) -> TaskSnapshot:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise KeyError(task_id)
            self._tasks.move_to_end(task_id)
            return TaskSnapshot(
                task_id=task.task_id,
                created_at=task.created_at,
                language=task.language.value,
                state=task.state.value,
                raw_transcript=task.raw_transcript,
                refined_transcript=task.refined_transcript,
                edits=task.edits,
                notes=task.notes,
                response_text=task.response_text,
                audio_available=task.response_audio_ref is not None,
                error=dict(task.error) if task.error else None,
                stage_timestamps={k: tuple(v) for k, v in task.stage_timestamps.items()},
                transitions=tuple(task.transitions),
            )

    def get_audio(self, task_id: str) -> tuple[bytes, str]:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise KeyError(task_id)
            ref = task.response_audio_ref
        if ref is None:
            raise LookupError("task has no audio output")
        return self.blobs.get(ref)

    def history(self, limit: int) -> list[dict]:
        if limit < 1:
            raise ValueError("history limit must be positive")
        with self._lock:
            # the log appends in completion order, which drifts from submission
            # order when workers race; present newest-created first regardless
            ordered = sorted(enumerate(self._history), key=lambda p: (p[1]["created_at"], p[0]))
        return [entry for _, entry in reversed(ordered)][:limit]

    # -- worker internals

    def _evict(self):
        # drop oldest terminal snapshots past the retention cap
        while len(self._tasks) > self.retention:
            victim = None
            for task_id, task in self._tasks.items():
                if task.state in TERMINAL:
                    victim = task_id
                    break
            if victim is None:
                break
            del self._tasks[victim]

    def _worker_loop(self):
        while True:
            item = self._queue.get()
            if item is None:
                return
            with self._lock:
                task = self._tasks.get(item)
            if task is not None:
                self._run_task(task)

    def _transition(self, task: QueryTask, new_state: TaskState, **outputs):
        with self._lock:
            if new_state not in _NEXT[task.state]:
                raise RuntimeError(f"illegal transition {task.state.value} -> {new_state.value}")
            now = time.time()
            old = task.state
            if old in _STATE_STAGE and old.value in task.stage_timestamps:
                task.stage_timestamps[old.value][1] = now
            if new_state in _STATE_STAGE:
                task.stage_timestamps[new_state.value] = [now, None]
            for name, value in outputs.items():
                setattr(task, name, value)
            task.state = new_state
            task.transitions.append(new_state.value)

    def _fail(self, task: QueryTask, stage: str, message: str):
        self._transition(task, TaskState.FAILED, error={"stage": stage, "message": message})

    def _run_task(self, task: QueryTask):
        try:
            self._transition(task, TaskState.TRANSCRIBING)
            audio, media_type = self.blobs.get(task.audio_ref)
            raw = self.gateway.transcribe(audio, media_type, task.language)

            self._transition(task, TaskState.REFINING, raw_transcript=raw.text)
            refined = self._refine(task, raw)

            self._transition(
                task,
                TaskState.GENERATING,
                refined_transcript=refined.text,
                edits=refined.edits,
                notes=refined.notes,
            )
            answer = self.gateway.generate_response(
                refined.text, task.code, task.problem, task.language
            )

            if self.gateway.bound(ProviderKind.TTS):
                self._transition(task, TaskState.SYNTHESIZING, response_text=answer)
                audio_out, audio_type = self.gateway.synthesize_speech(answer, task.language)
                ref = self.blobs.put(audio_out, audio_type)
                self._transition(task, TaskState.SUCCEEDED, response_audio_ref=ref)
            else:
                self._transition(task, TaskState.SUCCEEDED, response_text=answer)
        except ProviderError as err:
            self._fail(task, err.stage, str(err))
        except Exception as exc:  # defensive: no failure may escape a worker
            stage = _STATE_STAGE.get(task.state, "ASR")
            self._fail(task, stage, f"{type(exc).__name__}: {exc}")
        finally:
            self._finish(task)

    def _refine(self, task: QueryTask, raw: RawTranscript):
        llm = None
        if self.refinement.llm_pass_enabled and self.gateway.bound(ProviderKind.REFINER_LLM):
            llm = lambda text, code: self.gateway.refine_llm(text, code, task.language)
        return refine(
            raw,
            task.code,
            detect_source_language(task.code),
            cfg=self.refinement,
            llm=llm,
            symbols=self.symbols,
            confusions=self.confusions,
        )

    def _finish(self, task: QueryTask):
        with self._lock:
            durations = {}
            for stage, (start, end) in task.stage_timestamps.items():
                if end is not None:
                    durations[stage] = end - start
            entry = {
                "task_id": task.task_id,
                "created_at": task.created_at,
                "language": task.language.value,
                "state": task.state.value,
                "durations": durations,
                "raw_transcript": task.raw_transcript,
                "refined_transcript": task.refined_transcript,
                "response_text": task.response_text,
            }
            self._history.append(entry)
        self.log.append(entry)
