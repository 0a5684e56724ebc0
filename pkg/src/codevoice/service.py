"""HTTP face of the gateway: submit, poll, audio, history, health.

All errors share one body shape: {"error": {"code": ..., "message": ...}}.
Submission answers 202 with a task id before any model work starts.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from starlette.datastructures import UploadFile

from .config import AppConfig
from .orchestrator import Orchestrator, QueueFullError
from .providers import LanguageTag, ProviderBinding, ProviderGateway, ProviderKind

MAX_AUDIO_BYTES = 10 * 1024 * 1024
MAX_CODE_BYTES = 64 * 1024
MAX_PROBLEM_BYTES = 16 * 1024

AUDIO_MEDIA_TYPES = {"audio/wav", "audio/ogg", "audio/webm"}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def _serialize_edits(edits) -> Optional[list]:
    if edits is None:
        return None
    return [
        {
            "span": list(e.span),
            "original": e.original,
            "replacement": e.replacement,
            "rule": e.rule.value,
        }
        for e in edits
    ]


def _serialize_snapshot(snap) -> dict:
    return {
        "task_id": snap.task_id,
        "state": snap.state,
        "raw_transcript": snap.raw_transcript,
        "refined_transcript": snap.refined_transcript,
        "edits": _serialize_edits(snap.edits),
        "response_text": snap.response_text,
        "audio_available": snap.audio_available,
        "error": snap.error,
        "created_at": snap.created_at,
        "stage_timestamps": {k: list(v) for k, v in snap.stage_timestamps.items()},
    }


def create_app(
    config: Optional[AppConfig] = None,
    gateway: Optional[ProviderGateway] = None,
    orchestrator: Optional[Orchestrator] = None,
) -> FastAPI:
    if config is None:
        config = AppConfig(
            bindings={kind: ProviderBinding(kind) for kind in ProviderKind}
        )
    own_orchestrator = orchestrator is None
    if gateway is None:
        gateway = ProviderGateway(config.bindings, lanes=config.lanes)
    if orchestrator is None:
        orchestrator = Orchestrator(
            gateway,
            data_dir=config.data_dir,
            workers=config.workers,
            queue_capacity=config.queue_capacity,
            retention=config.retention,
            refinement=config.refinement,
            symbols=config.load_symbols(),
            confusions=config.load_confusions(),
        )

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        orchestrator.start()
        try:
            yield
        finally:
            if own_orchestrator:
                orchestrator.stop()
                gateway.close()

    app = FastAPI(lifespan=lifespan, docs_url=None, redoc_url=None, openapi_url=None)
    app.state.orchestrator = orchestrator
    app.state.gateway = gateway
    app.state.config = config

    if config.ui_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.ui_origin],
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, err: ApiError):
        return _error_response(err.status, err.code, err.message)

    def _check_media_type(content_type: Optional[str], language: LanguageTag) -> str:
        media_type = (content_type or "").split(";")[0].strip().lower()
        if media_type in AUDIO_MEDIA_TYPES:
            return media_type
        if media_type == "text/plain":
            kind = ProviderGateway.route_asr(language)
            binding = gateway.bindings.get(kind)
            if binding is not None and binding.is_mock:
                return media_type
            raise ApiError(
                400,
                "UNSUPPORTED_MEDIA_TYPE",
                "text/plain audio is only accepted when the ASR binding is MOCK",
            )
        raise ApiError(
            400, "UNSUPPORTED_MEDIA_TYPE", f"unsupported audio media type {media_type!r}"
        )

    @app.post("/api/v1/queries", status_code=202)
    async def submit_query(request: Request):
        form = await request.form()
        audio = form.get("audio")
        language_text = form.get("language")
        if not isinstance(audio, UploadFile):
            raise ApiError(400, "MISSING_FIELD", "multipart field 'audio' is required")
        if not isinstance(language_text, str) or not language_text:
            raise ApiError(400, "MISSING_FIELD", "multipart field 'language' is required")
        code = form.get("code") or ""
        problem = form.get("problem") or ""
        if not isinstance(code, str) or not isinstance(problem, str):
            raise ApiError(400, "MISSING_FIELD", "'code' and 'problem' must be text fields")
        try:
            language = LanguageTag.parse(language_text)
        except ValueError as exc:
            raise ApiError(400, "INVALID_LANGUAGE", str(exc)) from None

        payload = await audio.read()
        if not payload:
            raise ApiError(400, "MISSING_FIELD", "audio payload is empty")
        if len(payload) > MAX_AUDIO_BYTES:
            raise ApiError(400, "TOO_LARGE", "audio exceeds 10 MiB")
        if len(code.encode("utf-8")) > MAX_CODE_BYTES:
            raise ApiError(400, "TOO_LARGE", "code exceeds 64 KiB")
        if len(problem.encode("utf-8")) > MAX_PROBLEM_BYTES:
            raise ApiError(400, "TOO_LARGE", "problem exceeds 16 KiB")
        media_type = _check_media_type(audio.content_type, language)

        try:
            task_id = orchestrator.submit(language, payload, media_type, code, problem)
        except QueueFullError as exc:
            raise ApiError(503, "QUEUE_FULL", str(exc)) from None
        return {"task_id": task_id}

    @app.get("/api/v1/queries")
    async def list_history(limit: str = "20"):
        try:
            n = int(limit)
        except ValueError:
            raise ApiError(400, "INVALID_LIMIT", f"limit must be an integer, got {limit!r}")
        if n < 1:
            raise ApiError(400, "INVALID_LIMIT", "limit must be positive")
        return orchestrator.history(n)

    @app.get("/api/v1/queries/{task_id}")
    async def poll_query(task_id: str):
        try:
            snap = orchestrator.poll(task_id)
        except KeyError:
            raise ApiError(404, "NOT_FOUND", f"unknown task {task_id}") from None
        return _serialize_snapshot(snap)

    @app.get("/api/v1/queries/{task_id}/audio")
    async def get_audio(task_id: str):
        try:
            audio, media_type = orchestrator.get_audio(task_id)
        except (KeyError, LookupError) as exc:
            raise ApiError(404, "NOT_FOUND", str(exc)) from None
        return Response(content=audio, media_type=media_type)

    @app.get("/healthz")
    async def health():
        bindings = {
            kind.value: (
                gateway.bindings[kind].endpoint if kind in gateway.bindings else None
            )
            for kind in ProviderKind
        }
        return {"status": "ok", "bindings": bindings}

    return app
