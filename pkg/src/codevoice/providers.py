"""Inference providers behind one wire schema, with lane admission.

Each pipeline stage (speech recognition per language family, the LLM
refiner, answer generation, speech synthesis) binds to a remote HTTP
endpoint or a deterministic in-process mock. Lanes model per-GPU serial
capacity: blocked callers queue FIFO and at most max_concurrent calls
run per lane at any instant. Transient failures (timeout, connection
loss, 5xx) get one retry inside the same lane hold.
"""

from __future__ import annotations

import base64
import binascii
import functools
import io
import threading
import wave
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional

import httpx

from .lexicon import SourceLanguage, extract_vocabulary
from .refine import RawTranscript


class LanguageTag(str, Enum):
    EN = "en"
    HI = "hi"
    MR = "mr"
    GU = "gu"
    TA = "ta"
    TE = "te"
    BN = "bn"
    ML = "ml"
    KN = "kn"
    OR = "or"

    @classmethod
    def parse(cls, text: str) -> "LanguageTag":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown language tag {text!r}") from None


class ProviderKind(str, Enum):
    ASR_EN = "ASR_EN"
    ASR_INDIC = "ASR_INDIC"
    REFINER_LLM = "REFINER_LLM"
    CODEGEN = "CODEGEN"
    TTS = "TTS"


# stage group used for error attribution in task results
STAGE_GROUP = {
    ProviderKind.ASR_EN: "ASR",
    ProviderKind.ASR_INDIC: "ASR",
    ProviderKind.REFINER_LLM: "REFINER",
    ProviderKind.CODEGEN: "CODEGEN",
    ProviderKind.TTS: "TTS",
}

DEFAULT_LANE = {
    ProviderKind.ASR_EN: "a",
    ProviderKind.ASR_INDIC: "a",
    ProviderKind.REFINER_LLM: "a",
    ProviderKind.CODEGEN: "b",
    ProviderKind.TTS: "b",
}

MOCK = "MOCK"

REFINER_GOALS = (
    "restore code terms",
    "fix phonetic distortions",
    "recover symbols",
    "disambiguate usage",
)


@dataclass(frozen=True)
class ProviderBinding:
    kind: ProviderKind
    endpoint: str = MOCK
    timeout: float = 60.0
    lane: str = ""
    auth_token: str = ""

    def __post_init__(self):
        if not self.lane:
            object.__setattr__(self, "lane", DEFAULT_LANE[self.kind])

    @property
    def is_mock(self) -> bool:
        return self.endpoint == MOCK


@dataclass(frozen=True)
class Lane:
    id: str
    max_concurrent: int = 1

    def __post_init__(self):
        if self.max_concurrent < 1:
            raise ValueError("lane max_concurrent must be positive")


class ProviderError(Exception):
    """Failure of one provider call, attributed to its stage."""

    def __init__(self, kind: ProviderKind, code: str, message: str, retryable: bool = False):
        super().__init__(message)
        self.kind = kind
        self.code = code
        self.retryable = retryable

    @property
    def stage(self) -> str:
        return STAGE_GROUP[self.kind]


class LaneGate:
    """FIFO admission with a fixed in-flight cap."""

    def __init__(self, lane: Lane):
        self.lane = lane
        self._cond = threading.Condition()
        self._waiting: deque = deque()
        self._active = 0

    def acquire(self):
        ticket = object()
        with self._cond:
            self._waiting.append(ticket)
            while self._waiting[0] is not ticket or self._active >= self.lane.max_concurrent:
                self._cond.wait()
            self._waiting.popleft()
            self._active += 1
            # wake the next waiter in case capacity remains
            self._cond.notify_all()

    def release(self):
        with self._cond:
            self._active -= 1
            self._cond.notify_all()

    @contextmanager
    def hold(self):
        self.acquire()
        try:
            yield
        finally:
            self.release()


@functools.lru_cache(maxsize=1)
def silent_wav() -> bytes:
    """One second of 8 kHz mono 16-bit silence: 44-byte header + 16000 zeros."""
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(8000)
        w.writeframes(b"\x00" * 16000)
    return buf.getvalue()


def _mock_asr(kind: ProviderKind, payload: dict) -> dict:
    audio = base64.b64decode(payload["audio_b64"])
    try:
        return {"text": audio.decode("utf-8")}
    except UnicodeDecodeError:
        raise ProviderError(
            kind, "MOCK_UNDECODABLE", "mock transcription needs utf-8 text payloads"
        ) from None


def _mock_refiner(kind: ProviderKind, payload: dict) -> dict:
    return {"text": payload["text"]}


def _mock_codegen(kind: ProviderKind, payload: dict) -> dict:
    query = payload["query"]
    identifiers = extract_vocabulary(payload["code"], SourceLanguage.UNKNOWN).identifiers
    terms = sorted(set(query.split()) & set(identifiers))
    text = f"[mock:{payload['language']}] Q: {query} | code-terms: {','.join(terms)}"
    return {"text": text}


def _mock_tts(kind: ProviderKind, payload: dict) -> dict:
    b64 = base64.b64encode(silent_wav()).decode("ascii")
    return {"audio_b64": b64, "media_type": "audio/wav"}


MockHandler = Callable[[ProviderKind, dict], dict]

_DEFAULT_MOCKS: Mapping[ProviderKind, MockHandler] = {
    ProviderKind.ASR_EN: _mock_asr,
    ProviderKind.ASR_INDIC: _mock_asr,
    ProviderKind.REFINER_LLM: _mock_refiner,
    ProviderKind.CODEGEN: _mock_codegen,
    ProviderKind.TTS: _mock_tts,
}


def mock_bindings(kinds: Optional[Iterable[ProviderKind]] = None) -> dict:
    """All-mock binding set; kinds defaults to every provider."""
    return {k: ProviderBinding(kind=k) for k in (kinds or ProviderKind)}


class ProviderGateway:
    """Routes stage calls to bound providers under lane discipline."""

    def __init__(
        self,
        bindings: Mapping[ProviderKind, ProviderBinding],
        lanes: Optional[Iterable[Lane]] = None,
        mocks: Optional[Mapping[ProviderKind, MockHandler]] = None,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.bindings = dict(bindings)
        lane_defs = {lane.id: lane for lane in (lanes or [])}
        self._gates: dict[str, LaneGate] = {}
        for binding in self.bindings.values():
            if binding.lane not in self._gates:
                lane = lane_defs.get(binding.lane, Lane(binding.lane))
                self._gates[binding.lane] = LaneGate(lane)
        self._mocks = {**_DEFAULT_MOCKS, **(mocks or {})}
        self._transport = transport
        self._client: Optional[httpx.Client] = None
        self._client_lock = threading.Lock()

    def close(self):
        if self._client is not None:
            self._client.close()

    def bound(self, kind: ProviderKind) -> bool:
        return kind in self.bindings

    @staticmethod
    def route_asr(lang: LanguageTag) -> ProviderKind:
        return ProviderKind.ASR_EN if lang is LanguageTag.EN else ProviderKind.ASR_INDIC

    def transcribe(self, audio: bytes, media_type: str, lang: LanguageTag) -> RawTranscript:
        if not audio:
            raise ValueError("audio payload is empty")
        kind = self.route_asr(lang)
        payload = {
            "task": "asr",
            "language": lang.value,
            "audio_b64": base64.b64encode(audio).decode("ascii"),
            "media_type": media_type,
        }
        data = self._call(kind, payload)
        text = data.get("text")
        if not isinstance(text, str):
            raise ProviderError(kind, "BAD_RESPONSE", "transcript missing from response")
        return RawTranscript(text=text, language=lang.value, provider_id=self.bindings[kind].endpoint)

    def refine_llm(self, text: str, code: str, lang: LanguageTag) -> str:
        payload = {
            "task": "refine",
            "language": lang.value,
            "text": text,
            "code": code,
            "goals": list(REFINER_GOALS),
        }
        data = self._call(ProviderKind.REFINER_LLM, payload)
        out = data.get("text")
        if not isinstance(out, str) or not out:
            raise ProviderError(
                ProviderKind.REFINER_LLM, "BAD_RESPONSE", "empty refiner response"
            )
        return out

    def generate_response(self, refined: str, code: str, problem: str, lang: LanguageTag) -> str:
        payload = {
            "task": "answer",
            "language": lang.value,
            "query": refined,
            "code": code,
            "problem": problem,
        }
        data = self._call(ProviderKind.CODEGEN, payload)
        out = data.get("text")
        if not isinstance(out, str) or not out:
            raise ProviderError(ProviderKind.CODEGEN, "BAD_RESPONSE", "empty answer")
        return out

    def synthesize_speech(self, text: str, lang: LanguageTag) -> tuple[bytes, str]:
        payload = {"task": "tts", "language": lang.value, "text": text}
        data = self._call(ProviderKind.TTS, payload)
        b64 = data.get("audio_b64")
        media_type = data.get("media_type")
        if not isinstance(b64, str) or not isinstance(media_type, str) or not media_type:
            raise ProviderError(ProviderKind.TTS, "BAD_RESPONSE", "malformed audio response")
        try:
            audio = base64.b64decode(b64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise ProviderError(ProviderKind.TTS, "BAD_RESPONSE", "invalid audio encoding") from exc
        if not audio:
            raise ProviderError(ProviderKind.TTS, "BAD_RESPONSE", "empty audio response")
        return audio, media_type

    def _call(self, kind: ProviderKind, payload: dict) -> dict:
        binding = self.bindings.get(kind)
        if binding is None:
            raise ProviderError(kind, "UNBOUND", f"{kind.value} has no provider bound")
        gate = self._gates[binding.lane]
        with gate.hold():
            try:
                return self._invoke(binding, payload)
            except ProviderError as err:
                if not err.retryable:
                    raise
                return self._invoke(binding, payload)

    def _invoke(self, binding: ProviderBinding, payload: dict) -> dict:
        if binding.is_mock:
            return self._mocks[binding.kind](binding.kind, payload)
        headers = {}
        if binding.auth_token:
            headers["Authorization"] = f"Bearer {binding.auth_token}"
        try:
            resp = self._http().post(
                binding.endpoint, json=payload, headers=headers, timeout=binding.timeout
            )
        except httpx.TimeoutException as exc:
            raise ProviderError(binding.kind, "TIMEOUT", str(exc), retryable=True) from exc
        except httpx.TransportError as exc:
            raise ProviderError(binding.kind, "CONNECTION", str(exc), retryable=True) from exc
        except httpx.HTTPError as exc:
            raise ProviderError(binding.kind, "CONNECTION", str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise ProviderError(
                binding.kind,
                "HTTP_STATUS",
                f"status {resp.status_code}: {resp.text[:200]}",
                retryable=resp.status_code >= 500,
            )
        try:
            data = resp.json()
        except ValueError as exc:
            raise ProviderError(binding.kind, "BAD_RESPONSE", "response is not JSON") from exc
        if not isinstance(data, dict):
            raise ProviderError(binding.kind, "BAD_RESPONSE", "response is not a JSON object")
        return data

    def _http(self) -> httpx.Client:
        with self._client_lock:
            if self._client is None:
                self._client = httpx.Client(transport=self._transport)
            return self._client
