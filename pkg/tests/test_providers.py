"""Provider gateway: routing, mocks, retry policy, lane admission."""

import base64
import threading
import time

import httpx
import pytest

from codevoice.providers import (
    Lane,
    LaneGate,
    LanguageTag,
    MOCK,
    ProviderBinding,
    ProviderError,
    ProviderGateway,
    ProviderKind,
    mock_bindings,
    silent_wav,
)

INDIC = [t for t in LanguageTag if t is not LanguageTag.EN]


def gateway(**kw):
    return ProviderGateway(mock_bindings(), **kw)


def test_language_tags_exactly_ten():
    assert {t.value for t in LanguageTag} == {
        "en", "hi", "mr", "gu", "ta", "te", "bn", "ml", "kn", "or",
    }
    with pytest.raises(ValueError):
        LanguageTag.parse("fr")
    assert LanguageTag.parse("or") is LanguageTag.OR


def test_route_asr():
    assert ProviderGateway.route_asr(LanguageTag.EN) is ProviderKind.ASR_EN
    for tag in INDIC:
        assert ProviderGateway.route_asr(tag) is ProviderKind.ASR_INDIC


def test_mock_transcribe_passthrough():
    raw = gateway().transcribe(b"some of array", "text/plain", LanguageTag.HI)
    assert raw.text == "some of array"
    assert raw.language == "hi"
    assert raw.provider_id == MOCK


def test_mock_transcribe_rejects_binary():
    with pytest.raises(ProviderError) as err:
        gateway().transcribe(b"\xff\xfe\x01", "audio/wav", LanguageTag.EN)
    assert err.value.code == "MOCK_UNDECODABLE"
    assert not err.value.retryable
    assert err.value.stage == "ASR"


def test_transcribe_requires_audio():
    with pytest.raises(ValueError):
        gateway().transcribe(b"", "audio/wav", LanguageTag.EN)


def test_mock_codegen_template():
    g = gateway()
    out = g.generate_response("sum of array", "int sum;", "", LanguageTag.HI)
    assert out == "[mock:hi] Q: sum of array | code-terms: sum"
    out = g.generate_response("hello", "", "", LanguageTag.EN)
    assert out == "[mock:en] Q: hello | code-terms: "


def test_mock_codegen_terms_sorted_exact():
    out = gateway().generate_response(
        "zebra alpha Sum", "int zebra; int alpha; int sum;", "", LanguageTag.EN
    )
    # exact-match intersection: "Sum" does not hit identifier "sum"
    assert out.endswith("code-terms: alpha,zebra")


def test_mock_tts_fixed_wav():
    audio, media_type = gateway().synthesize_speech("hello", LanguageTag.EN)
    assert media_type == "audio/wav"
    assert len(audio) == 16044
    assert audio[:4] == b"RIFF" and audio[8:12] == b"WAVE"
    again, _ = gateway().synthesize_speech("different text", LanguageTag.TA)
    assert again == audio  # deterministic silence regardless of input


def test_silent_wav_layout():
    blob = silent_wav()
    assert len(blob) == 44 + 16000
    assert blob[44:] == b"\x00" * 16000


def test_mock_refiner_identity():
    assert gateway().refine_llm("sum of array", "code", LanguageTag.HI) == "sum of array"


def test_unbound_kind_errors():
    g = ProviderGateway(mock_bindings([ProviderKind.ASR_EN, ProviderKind.CODEGEN]))
    assert not g.bound(ProviderKind.TTS)
    with pytest.raises(ProviderError) as err:
        g.synthesize_speech("hi", LanguageTag.EN)
    assert err.value.code == "UNBOUND"


class CountingMock:
    """Injectable handler that counts calls and tracks lane concurrency."""

    def __init__(self, fail_first=0, retryable=True, delay=0.0):
        self.fail_first = fail_first
        self.retryable = retryable
        self.delay = delay
        self.calls = 0
        self.in_flight = 0
        self.max_in_flight = 0
        self._lock = threading.Lock()

    def __call__(self, kind, payload):
        from codevoice.providers import _DEFAULT_MOCKS

        with self._lock:
            self.calls += 1
            n = self.calls
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        try:
            if self.delay:
                time.sleep(self.delay)
            if n <= self.fail_first:
                raise ProviderError(kind, "TIMEOUT", "injected fault", retryable=self.retryable)
            return _DEFAULT_MOCKS[kind](kind, payload)
        finally:
            with self._lock:
                self.in_flight -= 1


def test_retry_absorbs_one_transient_fault():
    mock = CountingMock(fail_first=1)
    g = gateway(mocks={ProviderKind.CODEGEN: mock})
    out = g.generate_response("q", "", "", LanguageTag.EN)
    assert out.startswith("[mock:en]")
    assert mock.calls == 2


def test_retry_stops_after_second_fault():
    mock = CountingMock(fail_first=2)
    g = gateway(mocks={ProviderKind.CODEGEN: mock})
    with pytest.raises(ProviderError) as err:
        g.generate_response("q", "", "", LanguageTag.EN)
    assert err.value.code == "TIMEOUT"
    assert mock.calls == 2


def test_no_retry_on_permanent_fault():
    mock = CountingMock(fail_first=1, retryable=False)
    g = gateway(mocks={ProviderKind.CODEGEN: mock})
    with pytest.raises(ProviderError):
        g.generate_response("q", "", "", LanguageTag.EN)
    assert mock.calls == 1


def test_lane_limits_one_in_flight():
    mock = CountingMock(delay=0.003)
    g = gateway(
        mocks={
            ProviderKind.ASR_EN: mock,
            ProviderKind.ASR_INDIC: mock,
            ProviderKind.REFINER_LLM: mock,
        }
    )

    def work(i):
        if i % 3 == 0:
            g.transcribe(b"hello", "text/plain", LanguageTag.EN)
        elif i % 3 == 1:
            g.transcribe(b"hello", "text/plain", LanguageTag.TA)
        else:
            g.refine_llm("hello", "", LanguageTag.EN)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(18)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert mock.calls == 18
    assert mock.max_in_flight == 1


def test_wider_lane_allows_parallel_calls():
    mock = CountingMock(delay=0.01)
    g = ProviderGateway(
        mock_bindings(), lanes=[Lane("b", max_concurrent=3)],
        mocks={ProviderKind.CODEGEN: mock},
    )
    threads = [
        threading.Thread(target=g.generate_response, args=("q", "", "", LanguageTag.EN))
        for _ in range(9)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert mock.max_in_flight <= 3


def test_lane_rejects_zero_capacity():
    with pytest.raises(ValueError):
        Lane("a", max_concurrent=0)


def test_lane_gate_serves_fifo():
    gate = LaneGate(Lane("t"))
    gate.acquire()  # hold the lane so workers stack up
    order = []

    def worker(idx):
        gate.acquire()
        order.append(idx)
        gate.release()

    threads = []
    for i in range(5):
        t = threading.Thread(target=worker, args=(i,))
        t.start()
        threads.append(t)
        deadline = time.monotonic() + 2.0
        while len(gate._waiting) < i + 1:
            assert time.monotonic() < deadline, "worker never queued"
            time.sleep(0.001)
    gate.release()
    for t in threads:
        t.join(timeout=5)
    assert order == [0, 1, 2, 3, 4]


def remote_gateway(handler, kind=ProviderKind.CODEGEN, timeout=1.0, token=""):
    binding = ProviderBinding(
        kind, endpoint="http://provider.test/v1", timeout=timeout, auth_token=token
    )
    return ProviderGateway({kind: binding}, transport=httpx.MockTransport(handler))


def test_remote_request_shape_and_auth():
    seen = {}

    def handler(request):
        seen["body"] = request.read()
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json={"text": "answer text"})

    g = remote_gateway(handler, token="s3cr3t")
    out = g.generate_response("sum of array", "int sum;", "find the sum", LanguageTag.HI)
    assert out == "answer text"
    assert seen["auth"] == "Bearer s3cr3t"
    import json

    body = json.loads(seen["body"])
    assert body == {
        "task": "answer",
        "language": "hi",
        "query": "sum of array",
        "code": "int sum;",
        "problem": "find the sum",
    }


def test_remote_refiner_request_carries_goals():
    captured = {}

    def handler(request):
        import json

        captured.update(json.loads(request.read()))
        return httpx.Response(200, json={"text": "refined"})

    g = remote_gateway(handler, kind=ProviderKind.REFINER_LLM)
    g.refine_llm("some text", "int x;", LanguageTag.EN)
    assert captured["task"] == "refine"
    assert captured["goals"] == [
        "restore code terms",
        "fix phonetic distortions",
        "recover symbols",
        "disambiguate usage",
    ]


def test_remote_500_retried_once():
    hits = []

    def handler(request):
        hits.append(1)
        if len(hits) == 1:
            return httpx.Response(500, text="boom")
        return httpx.Response(200, json={"text": "recovered"})

    g = remote_gateway(handler)
    assert g.generate_response("q", "", "", LanguageTag.EN) == "recovered"
    assert len(hits) == 2


def test_remote_404_not_retried():
    hits = []

    def handler(request):
        hits.append(1)
        return httpx.Response(404, text="missing")

    g = remote_gateway(handler)
    with pytest.raises(ProviderError) as err:
        g.generate_response("q", "", "", LanguageTag.EN)
    assert err.value.code == "HTTP_STATUS"
    assert "404" in str(err.value)
    assert len(hits) == 1


def test_remote_timeout_classified():
    hits = []

    def handler(request):
        hits.append(1)
        raise httpx.ConnectTimeout("too slow")

    g = remote_gateway(handler, timeout=0.1)
    with pytest.raises(ProviderError) as err:
        g.generate_response("q", "", "", LanguageTag.EN)
    assert err.value.code == "TIMEOUT"
    assert len(hits) == 2  # one retry, then give up


def test_remote_empty_body_rejected():
    g = remote_gateway(lambda request: httpx.Response(200, content=b""))
    with pytest.raises(ProviderError) as err:
        g.generate_response("q", "", "", LanguageTag.EN)
    assert err.value.code == "BAD_RESPONSE"


def test_remote_empty_text_rejected():
    g = remote_gateway(lambda request: httpx.Response(200, json={"text": ""}))
    with pytest.raises(ProviderError) as err:
        g.generate_response("q", "", "", LanguageTag.EN)
    assert err.value.code == "BAD_RESPONSE"


def test_remote_tts_round_trip():
    blob = b"\x01\x02\x03tts"

    def handler(request):
        return httpx.Response(
            200,
            json={
                "audio_b64": base64.b64encode(blob).decode(),
                "media_type": "audio/ogg",
            },
        )

    g = remote_gateway(handler, kind=ProviderKind.TTS)
    audio, media_type = g.synthesize_speech("hello", LanguageTag.EN)
    assert audio == blob and media_type == "audio/ogg"


def test_remote_tts_bad_base64():
    g = remote_gateway(
        lambda request: httpx.Response(200, json={"audio_b64": "!!", "media_type": "audio/wav"}),
        kind=ProviderKind.TTS,
    )
    with pytest.raises(ProviderError) as err:
        g.synthesize_speech("hello", LanguageTag.EN)
    assert err.value.code == "BAD_RESPONSE"


def test_default_lane_assignment():
    assert ProviderBinding(ProviderKind.ASR_EN).lane == "a"
    assert ProviderBinding(ProviderKind.REFINER_LLM).lane == "a"
    assert ProviderBinding(ProviderKind.CODEGEN).lane == "b"
    assert ProviderBinding(ProviderKind.TTS).lane == "b"
    assert ProviderBinding(ProviderKind.TTS, lane="z").lane == "z"
