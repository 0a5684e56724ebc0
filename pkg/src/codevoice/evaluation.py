"""Offline evaluation: exact match, term recovery, WER, corpus generation.

Corpora are newline-delimited JSON cases. A case pairs a corrupted
transcript with the code it was spoken about and the expected repaired
text; metrics are computed with exact rational arithmetic and rendered
to fixed decimal places so reports are byte-reproducible.
"""

from __future__ import annotations

import json
import random
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from .lexicon import SourceLanguage, extract_vocabulary, levenshtein
from .orchestrator import Orchestrator
from .providers import LanguageTag, ProviderGateway, mock_bindings
from .refine import ConfusionTable, RawTranscript, RefinementConfig, SymbolTable, refine


class CorpusError(Exception):
    pass


class EvalMode(str, Enum):
    REFINE_ONLY = "refine"
    FULL_MOCK = "full"


@dataclass(frozen=True)
class EvalCase:
    id: str
    language: LanguageTag
    corrupted_transcript: str
    code: str
    code_lang: SourceLanguage
    expected_refined: str
    expected_terms: tuple[str, ...]


@dataclass
class CaseResult:
    case_id: str
    language: str
    exact: bool
    wer_before: float
    wer_after: float
    terms_expected: int
    terms_found: int
    refined: str
    pipeline_ok: Optional[bool] = None
    response_text: Optional[str] = None


@dataclass
class EvalReport:
    mode: EvalMode
    n_cases: int
    exact_count: int
    exact_match_rate: Fraction
    term_recovery_rate: Fraction
    mean_wer_before: float
    mean_wer_after: float
    rows: list[CaseResult]


def wer(reference: str, hypothesis: str) -> float:
    """Word-level edit distance over the reference word count (floor 1)."""
    ref = reference.split()
    hyp = hypothesis.split()
    return levenshtein(ref, hyp) / max(1, len(ref))


def _normalize(text: str) -> str:
    return " ".join(text.split())


_REQUIRED_FIELDS = (
    "id",
    "language",
    "corrupted_transcript",
    "code",
    "code_lang",
    "expected_refined",
    "expected_terms",
)


def load_corpus(path: str | Path) -> list[EvalCase]:
    cases: list[EvalCase] = []
    seen_ids: set[str] = set()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except ValueError:
            raise CorpusError(f"{path}:{lineno}: invalid JSON") from None
        if not isinstance(doc, dict):
            raise CorpusError(f"{path}:{lineno}: case must be a JSON object")
        missing = [k for k in _REQUIRED_FIELDS if k not in doc]
        if missing:
            raise CorpusError(f"{path}:{lineno}: missing fields {missing}")
        try:
            language = LanguageTag.parse(doc["language"])
        except ValueError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
        try:
            code_lang = SourceLanguage(doc["code_lang"])
        except ValueError:
            raise CorpusError(f"{path}:{lineno}: unknown code_lang {doc['code_lang']!r}") from None
        terms = doc["expected_terms"]
        if not isinstance(terms, list) or not all(isinstance(t, str) for t in terms):
            raise CorpusError(f"{path}:{lineno}: expected_terms must be a string list")
        refined_tokens = set(doc["expected_refined"].split())
        stray = [t for t in terms if t not in refined_tokens]
        if stray:
            raise CorpusError(f"{path}:{lineno}: terms {stray} not in expected_refined")
        if doc["id"] in seen_ids:
            raise CorpusError(f"{path}:{lineno}: duplicate case id {doc['id']!r}")
        seen_ids.add(doc["id"])
        cases.append(
            EvalCase(
                id=doc["id"],
                language=language,
                corrupted_transcript=doc["corrupted_transcript"],
                code=doc["code"],
                code_lang=code_lang,
                expected_refined=doc["expected_refined"],
                expected_terms=tuple(terms),
            )
        )
    if not cases:
        raise CorpusError(f"{path}: corpus has no cases")
    return cases


def run_eval(
    corpus_path: str | Path,
    mode: EvalMode = EvalMode.REFINE_ONLY,
    cfg: Optional[RefinementConfig] = None,
    symbols: Optional[SymbolTable] = None,
    confusions: Optional[ConfusionTable] = None,
) -> EvalReport:
    cases = sorted(load_corpus(corpus_path), key=lambda c: c.id)
    rows: list[CaseResult] = []
    for case in cases:
        refined = refine(
            RawTranscript(case.corrupted_transcript, case.language.value),
            case.code,
            case.code_lang,
            cfg=cfg,
            symbols=symbols,
            confusions=confusions,
        ).text
        refined_tokens = set(refined.split())
        rows.append(
            CaseResult(
                case_id=case.id,
                language=case.language.value,
                exact=_normalize(refined) == _normalize(case.expected_refined),
                wer_before=wer(case.expected_refined, case.corrupted_transcript),
                wer_after=wer(case.expected_refined, refined),
                terms_expected=len(case.expected_terms),
                terms_found=sum(1 for t in case.expected_terms if t in refined_tokens),
                refined=refined,
            )
        )
    if mode is EvalMode.FULL_MOCK:
        _drive_mock_pipeline({c.id: c for c in cases}, rows)

    n = len(rows)
    exact_count = sum(1 for r in rows if r.exact)
    total_terms = sum(r.terms_expected for r in rows)
    found_terms = sum(r.terms_found for r in rows)
    return EvalReport(
        mode=mode,
        n_cases=n,
        exact_count=exact_count,
        exact_match_rate=Fraction(exact_count, n),
        term_recovery_rate=Fraction(found_terms, total_terms) if total_terms else Fraction(1),
        mean_wer_before=sum(r.wer_before for r in rows) / n,
        mean_wer_after=sum(r.wer_after for r in rows) / n,
        rows=rows,
    )


def _drive_mock_pipeline(cases: dict, rows: list[CaseResult]):
    gateway = ProviderGateway(mock_bindings())
    with tempfile.TemporaryDirectory(prefix="codevoice-eval-") as td:
        orch = Orchestrator(gateway, Path(td), workers=4)
        orch.start()
        try:
            task_ids = {}
            for row in rows:
                case = cases[row.case_id]
                task_ids[row.case_id] = orch.submit(
                    case.language,
                    case.corrupted_transcript.encode("utf-8"),
                    "text/plain",
                    case.code,
                    "",
                )
            deadline = time.monotonic() + 60
            for row in rows:
                snap = orch.poll(task_ids[row.case_id])
                while snap.state not in ("SUCCEEDED", "FAILED"):
                    if time.monotonic() > deadline:
                        raise RuntimeError("mock pipeline stalled")
                    time.sleep(0.005)
                    snap = orch.poll(task_ids[row.case_id])
                row.pipeline_ok = (
                    snap.state == "SUCCEEDED" and snap.refined_transcript == row.refined
                )
                row.response_text = snap.response_text
        finally:
            orch.stop()
            gateway.close()


def render_rate(value: Fraction) -> str:
    """Exact 4-decimal rendering of a rational rate."""
    scaled = round(value * 10000)
    return f"{scaled // 10000}.{scaled % 10000:04d}"


def _report_doc(report: EvalReport) -> dict:
    return {
        "mode": report.mode.value,
        "n_cases": report.n_cases,
        "exact_count": report.exact_count,
        "exact_match_rate": render_rate(report.exact_match_rate),
        "term_recovery_rate": render_rate(report.term_recovery_rate),
        "mean_wer_before": f"{report.mean_wer_before:.6f}",
        "mean_wer_after": f"{report.mean_wer_after:.6f}",
        "cases": [
            {
                "id": r.case_id,
                "language": r.language,
                "exact": r.exact,
                "wer_before": f"{r.wer_before:.6f}",
                "wer_after": f"{r.wer_after:.6f}",
                "terms_expected": r.terms_expected,
                "terms_found": r.terms_found,
                "pipeline_ok": r.pipeline_ok,
            }
            for r in report.rows
        ],
    }


def write_report(report: EvalReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json, report.txt, and per_case.csv; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / "report.json",
        "text": out / "report.txt",
        "csv": out / "per_case.csv",
    }
    doc = _report_doc(report)
    paths["json"].write_text(
        json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )

    lines = [
        ("mode", report.mode.value),
        ("cases", str(report.n_cases)),
        ("exact", str(report.exact_count)),
        ("exact_match_rate", render_rate(report.exact_match_rate)),
        ("term_recovery_rate", render_rate(report.term_recovery_rate)),
        ("mean_wer_before", f"{report.mean_wer_before:.6f}"),
        ("mean_wer_after", f"{report.mean_wer_after:.6f}"),
    ]
    if report.mode is EvalMode.FULL_MOCK:
        ok = sum(1 for r in report.rows if r.pipeline_ok)
        lines.append(("pipeline_ok", f"{ok}/{report.n_cases}"))
    width = max(len(k) for k, _ in lines)
    paths["text"].write_text(
        "".join(f"{k.ljust(width)}  {v}\n" for k, v in lines), encoding="utf-8"
    )

    import csv

    with open(paths["csv"], "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            ["id", "language", "exact", "wer_before", "wer_after",
             "terms_expected", "terms_found", "pipeline_ok"]
        )
        for r in report.rows:
            writer.writerow(
                [
                    r.case_id,
                    r.language,
                    int(r.exact),
                    f"{r.wer_before:.6f}",
                    f"{r.wer_after:.6f}",
                    r.terms_expected,
                    r.terms_found,
                    "" if r.pipeline_ok is None else int(r.pipeline_ok),
                ]
            )
    return paths


# ---- corpus generation

_PLAIN_TEMPLATES = (
    "what is {ident} in this code",
    "why does {ident} look wrong here",
    "how do I print {ident} after the loop",
    "can you explain {ident} to me",
    "where should {ident} be set first",
)

_ASCII_TEMPLATES = (
    "what is the ASCII of {ident}",
    "print the ASCII value of {ident}",
)

_EQUALS_TEMPLATES = (
    "why does {ident} == 0 fail",
    "check whether {ident} == limit holds",
)

_VOWELS = "aeiou"


def _swap_vowel(rng: random.Random, word: str) -> Optional[str]:
    # position 0 is the retained key letter, so only later vowels are safe
    spots = [i for i, c in enumerate(word) if i >= 1 and c.lower() in _VOWELS]
    if not spots:
        return None
    i = rng.choice(spots)
    options = [v for v in _VOWELS if v != word[i].lower()]
    repl = rng.choice(options)
    if word[i].isupper():
        repl = repl.upper()
    return word[:i] + repl + word[i + 1 :]


def _verbalize_underscore(rng: random.Random, word: str) -> Optional[str]:
    spots = [i for i, c in enumerate(word) if c == "_" and 0 < i < len(word) - 1]
    if not spots:
        return None
    i = rng.choice(spots)
    return f"{word[:i]} underscore {word[i + 1:]}"


def bundled_snippet_dir() -> Path:
    return Path(str(resources.files("codevoice").joinpath("data/snippets")))


def bundled_fixture_path() -> Path:
    return Path(str(resources.files("codevoice").joinpath("data/fixtures/metric_checksum.jsonl")))


def gen_corpus(
    seed: int, n: int, code_dir: Optional[str | Path] = None, out_path: str | Path = "corpus.jsonl"
) -> Path:
    """Deterministically corrupt known-good transcripts into eval cases.

    Every case is verified invertible: the engine maps the corrupted text
    back to the stored ground truth, and the ground truth is already a
    fixed point of the engine.
    """
    if n < 1:
        raise ValueError("corpus size must be at least 1")
    rng = random.Random(seed)
    src = Path(code_dir) if code_dir else bundled_snippet_dir()
    snippets = []
    for path in sorted(src.iterdir()):
        if path.suffix == ".c":
            snippets.append((path.read_text(encoding="utf-8"), SourceLanguage.C))
        elif path.suffix == ".py":
            snippets.append((path.read_text(encoding="utf-8"), SourceLanguage.PYTHON))
    if not snippets:
        raise CorpusError(f"{src}: no .c or .py snippets found")

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for k in range(n):
        for _ in range(300):
            case = _draw_case(rng, k, snippets)
            if case is not None:
                lines.append(json.dumps(case, sort_keys=True, ensure_ascii=False))
                break
        else:
            raise RuntimeError(f"no invertible corruption found for case {k}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def _draw_case(rng: random.Random, k: int, snippets: list) -> Optional[dict]:
    code, code_lang = rng.choice(snippets)
    vocab = extract_vocabulary(code, code_lang)
    idents = sorted(t for t in vocab.identifiers if len(t) >= 3)
    if not idents:
        return None
    ident = rng.choice(idents)
    style = rng.choice(("vowel", "vowel", "underscore", "equals", "askkey"))

    if style == "underscore":
        spoken = _verbalize_underscore(rng, ident)
        if spoken is None:
            return None
        truth = rng.choice(_PLAIN_TEMPLATES).format(ident=ident)
        corrupted = truth.replace(ident, spoken, 1)
    elif style == "equals":
        truth = rng.choice(_EQUALS_TEMPLATES).format(ident=ident)
        corrupted = truth.replace("==", "double equals", 1)
    elif style == "askkey":
        truth = rng.choice(_ASCII_TEMPLATES).format(ident=ident)
        corrupted = truth.replace("ASCII", "ask key", 1)
    else:
        mangled = _swap_vowel(rng, ident)
        if mangled is None or vocab.contains_ci(mangled):
            return None
        truth = rng.choice(_PLAIN_TEMPLATES).format(ident=ident)
        corrupted = truth.replace(ident, mangled, 1)

    if corrupted == truth:
        return None
    language = rng.choice(list(LanguageTag))
    raw = RawTranscript(corrupted, language.value)
    if refine(raw, code, code_lang).text != truth:
        return None
    if refine(RawTranscript(truth, language.value), code, code_lang).text != truth:
        return None
    truth_tokens = set(truth.split())
    terms = sorted(t for t in vocab.identifiers if t in truth_tokens)
    return {
        "id": f"case-{k:04d}",
        "language": language.value,
        "corrupted_transcript": corrupted,
        "code": code,
        "code_lang": code_lang.value,
        "expected_refined": truth,
        "expected_terms": terms,
    }
