"""Deterministic repair of ASR transcripts for spoken code questions.

Four rule passes run over the whitespace-token stream: spoken symbol
phrases become symbols, snake_case names said as "x underscore one" are
joined back together when the code declares them, known mishearings
("ask key") become their technical terms, and remaining words are
phonetically matched against the code's own vocabulary. Native-script
tokens are never touched. An optional LLM pass can polish the result;
rule output stands if the provider fails.

Every change is recorded as an Edit whose token span indexes the stream
as it existed after all earlier edits, so replaying the edit list over
the raw token stream reproduces the refined text.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .lexicon import (
    CodeVocabulary,
    SourceLanguage,
    extract_vocabulary,
    levenshtein,
    lookup_phonetic,
    normalized_distance,
)

# rule passes re-run until nothing changes; one repair can expose another
# (a phonetic fix completing a confusion phrase, a symbol enabling a join)
_MAX_ROUNDS = 8


class Script(Enum):
    LATIN = "latin"
    NATIVE = "native"


class EditRule(str, Enum):
    SYMBOL = "SYMBOL"
    JOIN = "JOIN"
    CONFUSION = "CONFUSION"
    PHONETIC = "PHONETIC"
    LLM = "LLM"


@dataclass(frozen=True)
class TranscriptToken:
    text: str
    script: Script


@dataclass(frozen=True)
class Edit:
    """One replacement over the token stream.

    span indexes the stream produced by all earlier edits in the list
    (sequential patch coordinates), so edit lists replay in order.
    """

    span: tuple[int, int]
    original: str
    replacement: str
    rule: EditRule


@dataclass(frozen=True)
class RawTranscript:
    text: str
    language: str
    provider_id: str = ""


@dataclass(frozen=True)
class RefinedTranscript:
    text: str
    edits: tuple[Edit, ...]
    source: RawTranscript
    notes: tuple[str, ...] = ()


_BUILTIN_SYMBOLS: Mapping[str, str] = {
    "underscore": "_",
    "dot": ".",
    "comma": ",",
    "semicolon": ";",
    "equals": "=",
    "equal to": "=",
    "double equals": "==",
    "plus": "+",
    "minus": "-",
    "star": "*",
    "open bracket": "(",
    "close bracket": ")",
    "open brace": "{",
    "close brace": "}",
}

_BUILTIN_CONFUSIONS: Mapping[str, str] = {
    "ask key": "ASCII",
}

_DEFAULT_PROTECTED = frozenset(
    "the a an of in on at is are was to do does it this that "
    "what why how when and or not be can will".split()
)


@dataclass(frozen=True)
class PhraseTable:
    """Spoken phrase -> replacement text, matched longest phrase first."""

    entries: Mapping[str, str]
    max_phrase_words: int = 3

    def __post_init__(self):
        for phrase, value in self.entries.items():
            words = phrase.split()
            if not 1 <= len(words) <= self.max_phrase_words:
                raise ValueError(
                    f"phrase {phrase!r} must be 1..{self.max_phrase_words} words"
                )
            if phrase != " ".join(words) or phrase != phrase.lower():
                raise ValueError(f"phrase {phrase!r} must be lowercase single-spaced")
            if not value:
                raise ValueError(f"phrase {phrase!r} maps to an empty replacement")

    def lengths_desc(self) -> list[int]:
        lens = {len(p.split()) for p in self.entries}
        return sorted(lens, reverse=True)


class SymbolTable(PhraseTable):
    @classmethod
    def builtin(cls) -> "SymbolTable":
        return cls(dict(_BUILTIN_SYMBOLS))

    @classmethod
    def from_file(cls, path: str | Path) -> "SymbolTable":
        merged = dict(_BUILTIN_SYMBOLS)
        merged.update(load_table_file(path))
        return cls(merged)


@dataclass(frozen=True)
class ConfusionTable(PhraseTable):
    max_phrase_words: int = 5

    @classmethod
    def builtin(cls) -> "ConfusionTable":
        return cls(dict(_BUILTIN_CONFUSIONS))

    @classmethod
    def from_file(cls, path: str | Path) -> "ConfusionTable":
        merged = dict(_BUILTIN_CONFUSIONS)
        merged.update(load_table_file(path))
        return cls(merged)


@dataclass(frozen=True)
class RefinementConfig:
    max_normalized_edit_distance: float = 0.34
    protected_words: frozenset[str] = _DEFAULT_PROTECTED
    llm_pass_enabled: bool = False


def load_table_file(path: str | Path) -> dict[str, str]:
    """Parse a phrase table: one 'spoken phrase<TAB>replacement' per line.

    Blank lines and '#' comment lines are skipped. Raises ValueError with
    the offending line number on malformed entries.
    """
    entries: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "\t" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'phrase<TAB>replacement'")
        phrase, _, value = stripped.partition("\t")
        phrase = " ".join(phrase.split()).lower()
        value = value.strip()
        if not phrase or not value:
            raise ValueError(f"{path}:{lineno}: empty phrase or replacement")
        entries[phrase] = value
    return entries


def script_of(token_text: str) -> Script:
    """LATIN when every code point is Basic Latin, NATIVE otherwise."""
    return Script.LATIN if all(ord(c) < 128 for c in token_text) else Script.NATIVE


def tokenize_transcript(text: str) -> list[TranscriptToken]:
    """Whitespace tokens with a per-token script class."""
    return [TranscriptToken(t, script_of(t)) for t in text.split()]


def detokenize(tokens: Sequence[TranscriptToken]) -> str:
    return " ".join(t.text for t in tokens)


def _splice_tokens(replacement: str) -> list[TranscriptToken]:
    return [TranscriptToken(t, script_of(t)) for t in replacement.split()]


def _replace_phrases(
    tokens: Sequence[TranscriptToken], table: PhraseTable, rule: EditRule
) -> tuple[list[TranscriptToken], list[Edit]]:
    """Longest-first, left-to-right phrase replacement on LATIN tokens.

    Replaced text is never re-matched within the pass.
    """
    out: list[TranscriptToken] = []
    edits: list[Edit] = []
    lengths = table.lengths_desc()
    i = 0
    while i < len(tokens):
        matched = False
        for n_words in lengths:
            if i + n_words > len(tokens):
                continue
            window = tokens[i : i + n_words]
            if any(t.script is not Script.LATIN for t in window):
                continue
            phrase = " ".join(t.text.lower() for t in window)
            replacement = table.entries.get(phrase)
            if replacement is None:
                continue
            original = " ".join(t.text for t in window)
            if replacement != original:
                start = len(out)
                spliced = _splice_tokens(replacement)
                edits.append(Edit((start, start + n_words), original, replacement, rule))
                out.extend(spliced)
            else:
                out.extend(window)
            i += n_words
            matched = True
            break
        if not matched:
            out.append(tokens[i])
            i += 1
    return out, edits


def normalize_symbols(
    tokens: Sequence[TranscriptToken], table: SymbolTable, vocab: CodeVocabulary
) -> tuple[list[TranscriptToken], list[Edit]]:
    """Spoken symbol phrases -> symbols, then join '_' runs into known names.

    The join fires only when prev + "_" + next is a vocabulary token
    (case-insensitive); the merged token takes the code's casing. Chained
    joins over one region extend a single JOIN edit.
    """
    out, edits = _replace_phrases(tokens, table, EditRule.SYMBOL)

    last_join_pos = -2
    i = 1
    while i < len(out) - 1:
        prev_tok, cur, nxt = out[i - 1], out[i], out[i + 1]
        if (
            cur.text == "_"
            and prev_tok.script is Script.LATIN
            and nxt.script is Script.LATIN
        ):
            combined = prev_tok.text + "_" + nxt.text
            if vocab.contains_ci(combined):
                canonical = vocab.canonical(combined)
                if last_join_pos == i - 1 and edits and edits[-1].rule is EditRule.JOIN:
                    prior = edits[-1]
                    edits[-1] = dataclasses.replace(
                        prior,
                        span=(prior.span[0], prior.span[1] + 2),
                        original=f"{prior.original} _ {nxt.text}",
                        replacement=canonical,
                    )
                else:
                    edits.append(
                        Edit(
                            (i - 1, i + 2),
                            f"{prev_tok.text} _ {nxt.text}",
                            canonical,
                            EditRule.JOIN,
                        )
                    )
                out[i - 1 : i + 2] = [TranscriptToken(canonical, Script.LATIN)]
                last_join_pos = i - 1
                continue
        i += 1
    return out, edits


def apply_confusions(
    tokens: Sequence[TranscriptToken], table: ConfusionTable
) -> tuple[list[TranscriptToken], list[Edit]]:
    """Fixed mishearing phrases -> technical terms ("ask key" -> "ASCII")."""
    return _replace_phrases(tokens, table, EditRule.CONFUSION)


def restore_code_terms(
    tokens: Sequence[TranscriptToken], vocab: CodeVocabulary, cfg: RefinementConfig
) -> tuple[list[TranscriptToken], list[Edit]]:
    """Phonetically repair words against the code's vocabulary.

    A token already in the vocabulary, protected, or native-script is
    left alone. A unique phonetic-key match replaces unconditionally (key
    equality is strong evidence); with several candidates the closest one
    must win strictly and sit within the edit-distance budget. Ties mean
    no edit.
    """
    out: list[TranscriptToken] = []
    edits: list[Edit] = []
    for tok in tokens:
        if (
            tok.script is Script.NATIVE
            or vocab.contains_ci(tok.text)
            or tok.text.lower() in cfg.protected_words
        ):
            out.append(tok)
            continue
        candidates = lookup_phonetic(vocab, tok.text)
        if not candidates:
            out.append(tok)
            continue
        heard = tok.text.lower()
        best = candidates[0]
        if len(candidates) > 1:
            runner_up = candidates[1]
            if levenshtein(heard, best.lower()) == levenshtein(heard, runner_up.lower()):
                out.append(tok)
                continue
            if normalized_distance(heard, best.lower()) > cfg.max_normalized_edit_distance:
                out.append(tok)
                continue
        canonical = vocab.canonical(best)
        edits.append(
            Edit((len(out), len(out) + 1), tok.text, canonical, EditRule.PHONETIC)
        )
        out.append(TranscriptToken(canonical, Script.LATIN))
    return out, edits


def refine(
    raw: RawTranscript,
    code: str,
    code_lang: SourceLanguage,
    cfg: Optional[RefinementConfig] = None,
    llm: Optional[Callable[[str, str], str]] = None,
    symbols: Optional[SymbolTable] = None,
    confusions: Optional[ConfusionTable] = None,
) -> RefinedTranscript:
    """Run the full rule pipeline, then the optional LLM polish pass."""
    cfg = cfg or RefinementConfig()
    symbols = symbols or SymbolTable.builtin()
    confusions = confusions or ConfusionTable.builtin()
    vocab = extract_vocabulary(code, code_lang)

    tokens = tokenize_transcript(raw.text)
    edits: list[Edit] = []
    for _ in range(_MAX_ROUNDS):
        round_edits: list[Edit] = []
        tokens, produced = normalize_symbols(tokens, symbols, vocab)
        round_edits.extend(produced)
        tokens, produced = apply_confusions(tokens, confusions)
        round_edits.extend(produced)
        tokens, produced = restore_code_terms(tokens, vocab, cfg)
        round_edits.extend(produced)
        if not round_edits:
            break
        edits.extend(round_edits)

    text = detokenize(tokens) if edits else raw.text
    notes: tuple[str, ...] = ()
    if cfg.llm_pass_enabled and llm is not None:
        try:
            stream_text = detokenize(tokens)
            polished = llm(text, code)
            if polished.strip() and polished != stream_text:
                edits.append(Edit((0, len(tokens)), stream_text, polished, EditRule.LLM))
                text = polished
        except Exception as exc:
            notes = (f"llm pass skipped: {exc}",)
    return RefinedTranscript(text=text, edits=tuple(edits), source=raw, notes=notes)


def apply_edits(raw_tokens: Sequence[str] | str, edits: Sequence[Edit]) -> str:
    """Replay an edit list over the raw token stream.

    Each edit's span is checked against the stream it applies to; a
    mismatch raises ValueError. Returns the reconstructed text.
    """
    seq = list(raw_tokens.split()) if isinstance(raw_tokens, str) else list(raw_tokens)
    for edit in edits:
        start, end = edit.span
        if not (0 <= start <= end <= len(seq)):
            raise ValueError(f"edit span {edit.span} outside stream of {len(seq)} tokens")
        if " ".join(seq[start:end]) != edit.original:
            raise ValueError(
                f"edit original {edit.original!r} does not match stream "
                f"slice {' '.join(seq[start:end])!r}"
            )
        seq[start:end] = edit.replacement.split()
    return " ".join(seq)
