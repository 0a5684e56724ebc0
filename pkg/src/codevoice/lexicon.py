"""Code vocabulary extraction and phonetic indexing.

Pulls identifier-shaped tokens out of submitted source code and indexes
them under Soundex-style keys so the transcript refiner can match words
the ASR heard against names that actually exist in the code.
"""

from __future__ import annotations

import keyword
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class SourceLanguage(str, Enum):
    C = "c"
    PYTHON = "python"
    UNKNOWN = "unknown"


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary""".split()
)

_PY_KEYWORDS = frozenset(keyword.kwlist)

# identifier-shaped prefixes that start a Python string literal
_PY_STRING_PREFIXES = frozenset({"r", "b", "u", "f", "rb", "br", "fr", "rf"})

# Soundex consonant classes; vowels plus H/W/Y code to 0 and are dropped
# after adjacent duplicates collapse.
_SOUNDEX_CODES = {}
for _letters, _code in (
    ("BFPV", "1"),
    ("CGJKQSXZ", "2"),
    ("DT", "3"),
    ("L", "4"),
    ("MN", "5"),
    ("R", "6"),
    ("AEIOUHWY", "0"),
):
    for _ch in _letters:
        _SOUNDEX_CODES[_ch] = _code


@dataclass(frozen=True)
class CodeVocabulary:
    """Immutable token vocabulary of one source submission.

    identifiers and keywords are disjoint; phonetic_index maps a phonetic
    key to every vocabulary token that collides on it; canonical_casing
    maps the lowercased form back to the spelling used in the code.
    """

    identifiers: frozenset[str] = frozenset()
    keywords: frozenset[str] = frozenset()
    phonetic_index: dict[str, frozenset[str]] = field(default_factory=dict)
    canonical_casing: dict[str, str] = field(default_factory=dict)

    def __contains__(self, token: str) -> bool:
        return token in self.identifiers or token in self.keywords

    def contains_ci(self, token: str) -> bool:
        """Case-insensitive membership."""
        return token.lower() in self.canonical_casing

    def canonical(self, token: str) -> str:
        """Spelling of the token as written in the code."""
        return self.canonical_casing[token.lower()]

    @property
    def tokens(self) -> frozenset[str]:
        return self.identifiers | self.keywords


def from_tokens(identifiers: Iterable[str], keywords: Iterable[str] = ()) -> CodeVocabulary:
    """Build a vocabulary directly from token lists (tests, synthetic corpora)."""
    return _assemble(list(identifiers), list(keywords))


def _assemble(identifiers: Sequence[str], keywords: Sequence[str]) -> CodeVocabulary:
    index: dict[str, set[str]] = {}
    casing: dict[str, str] = {}
    for tok in list(identifiers) + list(keywords):
        index.setdefault(phonetic_key(tok), set()).add(tok)
        casing.setdefault(tok.lower(), tok)
    return CodeVocabulary(
        identifiers=frozenset(identifiers),
        keywords=frozenset(keywords),
        phonetic_index={k: frozenset(v) for k, v in index.items()},
        canonical_casing=casing,
    )


def phonetic_key(token: str) -> str:
    """Soundex-style key under which sound-alike tokens collide.

    Only the first alphabetic segment is keyed (snake_case tails are
    handled by the refiner's join rule); digits anywhere in the token are
    appended verbatim. "sum" and "some" both key to "S5".
    """
    if not token:
        raise ValueError("phonetic_key requires a non-empty token")
    upper = token.upper()
    digits = "".join(c for c in upper if c in "0123456789")
    seg_match = re.search(r"[A-Z]+", upper)
    if seg_match is None:
        return digits
    seg = seg_match.group(0)
    codes = [_SOUNDEX_CODES[c] for c in seg[1:]]
    collapsed = [c for i, c in enumerate(codes) if i == 0 or codes[i - 1] != c]
    kept = [c for c in collapsed if c != "0"]
    return seg[0] + "".join(kept[:3]) + digits


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance between two sequences (characters or words)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                cur.append(prev[j - 1])
            else:
                cur.append(1 + min(prev[j - 1], prev[j], cur[-1]))
        prev = cur
    return prev[-1]


def normalized_distance(a: str, b: str) -> float:
    """Levenshtein distance divided by the longer length (0.0 for equal)."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def lookup_phonetic(vocab: CodeVocabulary, heard: str) -> list[str]:
    """Vocabulary tokens sharing the heard token's phonetic key.

    Ordered by ascending edit distance to the heard token (lowercased),
    ties broken lexicographically. Empty list when nothing collides.
    """
    candidates = vocab.phonetic_index.get(phonetic_key(heard))
    if not candidates:
        return []
    heard_lower = heard.lower()
    return sorted(candidates, key=lambda t: (levenshtein(heard_lower, t.lower()), t))


def extract_vocabulary(code: str, lang: SourceLanguage) -> CodeVocabulary:
    """Vocabulary of identifier-shaped tokens in the code.

    For C and Python the scan skips comments and string literals and
    separates language keywords from identifiers. The UNKNOWN fallback is
    a bare regex sweep (keywords empty, nothing stripped). Total: any
    scanner failure falls back to the UNKNOWN sweep for the whole input.
    """
    try:
        if lang is SourceLanguage.C:
            ordered = _scan_c(code)
            return _classify(ordered, _C_KEYWORDS)
        if lang is SourceLanguage.PYTHON:
            ordered = _scan_python(code)
            return _classify(ordered, _PY_KEYWORDS)
    except Exception:
        pass
    return _classify(_IDENT_RE.findall(code), frozenset())


def _classify(ordered_tokens: Sequence[str], keywords: frozenset[str]) -> CodeVocabulary:
    idents: list[str] = []
    kws: list[str] = []
    seen: set[str] = set()
    for tok in ordered_tokens:
        if tok in seen:
            continue
        seen.add(tok)
        (kws if tok in keywords else idents).append(tok)
    return _assemble(idents, kws)


def _scan_c(code: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if ch == "/" and i + 1 < n and code[i + 1] == "/":
            i = _skip_to_newline(code, i)
        elif ch == "/" and i + 1 < n and code[i + 1] == "*":
            end = code.find("*/", i + 2)
            i = n if end == -1 else end + 2
        elif ch in "\"'":
            i = _skip_quoted(code, i, ch, stop_at_newline=True)
        else:
            m = _IDENT_RE.match(code, i)
            if m:
                tokens.append(m.group(0))
                i = m.end()
            else:
                i += 1
    return tokens


def _scan_python(code: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if ch == "#":
            i = _skip_to_newline(code, i)
        elif ch in "\"'":
            i = _skip_py_string(code, i, ch)
        else:
            m = _IDENT_RE.match(code, i)
            if m:
                word = m.group(0)
                nxt = code[m.end()] if m.end() < n else ""
                if nxt in "\"'" and word.lower() in _PY_STRING_PREFIXES:
                    i = _skip_py_string(code, m.end(), nxt)
                else:
                    tokens.append(word)
                    i = m.end()
            else:
                i += 1
    return tokens


def _skip_to_newline(code: str, i: int) -> int:
    end = code.find("\n", i)
    return len(code) if end == -1 else end + 1


def _skip_quoted(code: str, i: int, quote: str, stop_at_newline: bool) -> int:
    # i points at the opening quote
    i += 1
    n = len(code)
    while i < n:
        ch = code[i]
        if ch == "\\":
            i += 2
        elif ch == quote:
            return i + 1
        elif ch == "\n" and stop_at_newline:
            return i + 1
        else:
            i += 1
    return n


def _skip_py_string(code: str, i: int, quote: str) -> int:
    if code.startswith(quote * 3, i):
        end = code.find(quote * 3, i + 3)
        return len(code) if end == -1 else end + 3
    return _skip_quoted(code, i, quote, stop_at_newline=True)


def detect_source_language(code: str) -> SourceLanguage:
    """Cheap C vs Python guess for submissions that carry no language tag."""
    py = 0
    py += 2 * len(re.findall(r"^\s*(?:def|class)\s+\w+.*:\s*$", code, re.M))
    py += 2 * len(re.findall(r"^\s*(?:import|from)\s+\w+", code, re.M))
    py += len(re.findall(r"^\s*(?:if|elif|else|for|while|try|with)\b.*:\s*$", code, re.M))
    c = 0
    c += 3 * len(re.findall(r"#\s*include\b", code))
    c += 2 * len(re.findall(r";\s*$", code, re.M))
    c += len(re.findall(r"[{}]", code))
    c += len(re.findall(r"\b(?:int|char|void|float|double|long|struct)\s+[A-Za-z_]", code))
    if py == c:
        return SourceLanguage.UNKNOWN
    return SourceLanguage.PYTHON if py > c else SourceLanguage.C
