"""Rebuild the committed metric fixture: 96 cases, exactly 72 repaired.

The first 72 rows come from the invertible corpus generator. The last 24
corrupt a consonant into a different phonetic group, which the refiner
cannot map back, so they stay wrong by construction. Run from the repo
root; the output is committed under src/codevoice/data/fixtures/.
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from codevoice.evaluation import (  # noqa: E402
    _PLAIN_TEMPLATES,
    EvalMode,
    bundled_snippet_dir,
    gen_corpus,
    run_eval,
)
from codevoice.lexicon import SourceLanguage, extract_vocabulary  # noqa: E402
from codevoice.providers import LanguageTag  # noqa: E402
from codevoice.refine import RawTranscript, refine  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src/codevoice/data/fixtures/metric_checksum.jsonl"

CONSONANTS = "bcdfgjklmnpqrstvxz"


def break_consonant(rng, word):
    spots = [i for i, c in enumerate(word) if i >= 1 and c.lower() in CONSONANTS]
    if not spots:
        return None
    i = rng.choice(spots)
    repl = rng.choice([c for c in CONSONANTS if c != word[i].lower()])
    if word[i].isupper():
        repl = repl.upper()
    return word[:i] + repl + word[i + 1 :]


def draw_miss(rng, k, snippets):
    code, code_lang = rng.choice(snippets)
    vocab = extract_vocabulary(code, code_lang)
    idents = sorted(t for t in vocab.identifiers if len(t) >= 4)
    ident = rng.choice(idents)
    mangled = break_consonant(rng, ident)
    if mangled is None or vocab.contains_ci(mangled):
        return None
    truth = rng.choice(_PLAIN_TEMPLATES).format(ident=ident)
    corrupted = truth.replace(ident, mangled, 1)
    language = rng.choice(list(LanguageTag))
    if refine(RawTranscript(truth, language.value), code, code_lang).text != truth:
        return None
    # must stay broken: the refiner may not recover the original
    if refine(RawTranscript(corrupted, language.value), code, code_lang).text == truth:
        return None
    truth_tokens = set(truth.split())
    return {
        "id": f"case-{k:04d}",
        "language": language.value,
        "corrupted_transcript": corrupted,
        "code": code,
        "code_lang": code_lang.value,
        "expected_refined": truth,
        "expected_terms": sorted(t for t in vocab.identifiers if t in truth_tokens),
    }


def main():
    exact_path = gen_corpus(1009, 72, out_path="/tmp/fixture_exact.jsonl")
    lines = exact_path.read_text(encoding="utf-8").splitlines()

    snippets = []
    for path in sorted(bundled_snippet_dir().iterdir()):
        lang = SourceLanguage.C if path.suffix == ".c" else SourceLanguage.PYTHON
        snippets.append((path.read_text(encoding="utf-8"), lang))

    rng = random.Random(4242)
    k = 72
    while k < 96:
        doc = draw_miss(rng, k, snippets)
        if doc is None:
            continue
        lines.append(json.dumps(doc, sort_keys=True, ensure_ascii=False))
        k += 1

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")

    report = run_eval(OUT, mode=EvalMode.REFINE_ONLY)
    assert report.n_cases == 96, report.n_cases
    assert report.exact_count == 72, report.exact_count
    print(f"wrote {OUT}: {report.exact_count}/{report.n_cases} exact")


if __name__ == "__main__":
    main()
