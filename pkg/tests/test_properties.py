"""Generated-input invariants for the repair pipeline.

Four suites, a thousand cases each: repairing twice changes nothing,
native-script words pass through untouched, every replacement is grounded
in the code vocabulary or a lookup table, and the edit list replays into
the refined text.
"""

from hypothesis import given, settings, strategies as st

from codevoice.lexicon import SourceLanguage
from codevoice.refine import (
    RawTranscript,
    apply_edits,
    EditRule,
    refine,
    _BUILTIN_CONFUSIONS,
    _BUILTIN_SYMBOLS,
)

IDENT_POOL = [
    "sum", "total", "count", "buffer", "index", "value", "x_one",
    "my_var", "temp", "data", "node", "list_head", "ascii", "map", "mop",
]

FILLER_POOL = [
    "please", "explain", "the", "loop", "what", "is", "of", "this",
    "some", "cout", "buffet", "ask", "key", "vallue", "xone",
]

PHRASE_POOL = [
    "underscore", "dot", "equal to", "double equals", "ask key",
    "open bracket", "x underscore one", "my underscore var",
]

NATIVE_POOL = ["कोड", "मान", "கண", "mixकed"]


code_strategy = st.lists(
    st.sampled_from(IDENT_POOL), min_size=0, max_size=8, unique=True
).map(lambda names: "\n".join(f"int {n};" for n in names))

chunk = st.one_of(
    st.sampled_from(FILLER_POOL),
    st.sampled_from(PHRASE_POOL),
    st.sampled_from(IDENT_POOL),
    st.sampled_from(NATIVE_POOL),
)

transcript_strategy = st.lists(chunk, min_size=0, max_size=10).map(" ".join)

RULE_TABLES = {
    EditRule.SYMBOL: set(_BUILTIN_SYMBOLS.values()),
    EditRule.CONFUSION: set(_BUILTIN_CONFUSIONS.values()),
}


def run(text, code):
    return refine(RawTranscript(text, "en"), code, SourceLanguage.C)


def is_native(token):
    return any(ord(c) > 127 for c in token)


@settings(max_examples=1000, deadline=None)
@given(transcript_strategy, code_strategy)
def test_refine_is_idempotent(text, code):
    once = run(text, code)
    twice = run(once.text, code)
    assert twice.text == once.text


@settings(max_examples=1000, deadline=None)
@given(transcript_strategy, code_strategy)
def test_native_tokens_pass_through(text, code):
    result = run(text, code)
    assert [t for t in result.text.split() if is_native(t)] == [
        t for t in text.split() if is_native(t)
    ]
    for e in result.edits:
        assert not is_native(e.original)


@settings(max_examples=1000, deadline=None)
@given(transcript_strategy, code_strategy)
def test_replacements_are_grounded(text, code):
    from codevoice.lexicon import extract_vocabulary

    vocab_tokens = set(extract_vocabulary(code, SourceLanguage.C).tokens)
    result = run(text, code)
    for e in result.edits:
        if e.rule in (EditRule.PHONETIC, EditRule.JOIN):
            assert e.replacement in vocab_tokens
        else:
            assert e.replacement in RULE_TABLES[e.rule]


@settings(max_examples=1000, deadline=None)
@given(transcript_strategy, code_strategy)
def test_edit_list_replays_to_refined_text(text, code):
    result = run(text, code)
    if result.edits:
        assert apply_edits(text, result.edits) == result.text
    else:
        assert result.text == text
