import io
import itertools

import pytest
from hypothesis import given, strategies as st

from helpers import DOCUMENT
from vpajson.schema import render_json, word_to_doc
from vpajson.tokens import (
    COMMA,
    LBRACE,
    LBRACKET,
    PRIM,
    RBRACE,
    RBRACKET,
    Key,
    MalformedJson,
    NotWellMatched,
    PushdownAlphabet,
    SymbolStream,
    UnknownKey,
    abstract_lex,
    balance,
    depth,
    format_word,
    is_well_matched,
    parse_abstract,
)

KEYS = ["title", "keywords", "conference", "name", "year"]
ALPHA = PushdownAlphabet.json(KEYS)
DOC_WORD = "{ title: s # keywords: [ s # s # s ] # conference: { name: s # year: i } }"


def lex(text, alphabet=ALPHA, enums=()):
    return tuple(abstract_lex(text, alphabet, enums))


def test_document_abstraction():
    assert lex(DOCUMENT) == parse_abstract(DOC_WORD)


def test_empty_object():
    assert lex("{}") == (LBRACE, RBRACE)


@pytest.mark.parametrize("literal, prim", [("3.5", "n"), ("3", "i"), ("-0", "i"), ("1e3", "n"), ("-2.0E-1", "n")])
def test_integer_syntax_decides_number_class(literal, prim):
    assert lex('{"year": %s}' % literal) == (LBRACE, Key("year"), PRIM[prim], RBRACE)


def test_literals_and_strings():
    text = '{"title": [true, false, null, "x", "a\\"b"]}'
    assert format_word(lex(text)) == "{ title: [ true # false # null # s # s ] }"


def test_enum_literals_abstract_to_e():
    assert lex('{"year": 7}', enums=[7]) == (LBRACE, Key("year"), PRIM["e"], RBRACE)
    assert lex('{"year": "x"}', enums=["x"]) == (LBRACE, Key("year"), PRIM["e"], RBRACE)
    # 1 and true stay distinct even though they compare equal in Python
    assert lex('{"year": true}', enums=[1]) == (LBRACE, Key("year"), PRIM["true"], RBRACE)


def test_unknown_key():
    with pytest.raises(UnknownKey) as err:
        lex('{"nope": 1}')
    assert err.value.key == "nope"


def test_escaped_key_compares_after_unescaping():
    assert lex('{"ti\\u0074le": "x"}') == (LBRACE, Key("title"), PRIM["s"], RBRACE)


@pytest.mark.parametrize("text", ['{"title": "abc', '{"title": tru}', '{"title": @}', '{"title": 01x}'])
def test_malformed(text):
    with pytest.raises(MalformedJson):
        lex(text)


def test_lexer_reads_in_chunks():
    class Counting(io.StringIO):
        calls = 0

        def read(self, n=-1):
            assert n > 0, "the lexer must never ask for the whole input"
            Counting.calls += 1
            return super().read(n)

    stream = Counting(DOCUMENT)
    assert tuple(abstract_lex(stream, ALPHA, chunk_size=8)) == parse_abstract(DOC_WORD)
    assert Counting.calls > len(DOCUMENT) // 8


def test_symbol_stream_single_lookahead():
    s = SymbolStream(iter(parse_abstract("{ title: s }")))
    assert s.peek() == LBRACE and s.consumed == 0
    assert s.next() == LBRACE and s.consumed == 1
    assert s.peek() == Key("title")
    assert [s.next(), s.next(), s.next(), s.next()] == [Key("title"), PRIM["s"], RBRACE, None]
    assert s.consumed == 4


def test_balance_and_depth_examples():
    assert balance(()) == 0
    assert balance(parse_abstract("{ title: s")) == 1
    w = parse_abstract(DOC_WORD)
    assert balance(w) == 0 and is_well_matched(w)
    assert depth(w) == 2
    assert depth((LBRACE, RBRACE)) == 1
    assert depth(parse_abstract("{ title: [ { } ] }")) == 3
    assert not is_well_matched((LBRACE, RBRACKET))
    with pytest.raises(NotWellMatched):
        depth((LBRACE,))


def _brackets_oracle(word) -> bool:
    # recursive matcher: strip one outer pair around a balanced inside, then the rest
    pairs = {LBRACE: RBRACE, LBRACKET: RBRACKET}

    def parse(i):
        while i < len(word) and word[i] in pairs:
            close = pairs[word[i]]
            j = parse(i + 1)
            if j is None or j >= len(word) or word[j] != close:
                return None
            i = j + 1
        return i

    return parse(0) == len(word)


def test_well_matched_against_bracket_matcher():
    sigma = (LBRACE, RBRACE, LBRACKET, RBRACKET)
    for n in range(7):
        for w in itertools.product(sigma, repeat=n):
            assert is_well_matched(w) == _brackets_oracle(w), w


_values = st.recursive(
    st.sampled_from(["s", "i", "n", "true", "false", "null"]),
    lambda inner: st.one_of(
        st.lists(inner, max_size=3).map(lambda xs: ("arr", tuple(xs))),
        st.dictionaries(st.sampled_from(KEYS), inner, max_size=3).map(lambda d: ("obj", tuple(d.items()))),
    ),
    max_leaves=10,
)


def _word(v):
    if isinstance(v, str):
        return [PRIM[v]]
    tag, items = v
    out = [LBRACE if tag == "obj" else LBRACKET]
    for n, item in enumerate(items):
        if n:
            out.append(COMMA)
        if tag == "obj":
            out.append(Key(item[0]))
            item = item[1]
        out.extend(_word(item))
    out.append(RBRACE if tag == "obj" else RBRACKET)
    return out


@given(_values)
def test_prefix_and_suffix_balance(v):
    w = tuple(_word(v))
    assert is_well_matched(w)
    assert all(balance(w[:i]) >= 0 for i in range(len(w) + 1))
    assert all(balance(w[i:]) <= 0 for i in range(len(w) + 1))


@given(_values)
def test_relexing_concretization_is_identity(v):
    w = tuple(_word(v))
    text = render_json(word_to_doc(w, allow_duplicates=True))
    assert lex(text) == w
    assert len(w) <= len(text)
