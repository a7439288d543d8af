import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import helpers
from helpers import DOCUMENT, DOCUMENT_PERMUTED
from vpajson.automata import accepts
from vpajson.generate import GeneratorConfig, gen_invalid, gen_ordered, gen_valid, key_permutations
from vpajson.schema import Arr, Obj, doc_to_word, word_is_valid
from vpajson.tokens import SymbolStream, depth, parse_abstract
from vpajson.validate import MALFORMED, SCHEMA, start_states, validate_stream

NAMES = list(helpers.ORDERS)


def conference():
    return helpers.compiled("conference")


def test_document_and_permutation_accepted():
    v = conference().validator()
    assert v.validate_text(DOCUMENT).valid
    assert v.validate_text(DOCUMENT_PERMUTED).valid


def test_duplicate_key_rejected_at_the_comma():
    art = conference()
    verdict = art.validator().validate(parse_abstract("{ title: s # title: s }"))
    assert not verdict and verdict.kind == SCHEMA and verdict.index == 4
    assert not validate_stream(art.automaton, art.key_graph, parse_abstract("{ title: s # title: s }"))


@pytest.mark.parametrize("text, kind", [
    ("{ title: s", MALFORMED),
    ("s", SCHEMA),
    ("{ }", SCHEMA),
    ("{ title: s } { }", SCHEMA),
    ("{ title: s ]", MALFORMED),
    ("{ # }", MALFORMED),
    ("{ title: s # s }", MALFORMED),
])
def test_rejections(text, kind):
    verdict = conference().validator().validate(parse_abstract(text))
    assert not verdict.valid and verdict.kind == kind
    assert 1 <= verdict.index <= len(parse_abstract(text))


def test_empty_input_is_malformed():
    verdict = conference().validator().validate(())
    assert not verdict and verdict.kind == MALFORMED


def test_lexing_errors_become_verdicts():
    v = conference().validator()
    assert v.validate_text('{"nope": 1}').kind == SCHEMA
    assert v.validate_text('{"title": tru}').kind == MALFORMED


def test_start_states_lookup():
    g = helpers.compiled("conference_no_keywords").key_graph
    assert start_states(g, "title") == {0} == start_states(g, "name")
    assert start_states(g, "missing") == frozenset()


# -- agreement with the classical validator -------------------------------------------


def _corpus(name, random_invalid=300):
    g = helpers.grammar(name)
    cfg = GeneratorConfig(max_depth=3, seed=None)
    docs = [(d, True) for d in gen_valid(g, cfg)]
    docs += [(d, False) for d in gen_invalid(g, cfg)]
    docs += [(d, False) for d in itertools.islice(gen_invalid(g, GeneratorConfig(max_depth=3, seed=5)), random_invalid)]
    return docs


@pytest.mark.parametrize("name", NAMES)
def test_agrees_with_classical_validator(name):
    art = helpers.compiled(name)
    g = helpers.grammar(name)
    v = art.validator(reach=art.reach)
    for doc, expected in _corpus(name):
        w = doc_to_word(doc)
        assert word_is_valid(g, w) == expected
        assert v.validate(w).valid == expected, w


@pytest.mark.parametrize("name", NAMES)
def test_permutation_invariance(name):
    v = helpers.compiled(name).validator()
    rng = random.Random(1)
    for doc, expected in _corpus(name, random_invalid=50):
        w = doc_to_word(doc)
        if not expected and not _has_duplicates(doc):
            # schema rejections survive every reordering
            for p in key_permutations(doc, rng, samples=5):
                assert not v.validate(doc_to_word(p)).valid
        elif expected:
            for p in key_permutations(doc, rng):
                assert v.validate(doc_to_word(p)).valid
        assert v.validate(w).valid == expected


def _has_duplicates(doc):
    if isinstance(doc, Obj):
        keys = doc.keys()
        return len(set(keys)) < len(keys) or any(_has_duplicates(v) for _, v in doc.pairs)
    if isinstance(doc, Arr):
        return any(_has_duplicates(v) for v in doc.items)
    return False


@pytest.mark.parametrize("name", NAMES)
def test_sorted_documents_follow_the_automaton(name):
    art = helpers.compiled(name)
    g = helpers.grammar(name)
    v = art.validator()
    for doc, _ in _corpus(name, random_invalid=100):
        if _has_duplicates(doc):
            continue
        w = doc_to_word(gen_ordered(doc, g.alphabet))
        assert v.validate(w).valid == accepts(art.automaton, w)


@pytest.mark.parametrize("name", NAMES)
def test_fast_fail_keeps_verdicts(name):
    art = helpers.compiled(name)
    slow, fast = art.validator(), art.validator(fast_fail=True)
    for doc, _ in _corpus(name, random_invalid=100):
        w = doc_to_word(doc)
        a, b = slow.validate(w), fast.validate(w)
        assert a.valid == b.valid
        if not a.valid:
            assert b.index <= a.index


def test_tolerant_mode_keeps_verdicts():
    art = conference()
    strict, tolerant = art.validator(tolerant=False), art.validator(tolerant=True)
    for doc, _ in _corpus("conference", random_invalid=100):
        w = doc_to_word(doc)
        assert strict.validate(w).valid == tolerant.validate(w).valid


# -- resources ------------------------------------------------------------------------


class CountingSource:
    """Iterator that records how far the validator has pulled."""

    def __init__(self, word):
        self.word = word
        self.pulled = 0

    def __iter__(self):
        for x in self.word:
            self.pulled += 1
            yield x


def _check_resources(v, w):
    src = CountingSource(w)
    stream = SymbolStream(src)
    verdict = v.validate(stream)
    stats = verdict.stats
    # one symbol of lookahead at most
    assert src.pulled <= stats.consumed + 1
    if verdict.valid:
        assert stats.consumed == len(w)
        assert stats.max_stack == depth(w)
    else:
        assert stats.consumed <= len(w)
        assert stats.consumed == verdict.index
    return verdict


@pytest.mark.parametrize("name", NAMES)
def test_single_pass_and_stack_height(name):
    art = helpers.compiled(name)
    v = art.validator()
    for doc, _ in _corpus(name, random_invalid=100):
        _check_resources(v, doc_to_word(doc))


def test_early_rejection_stops_reading():
    w = parse_abstract("{ title: s # title: s # conference: { name: s # year: i } }")
    verdict = _check_resources(conference().validator(), w)
    assert verdict.stats.consumed == 4 < len(w)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.integers(0, 1 << 30))
def test_stack_height_equals_depth_on_deep_documents(d, seed):
    art = helpers.universe_artifact()
    doc = helpers.deep_document(random.Random(seed), list(art.alphabet.keys), d)
    w = doc_to_word(doc)
    assert depth(w) == d
    verdict = _check_resources(art.validator(), w)
    assert verdict.valid
    assert verdict.stats.max_stack == depth(w)
