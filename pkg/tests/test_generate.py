import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import helpers
from helpers import DOCUMENT, DOCUMENT_PERMUTED
from vpajson.generate import (
    Deviation,
    GeneratorConfig,
    NoValidDocument,
    gen_deviation,
    gen_invalid,
    gen_ordered,
    gen_valid,
    permute_objects,
)
from vpajson.schema import (
    Arr,
    Grammar,
    Obj,
    Object,
    And,
    Primitive,
    classical_validate,
    doc_to_word,
    is_document,
    universal_grammar,
    word_is_valid,
    word_to_doc,
)
from vpajson.tokens import PRIMITIVES, PushdownAlphabet, abstract_lex, depth

NAMES = list(helpers.ORDERS)


def _doc(text, name="conference"):
    return word_to_doc(tuple(abstract_lex(text, helpers.grammar(name).alphabet)))


def test_config_rejects_zero_depth():
    with pytest.raises(ValueError):
        GeneratorConfig(max_depth=0)


@pytest.mark.parametrize("d, count", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3)])
def test_recursive_list_exhaustive_counts(d, count):
    # each extra level of nesting costs an array and an object: depth 1 + 2n
    docs = list(gen_valid(helpers.grammar("recursive_list"), GeneratorConfig(max_depth=d, seed=None)))
    assert len(docs) == count == len(set(docs))
    assert all(classical_validate(helpers.grammar("recursive_list"), x) for x in docs)
    assert Obj([("name", "s")]) in docs


def test_contradiction_has_no_document():
    g = Grammar(
        {"S": (And(("A", "B")),), "A": (Object((("k", "I"),)),), "B": (Object((("k", "T"),)),),
         "I": (Primitive("i"),), "T": (Primitive("s"),)},
        ("S",),
        PushdownAlphabet.json(["k"]),
    )
    with pytest.raises(NoValidDocument):
        next(gen_valid(g, GeneratorConfig(max_depth=3, seed=None)))
    with pytest.raises(NoValidDocument):
        next(gen_valid(g, GeneratorConfig(max_depth=3, seed=0)))


@pytest.mark.parametrize("name", NAMES)
def test_random_valid_documents_are_valid(name):
    g = helpers.grammar(name)
    for doc in itertools.islice(gen_valid(g, GeneratorConfig(max_depth=3, seed=0)), 300):
        assert is_document(g, doc) and depth(doc_to_word(doc)) <= 3


@pytest.mark.parametrize("name", NAMES)
def test_random_invalid_documents_are_invalid(name):
    g = helpers.grammar(name)
    for doc in itertools.islice(gen_invalid(g, GeneratorConfig(max_depth=3, seed=0)), 1000):
        w = doc_to_word(doc)
        assert not word_is_valid(g, w) and depth(w) <= 3


def test_wrong_primitive_on_year():
    g = helpers.grammar("conference")
    docs = list(gen_deviation(g, Deviation.WRONG_PRIMITIVE, GeneratorConfig(max_depth=2, seed=None)))
    year_s = [d for d in docs if dict(dict(d.pairs)["conference"].pairs).get("year") == "s"]
    assert year_s and all(not classical_validate(g, d) for d in docs)


def test_duplicate_key_on_universal_grammar():
    g = universal_grammar(PushdownAlphabet.json(["a", "b"]))
    cfg = GeneratorConfig(max_depth=2, seed=3)
    docs = list(itertools.islice(gen_deviation(g, Deviation.DUPLICATE_KEY, cfg), 50))
    assert docs
    for d in docs:
        assert not word_is_valid(g, doc_to_word(d))


@pytest.mark.parametrize("kind", list(Deviation))
def test_every_deviation_kind_produces_rejected_documents(kind):
    # the conference arrays take any length, so counts are exercised on the fixed-size list
    g = helpers.grammar("recursive_list" if kind is Deviation.WRONG_ELEMENT_COUNT else "conference")
    docs = list(itertools.islice(gen_deviation(g, kind, GeneratorConfig(max_depth=3, seed=None)), 200))
    assert docs
    assert not any(word_is_valid(g, doc_to_word(d)) for d in docs)


def test_determinism():
    g = helpers.grammar("conference")
    for make in (gen_valid, gen_invalid):
        a = list(itertools.islice(make(g, GeneratorConfig(max_depth=3, seed=42)), 50))
        b = list(itertools.islice(make(g, GeneratorConfig(max_depth=3, seed=42)), 50))
        c = list(itertools.islice(make(g, GeneratorConfig(max_depth=3, seed=43)), 50))
        assert a == b and a != c


# -- exhaustive completeness ----------------------------------------------------------

_PRIM_NAMES = [p.name for p in PRIMITIVES]


def _values(d, keys):
    """Every abstract value of depth <= d (arrays up to 3 items, objects over ``keys``)."""
    out = list(_PRIM_NAMES)
    if d == 0:
        return out
    inner = _values(d - 1, keys)
    for n in range(4):
        out += [Arr(items) for items in itertools.product(inner, repeat=n)]
    for n in range(len(keys) + 1):
        for subset in itertools.combinations(keys, n):
            out += [Obj(zip(subset, vals)) for vals in itertools.product(inner, repeat=n)]
    return out


def test_all_types_exhaustive_matches_brute_force():
    g = helpers.grammar("all_types")
    generated = set(gen_valid(g, GeneratorConfig(max_depth=2, seed=None)))
    # the schema is a single object with independent required keys, so valid
    # documents are products of per-key choices: filter each key over every value
    # of depth <= 1 by substituting it into one known document
    base = next(iter(sorted(generated, key=repr)))
    pool = _values(1, ["inner"])
    per_key = {}
    for k, _ in base.pairs:
        per_key[k] = [v for v in pool if classical_validate(g, Obj((kk, v if kk == k else vv) for kk, vv in base.pairs))]
    brute = {Obj(zip(per_key, vals)) for vals in itertools.product(*per_key.values())}
    assert {gen_ordered(d, g.alphabet) for d in generated} == {gen_ordered(d, g.alphabet) for d in brute}
    assert len(generated) == 16


# -- ordering -------------------------------------------------------------------------


def test_ordering_the_permuted_document():
    g = helpers.grammar("conference")
    assert gen_ordered(_doc(DOCUMENT_PERMUTED), g.alphabet) == _doc(DOCUMENT)
    assert gen_ordered(_doc(DOCUMENT), g.alphabet) == _doc(DOCUMENT)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 1 << 30))
def test_sort_after_permute_is_sort(seed):
    g = helpers.grammar("conference")
    rng = random.Random(seed)
    doc = next(gen_valid(g, GeneratorConfig(max_depth=3, seed=seed)))
    once = gen_ordered(doc, g.alphabet)
    assert gen_ordered(permute_objects(doc, rng), g.alphabet) == once
    assert gen_ordered(once, g.alphabet) == once
