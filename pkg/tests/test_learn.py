import itertools
import random

import pytest

import helpers
from helpers import DOCUMENT
from vpajson.automata import OneSevpa, accepts, is_one_sevpa
from vpajson.generate import GeneratorConfig, gen_invalid, gen_valid, key_permutations
from vpajson.learn import ObservationTable, Teacher, TeacherConfig, learn_one_sevpa
from vpajson.schema import (
    Arr,
    MalformedDocument,
    Obj,
    doc_to_word,
    load_json_schema,
    satisfies,
    word_is_valid,
    word_to_doc,
)
from vpajson.tokens import COMMA, LBRACE, PRIM, RBRACE, Key, abstract_lex

NAMES = list(helpers.ORDERS)


def test_membership_examples():
    t = Teacher(helpers.grammar("conference"))
    assert t.member(tuple(abstract_lex(DOCUMENT, t.alphabet)))
    assert not t.member(())
    # only key-sorted documents belong to the learned language
    assert not t.member(tuple(abstract_lex('{"conference": {"name": "x", "year": 1}, "title": "t"}', t.alphabet)))
    assert t.member(tuple(abstract_lex('{"title": "t", "conference": {"name": "x", "year": 1}}', t.alphabet)))


def test_membership_agrees_with_semantics_on_random_words():
    g = helpers.grammar("conference_no_keywords")
    t = Teacher(g)
    rng = random.Random(4)
    sigma = g.alphabet.symbols
    checked = 0
    for _ in range(1000):
        if rng.random() < 0.5:
            word = tuple(rng.choice(sigma) for _ in range(rng.randrange(1, 12)))
        else:
            # mutate a valid document word in one position
            doc = next(gen_valid(g, GeneratorConfig(max_depth=2, seed=rng.randrange(1 << 20))))
            word = list(doc_to_word(doc))
            word[rng.randrange(len(word))] = rng.choice(sigma)
            word = tuple(word)
        try:
            doc = word_to_doc(word)
        except MalformedDocument:
            assert not t.member(word)
            continue
        sorted_keys = _keys_sorted(doc, g.alphabet)
        want = sorted_keys and any(satisfies(g, ax, doc) for ax in g.axioms)
        assert t.member(word) == bool(want)
        checked += 1
    assert checked > 100


def _keys_sorted(doc, alphabet):
    if isinstance(doc, Obj):
        ranks = [alphabet.key_rank(k) for k in doc.keys()]
        return ranks == sorted(set(ranks)) and all(_keys_sorted(v, alphabet) for _, v in doc.pairs)
    if isinstance(doc, Arr):
        return all(_keys_sorted(v, alphabet) for v in doc.items)
    return True


def test_overgeneral_hypothesis_gets_a_counterexample():
    g = helpers.grammar("recursive_list")
    t = Teacher(g)
    alpha = g.alphabet
    di = {(0, a): 0 for a in alpha.internals}
    dr = {(0, alpha.match(c), (0, c)): 0 for c in alpha.calls}
    everything = OneSevpa(alpha, [0], 0, [0], di, dr)
    word, check = t.equivalence(everything)
    assert check == 1
    assert accepts(everything, word) and not t.member(word)


def test_compiled_automaton_passes_equivalence():
    for name in ("conference_no_keywords", "recursive_list"):
        sevpa = helpers.compiled(name).automaton
        assert Teacher(helpers.grammar(name)).equivalence(sevpa) is None


class _NoCorpusTeacher(Teacher):
    """Skips the document sweeps so only the initial-loop and key-graph checks run."""

    def corpus(self):
        return [], []


def test_repeated_key_path_is_caught_by_the_key_graph_check():
    g = load_json_schema({"type": "object", "properties": {"k1": {"type": "string"}},
                          "required": ["k1"], "additionalProperties": False})
    alpha = g.alphabet
    # accepts { k1 s (# k1 s)* }, plus the sink for everything else
    di = {(0, Key("k1")): 1, (1, PRIM["s"]): 2, (2, COMMA): 0}
    dr = {(2, RBRACE, (0, LBRACE)): 3}
    looping = OneSevpa(alpha, [0, 1, 2, 3], 0, [3], di, dr)
    t = _NoCorpusTeacher(g)
    word, check = t.equivalence(looping)
    assert check == 4
    assert accepts(looping, word) and not t.member(word) and not word_is_valid(g, word)


def test_single_pair_schema_is_learned_exactly():
    g = load_json_schema({"type": "object", "properties": {"k1": {"type": "string"}},
                          "required": ["k1"], "additionalProperties": False})
    result = learn_one_sevpa(Teacher(g))
    assert not result.incomplete
    sigma = g.alphabet.symbols
    target = (LBRACE, Key("k1"), PRIM["s"], RBRACE)
    for n in range(7):
        for w in itertools.product(sigma, repeat=n):
            assert accepts(result.automaton, w) == (w == target)


@pytest.mark.parametrize("name", NAMES)
def test_learning_invariants(name):
    result, art = helpers.learned(name, 3)
    assert not result.incomplete
    assert is_one_sevpa(result.hypothesis) and is_one_sevpa(result.automaton)
    # one new state at least per counterexample
    sizes = result.states_per_round
    assert all(a < b for a, b in zip(sizes, sizes[1:]))
    assert len(result.counterexamples) == result.rounds - 1
    t = Teacher(helpers.grammar(name))
    for c in result.counterexamples:
        assert c.member == t.member(c.word) != c.hypothesis_accepts
    # learned size matches the compiled minimal automaton
    assert len(result.automaton.states) == len(helpers.compiled(name).automaton.states)
    report = result.report()
    assert report["rounds"] == result.rounds and report["membership_queries"] > 0


@pytest.mark.parametrize("name", NAMES)
def test_learned_artifact_agrees_with_classical_validator(name):
    _, art = helpers.learned(name, 3)
    g = helpers.grammar(name)
    v = art.validator()
    rng = random.Random(9)
    cfg = GeneratorConfig(max_depth=3, seed=None)
    for doc in gen_valid(g, cfg):
        for p in key_permutations(doc, rng, samples=5):
            assert v.validate(doc_to_word(p)).valid
    for doc in itertools.chain(gen_invalid(g, cfg), itertools.islice(gen_invalid(g, GeneratorConfig(3, seed=2)), 300)):
        assert not v.validate(doc_to_word(doc)).valid


def test_random_teacher_learns_recursive_list():
    t = Teacher(helpers.grammar("recursive_list"), TeacherConfig(max_depth=3, exhaustive=False, per_depth=40, seed=1))
    result = learn_one_sevpa(t)
    assert not result.incomplete
    assert len(result.automaton.states) == len(helpers.compiled("recursive_list").automaton.states)


def test_round_budget_marks_result_incomplete():
    t = Teacher(helpers.grammar("conference"))
    result = learn_one_sevpa(t, max_rounds=2)
    assert result.incomplete and result.rounds == 2
    assert is_one_sevpa(result.hypothesis)


def test_query_budget_marks_result_incomplete():
    t = Teacher(helpers.grammar("conference"))
    result = learn_one_sevpa(t, max_queries=500)
    assert result.incomplete


def test_table_starts_with_seeded_columns():
    g = helpers.grammar("recursive_list")
    table = ObservationTable(g.alphabet, Teacher(g).member)
    assert table.columns[0] == ((), ())
    assert {u for u, _ in table.columns[1:]} == {(c,) for c in g.alphabet.calls}
