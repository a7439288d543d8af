"""Shared fixtures and brute-force oracles for the test suite."""

from __future__ import annotations

import functools
import itertools
import json
import re
from collections import deque
from importlib import resources

from vpajson import automata
from vpajson.artifact import build_artifact
from vpajson.construct import compile_one_sevpa
from vpajson.learn import Teacher, TeacherConfig, learn_one_sevpa
from vpajson.schema import Arr, Obj, load_json_schema, universal_grammar
from vpajson.tokens import CALL, INTERNAL, RETURN, PushdownAlphabet, Symbol

# -- the three-state textbook VPA over a / b / a-bar -----------------------------

A = Symbol(CALL, "a")
ABAR = Symbol(RETURN, "A")
B = Symbol(INTERNAL, "b")
ABC = PushdownAlphabet((A,), (ABAR,), (B,), ((A, ABAR),))


def textbook_vpa() -> automata.Vpa:
    """Accepts a (b a)^n abar^(n+1): q0 -a/push-> q1 -b-> q0, q1 -abar/pop-> q2, loop on q2."""
    return automata.Vpa(
        ABC,
        states=["q0", "q1", "q2"],
        initials=["q0"],
        finals=["q2"],
        calls=[("q0", A, "q1", "g")],
        returns=[("q1", ABAR, "g", "q2"), ("q2", ABAR, "g", "q2")],
        internals=[("q1", B, "q0")],
    )


_TEXTBOOK = re.compile(r"a(ba)*A+")


def textbook_oracle(word) -> bool:
    text = "".join(s.name for s in word)
    return bool(_TEXTBOOK.fullmatch(text)) and text.count("A") == text.count("a")


def all_words(symbols, max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product(symbols, repeat=n)


# -- schemas --------------------------------------------------------------------------

ORDERS = {
    "conference": ["title", "keywords", "conference", "name", "year"],
    "conference_no_keywords": ["title", "conference", "name", "year"],
    "recursive_list": None,
    "all_types": None,
}


def data_text(name: str) -> str:
    return resources.files("vpajson").joinpath("data", name).read_text(encoding="utf-8")


@functools.lru_cache(maxsize=None)
def grammar(name: str):
    return load_json_schema(data_text(f"{name}.json"), ORDERS.get(name))


@functools.lru_cache(maxsize=None)
def compiled(name: str):
    return build_artifact(compile_one_sevpa(grammar(name), ordered=True))


@functools.lru_cache(maxsize=None)
def learned(name: str, depth: int = 3):
    result = learn_one_sevpa(Teacher(grammar(name), TeacherConfig(max_depth=depth)))
    return result, build_artifact(result.hypothesis, result.incomplete)


DOCUMENT = data_text("conference_document.json")
# the same document with the pairs of both objects reordered
DOCUMENT_PERMUTED = json.dumps({
    "conference": {"year": 2023, "name": "Workshop on Formal Languages"},
    "keywords": ["streaming", "json document", "automata"],
    "title": "Pushdown Models for Tree Data",
})


# -- configuration-level oracles ------------------------------------------------------


def bfs_reach(vpa: automata.Vpa, max_len: int) -> set:
    """Pairs (q, q2) joined by a well-matched word of length <= max_len, by explicit search."""
    sigma = vpa.alphabet.symbols
    out = set()
    for q in vpa.states:
        seen = {(q, ())}
        frontier = deque([(q, (), 0)])
        while frontier:
            p, stack, n = frontier.popleft()
            if not stack:
                out.add((q, p))
            if n == max_len:
                continue
            for x in sigma:
                for nxt in _steps(vpa, p, stack, x):
                    if nxt not in seen and len(nxt[1]) <= max_len - n - 1:
                        seen.add(nxt)
                        frontier.append((nxt[0], nxt[1], n + 1))
    return out


def _steps(vpa, p, stack, x):
    if x.kind == CALL:
        for p2, g in vpa.call_out.get((p, x), ()):
            yield p2, (g,) + stack
    elif x.kind == RETURN:
        if stack:
            for p2 in vpa.ret_out.get((p, x, stack[0]), ()):
                yield p2, stack[1:]
    else:
        for p2 in vpa.int_out.get((p, x), ()):
            yield p2, stack


def run_configuration(vpa: automata.Vpa, word, state, stack=()):
    """Deterministic run from an arbitrary configuration; None when blocked."""
    confs = {(state, tuple(stack))}
    for x in word:
        confs = {n for p, st in confs for n in _steps(vpa, p, st, x)}
        if not confs:
            return None
    return confs


# -- deep documents -------------------------------------------------------------------


def _deep_value(rng, keys, d):
    if d == 0:
        return rng.choice(["s", "i", "n", "true", "false", "null"])
    inner = _deep_value(rng, keys, d - 1)
    if rng.random() < 0.5:
        return Arr([inner] + [rng.choice(["s", "i"]) for _ in range(rng.randrange(2))])
    return deep_document(rng, keys, d, inner)


def deep_document(rng, keys, d, inner=None):
    """An object of depth exactly ``d`` whose objects never repeat a key."""
    if inner is None:
        inner = _deep_value(rng, keys, d - 1)
    chosen = rng.sample(keys, rng.randint(1, len(keys)))
    return Obj([(chosen[0], inner)] + [(k, "s") for k in chosen[1:]])


@functools.lru_cache(maxsize=None)
def universe_artifact(keys=("a", "b", "c")):
    """Artifact accepting every document over ``keys``."""
    return build_artifact(compile_one_sevpa(universal_grammar(PushdownAlphabet.json(list(keys)))))
