"""Benchmark schema families and the counters reported for them.

``worstcase_grammar`` is a conjunction of disjunctions whose language collapses
to a single one-key object; the classical validator still walks every branch.
``permutation_grammar`` accepts one object holding ``n`` string-valued keys in
any order: small when keys are sorted, exponential when they are not.
"""

from __future__ import annotations

import itertools
import statistics
import time

from . import automata
from .construct import compile_one_sevpa
from .schema import And, Arr, ArrayStar, ClassicalValidator, Grammar, Obj, Object, Or, Primitive, doc_to_word, word_is_valid
from .tokens import COMMA, LBRACE, RBRACE, PRIM, Key, PushdownAlphabet
from .validate import StreamingValidator


def family_keys(n: int, prefix: str = "k") -> tuple:
    """Keys ``k01 < k02 < ...`` whose lexicographic order matches their index."""
    width = len(str(n))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(1, n + 1))


def worstcase_grammar(ell: int, container: bool = False) -> Grammar:
    """``S = S1 and ... and S_ell``, ``S_i = R_i or ... or R_ell``, ``R_i = {k_i s, ..., k_ell s}``.

    With ``container`` the root becomes ``{items: [S, S, ...]}`` so documents can
    be made arbitrarily long.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    keys = family_keys(ell)
    prods = {"str": (Primitive("s"),)}
    for i in range(ell):
        prods[f"R{i + 1}"] = (Object(tuple((k, "str") for k in keys[i:])),)
        prods[f"S{i + 1}"] = (Or(tuple(f"R{j + 1}" for j in range(i, ell))),)
    prods["S"] = (And(tuple(f"S{i + 1}" for i in range(ell))),)
    all_keys = keys
    axiom = "S"
    if container:
        prods["list"] = (ArrayStar("S"),)
        prods["root"] = (Object((("items", "list"),)),)
        all_keys = keys + ("items",)
        axiom = "root"
    alphabet = PushdownAlphabet.json(all_keys).with_order(all_keys)
    return Grammar(prods, (axiom,), alphabet)


def worstcase_document(ell: int, items: int) -> Obj:
    """The only shape the family accepts, repeated ``items`` times in the container."""
    last = family_keys(ell)[-1]
    return Obj((("items", Arr(tuple(Obj(((last, "s"),)) for _ in range(items)))),))


def permutation_grammar(n: int) -> Grammar:
    keys = family_keys(n)
    prods = {"str": (Primitive("s"),), "S": (Object(tuple((k, "str") for k in keys)),)}
    return Grammar(prods, ("S",), PushdownAlphabet.json(keys).with_order(keys))


def subset_prefix(keys: tuple, subset) -> tuple:
    """``{`` followed by the pairs of ``subset`` in key order, without a trailing comma."""
    word = [LBRACE]
    for k in (k for k in keys if k in subset):
        if len(word) > 1:
            word.append(COMMA)
        word += [Key(k), PRIM["s"]]
    return tuple(word)


def subset_completion(keys: tuple, subset) -> tuple:
    """Suffix that closes ``subset_prefix(keys, subset)`` into a valid document."""
    rest = [k for k in keys if k not in subset]
    word = []
    for k in rest:
        if subset or word:
            word.append(COMMA)
        word += [Key(k), PRIM["s"]]
    return tuple(word) + (RBRACE,)


def distinguishing_prefixes(n: int, check: bool = True) -> dict:
    """One prefix per key subset, with a continuation separating every pair.

    For subsets ``X != Y`` pick ``X`` to be the side holding a key the other
    lacks; completing ``X`` accepts while the same suffix after ``Y`` leaves
    that key out (or repeats one), so no automaton for the unordered language
    can merge the two prefixes. ``check`` asks the classical validator.
    """
    grammar = permutation_grammar(n)
    keys = family_keys(n)
    validator = ClassicalValidator(grammar)
    subsets = [frozenset(c) for r in range(n + 1) for c in itertools.combinations(keys, r)]
    prefixes = {s: subset_prefix(keys, s) for s in subsets}
    checked = failures = 0
    if check:
        for x, y in itertools.combinations(subsets, 2):
            if not x - y:
                x, y = y, x
            suffix = subset_completion(keys, x)
            checked += 1
            if not (word_is_valid(grammar, prefixes[x] + suffix, validator)
                    and not word_is_valid(grammar, prefixes[y] + suffix, validator)):
                failures += 1
    return {"n": n, "prefixes": len(prefixes), "pairs_checked": checked, "failures": failures}


def linear_fit(xs, ys) -> dict:
    slope, intercept = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys) if len(set(ys)) > 1 else 1.0
    return {"slope": slope, "intercept": intercept, "r2": r * r}


def permfamily_report(ns, unordered_upto: int = 0, check_prefixes: bool = True) -> dict:
    rows = []
    for n in ns:
        g = permutation_grammar(n)
        t = time.perf_counter()
        ordered = automata.trim_one_sevpa(compile_one_sevpa(g, ordered=True))
        row = {"n": n, "ordered_states": len(ordered.states), "compile_seconds": time.perf_counter() - t}
        if n <= unordered_upto:
            unordered = automata.trim_one_sevpa(compile_one_sevpa(g, ordered=False))
            row["unordered_states"] = len(unordered.states)
        row.update({k: v for k, v in distinguishing_prefixes(n, check_prefixes).items() if k != "n"})
        rows.append(row)
    report = {"family": "permutation", "rows": rows}
    if len(rows) >= 2:
        report["fit"] = linear_fit([r["n"] for r in rows], [r["ordered_states"] for r in rows])
    return report


def worstcase_report(ell: int, sizes=(1, 10, 100)) -> dict:
    from .artifact import build_artifact

    g = worstcase_grammar(ell, container=True)
    t = time.perf_counter()
    art = build_artifact(compile_one_sevpa(g, ordered=True))
    compile_seconds = time.perf_counter() - t
    rows = []
    for items in sizes:
        doc = worstcase_document(ell, items)
        word = doc_to_word(doc)
        classical = ClassicalValidator(g)
        t = time.perf_counter()
        c_ok = classical.validate(doc)
        c_time = time.perf_counter() - t
        t = time.perf_counter()
        verdict = StreamingValidator(art.automaton, art.key_graph).validate(word)
        s_time = time.perf_counter() - t
        rows.append({
            "items": items,
            "symbols": len(word),
            "classical_valid": c_ok,
            "streaming_valid": verdict.valid,
            "classical_evaluations": classical.evaluations,
            "streaming_transitions": verdict.stats.transitions,
            "classical_seconds": c_time,
            "streaming_seconds": s_time,
        })
    return {
        "family": "worstcase",
        "ell": ell,
        "states": len(art.automaton.states),
        "compile_seconds": compile_seconds,
        "rows": rows,
    }
