"""Active learning of a 1-SEVPA for the key-sorted documents of a schema.

Rows of the observation table are well-matched access words, one per state.
Columns are context pairs ``(u, v)``: a row word ``w`` gets the bit
``member(u + w + v)``. Transitions are read off the rows of the extensions
``w a`` (internal ``a``) and ``w' c w c'`` (call ``c`` with matching return
``c'``). Counterexamples are analysed by binary search over the run of the
hypothesis, which yields one new column per round.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .automata import (
    EmptyAutomaton,
    OneSevpa,
    accepts,
    live_set,
    reachability,
    remove_bin_states,
    shortest_words,
)
from .generate import GeneratorConfig, gen_invalid, gen_ordered, gen_valid
from .keygraph import build_key_graph, counterexample_from_bad_path, find_repeated_key_path
from .schema import ClassicalValidator, Grammar, MalformedDocument, Obj, doc_to_word, word_to_doc
from .tokens import CALL, RETURN, Symbol, format_word


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class TeacherConfig:
    max_depth: int = 3  # D
    per_depth: int = 50  # C, random mode only
    exhaustive: bool = True
    seed: int = 0
    max_array_length: int = 3


def _sorted_keys(doc, rank) -> bool:
    if isinstance(doc, Obj):
        ranks = [rank(k) for k, _ in doc.pairs]
        if any(a >= b for a, b in zip(ranks, ranks[1:])):
            return False
        return all(_sorted_keys(v, rank) for _, v in doc.pairs)
    if hasattr(doc, "items"):
        return all(_sorted_keys(v, rank) for v in doc.items)
    return True


class Teacher:
    """Answers membership queries with the classical validator and approximates
    equivalence with four checks: an initial internal self-loop, valid documents
    rejected, invalid documents accepted, and key-graph paths repeating a key.
    """

    def __init__(self, grammar: Grammar, config: TeacherConfig = TeacherConfig()):
        self.grammar = grammar
        self.alphabet = grammar.alphabet
        self.config = config
        self.validator = ClassicalValidator(grammar)
        self.cache: dict = {}
        self.membership_queries = 0
        self.equivalence_queries = 0
        self._round = 0
        self._fixed: tuple | None = None
        self.last_reach = None

    def member(self, word: Iterable[Symbol]) -> bool:
        word = tuple(word)
        hit = self.cache.get(word)
        if hit is None:
            self.membership_queries += 1
            hit = self.cache[word] = self._member(word)
        return hit

    def _member(self, word: tuple) -> bool:
        if not word or word[0].kind != CALL:
            return False
        try:
            doc = word_to_doc(word)
        except MalformedDocument:
            return False
        if not isinstance(doc, Obj) or not _sorted_keys(doc, self.alphabet.key_rank):
            return False
        return self.validator.validate(doc)

    def corpus(self) -> tuple[list, list]:
        """Key-sorted valid and invalid words for one equivalence query."""
        cfg = self.config
        if cfg.exhaustive:
            if self._fixed is None:
                gc = GeneratorConfig(cfg.max_depth, None, cfg.max_array_length)
                self._fixed = (self._sorted_words(gen_valid(self.grammar, gc)),
                               self._sorted_words(gen_invalid(self.grammar, gc)))
            return self._fixed
        self._round += 1
        valid, invalid = [], []
        for depth in range(1, cfg.max_depth + 1):
            gc = GeneratorConfig(depth, cfg.seed * 1_000_003 + self._round * 101 + depth, cfg.max_array_length)
            try:
                valid += self._sorted_words(itertools.islice(gen_valid(self.grammar, gc), cfg.per_depth))
                invalid += self._sorted_words(itertools.islice(gen_invalid(self.grammar, gc), cfg.per_depth))
            except ValueError:
                continue  # nothing fits at this depth
        return valid, invalid

    def _sorted_words(self, docs) -> list:
        return list(dict.fromkeys(doc_to_word(gen_ordered(d, self.alphabet)) for d in docs))

    def equivalence(self, hypothesis: OneSevpa, reach_seeds=()) -> tuple | None:
        """``(word, check number)`` for a disagreement, or None."""
        self.equivalence_queries += 1
        q0 = hypothesis.initial
        self.last_reach = None
        # check 1: an internal self-loop on the initial state
        loops = [a for a in hypothesis.alphabet.internals if hypothesis.delta_i.get((q0, a)) == q0]
        if loops:
            shortest = shortest_words(hypothesis)
            accepted = sorted((shortest[f] for f in hypothesis.finals if f in shortest), key=len)
            if accepted:
                word = (loops[0],) + accepted[0]
                if self.member(word) != accepts(hypothesis, word):
                    return word, 1
        valid, invalid = self.corpus()
        for word in valid:  # check 2
            if not accepts(hypothesis, word):
                return word, 2
        for word in invalid:  # check 3
            if accepts(hypothesis, word):
                return word, 3
        # check 4: repeated keys along a key-graph path
        reach = self.last_reach = reachability(hypothesis, reach_seeds)
        live = live_set(hypothesis, reach)
        try:
            trimmed = remove_bin_states(hypothesis, live)
        except EmptyAutomaton:
            return None
        kept = trimmed.states
        treach = reachability(trimmed, ((p, q, reach.witness(p, q)) for p, q in reach if p in kept and q in kept))
        graph = build_key_graph(trimmed, treach, with_witnesses=True)
        path = find_repeated_key_path(graph)
        if path is not None:
            word = counterexample_from_bad_path(graph, path, live_set(trimmed, treach), trimmed)
            return word, 4
        return None


@dataclass
class Counterexample:
    word: tuple
    check: int
    member: bool
    hypothesis_accepts: bool

    def as_dict(self) -> dict:
        return {"word": format_word(self.word), "check": self.check, "member": self.member}


@dataclass
class LearningResult:
    hypothesis: OneSevpa  # total automaton, including the sink
    automaton: OneSevpa  # bin states removed
    rounds: int
    incomplete: bool
    counterexamples: list = field(default_factory=list)
    states_per_round: list = field(default_factory=list)
    membership_queries: int = 0
    equivalence_queries: int = 0

    def report(self) -> dict:
        return {
            "rounds": self.rounds,
            "incomplete": self.incomplete,
            "states": len(self.automaton.states),
            "states_per_round": self.states_per_round,
            "membership_queries": self.membership_queries,
            "equivalence_queries": self.equivalence_queries,
            "counterexamples": [c.as_dict() for c in self.counterexamples],
        }


class ObservationTable:
    def __init__(self, alphabet, member, spent=lambda: 0):
        self.alphabet = alphabet
        self.member = member
        self.spent = spent
        self.access: list = [()]
        self.columns: list = [((), ())] + [((c,), (alphabet.match(c),)) for c in alphabet.calls]
        self._column_set = set(self.columns)
        self._rows: dict = {}

    def row(self, word: tuple) -> tuple:
        bits = self._rows.get(word)
        if bits is None or len(bits) < len(self.columns):
            bits = list(bits or ())
            for u, v in self.columns[len(bits):]:
                bits.append(self.member(u + word + v))
            bits = tuple(bits)
            self._rows[word] = bits
        return bits

    def add_column(self, u: tuple, v: tuple) -> None:
        if (u, v) in self._column_set:
            raise AssertionError(f"column already present: ({format_word(u)}, {format_word(v)})")
        self._column_set.add((u, v))
        self.columns.append((u, v))

    def extensions(self, i: int):
        acc, alpha = self.access, self.alphabet
        for a in alpha.internals:
            yield ("i", i, a), acc[i] + (a,)
        # pairs with the states found so far; later states pair with i when processed
        for j in range(i + 1):
            for c in alpha.calls:
                yield ("r", i, j, c), acc[j] + (c,) + acc[i] + (alpha.match(c),)
                if j != i:
                    yield ("r", j, i, c), acc[i] + (c,) + acc[j] + (alpha.match(c),)

    def close(self, max_queries: int | None = None) -> OneSevpa:
        classes = {}
        for i, w in enumerate(self.access):
            r = self.row(w)
            if r in classes:
                raise AssertionError("access rows must stay pairwise distinct")
            classes[r] = i
        delta_i, delta_r = {}, {}
        done = 0
        while done < len(self.access):
            i = done
            for label, word in self.extensions(i):
                r = self.row(word)
                if r not in classes:
                    classes[r] = len(self.access)
                    self.access.append(word)
                target = classes[r]
                if label[0] == "i":
                    delta_i[label[1], label[2]] = target
                else:
                    _, inner, outer, c = label
                    delta_r[inner, self.alphabet.match(c), (outer, c)] = target
                if max_queries is not None and self.spent() > max_queries:
                    raise BudgetExceeded("membership query budget exhausted")
            done += 1
        finals = [i for i, w in enumerate(self.access) if self.row(w)[0]]
        return OneSevpa(self.alphabet, range(len(self.access)), 0, finals, delta_i, delta_r)

    def representative(self, hypothesis: OneSevpa, prefix: tuple) -> tuple[tuple, tuple, tuple]:
        """Access-word version of ``prefix``: (outer part, pending top frame, current access word)."""
        state, stack = hypothesis.run(prefix)
        frames = [self.access[q] + (c,) for q, c in reversed(stack)]
        outer = tuple(itertools.chain.from_iterable(frames[:-1]))
        top = frames[-1] if frames else ()
        return outer, top, self.access[state]

    def analyse(self, hypothesis: OneSevpa, word: tuple) -> None:
        """Add the column exposed by a counterexample (binary search on the run)."""

        def alpha(i: int) -> bool:
            outer, top, acc = self.representative(hypothesis, word[:i])
            return self.member(outer + top + acc + word[i:])

        lo, hi = 0, len(word)
        a_lo = alpha(lo)
        if alpha(hi) == a_lo:
            raise AssertionError("not a counterexample for this hypothesis")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if alpha(mid) == a_lo:
                lo = mid
            else:
                hi = mid
        x = word[lo]
        outer, top, _ = self.representative(hypothesis, word[:lo])
        if x.kind == CALL:
            raise AssertionError("a call cannot separate the decomposition")
        if x.kind == RETURN:
            self.add_column(outer, word[lo + 1:])
        else:
            self.add_column(outer + top, word[lo + 1:])


def learn_one_sevpa(
    teacher: Teacher,
    max_rounds: int = 50,
    max_queries: int = 1_000_000,
    log=None,
) -> LearningResult:
    table = ObservationTable(teacher.alphabet, teacher.member, lambda: teacher.membership_queries)
    counterexamples = []
    states_per_round = []
    seeds: list = []
    hypothesis = None
    incomplete = True
    rounds = 0
    try:
        for rounds in range(1, max_rounds + 1):
            before = len(table.access)
            hypothesis = table.close(max_queries)
            states_per_round.append(len(hypothesis.states))
            if rounds > 1 and len(hypothesis.states) <= before:
                raise AssertionError("a counterexample must add a state")
            found = teacher.equivalence(hypothesis, seeds)
            if found is None:
                incomplete = False
                break
            word, check = found
            member, hyp = teacher.member(word), accepts(hypothesis, word)
            if member == hyp:
                raise AssertionError(f"check {check} returned a non-counterexample {format_word(word)}")
            counterexamples.append(Counterexample(word, check, member, hyp))
            if log is not None:
                log(f"round {rounds}: {len(hypothesis.states)} states, check {check}: {format_word(word)}")
            seeds = _replayable(teacher.last_reach)
            table.analyse(hypothesis, word)
            if teacher.membership_queries > max_queries:
                raise BudgetExceeded("membership query budget exhausted")
    except BudgetExceeded:
        incomplete = True
    if hypothesis is None:
        hypothesis = table.close()
    try:
        trimmed = remove_bin_states(hypothesis, live_set(hypothesis, reachability(hypothesis, seeds)))
    except EmptyAutomaton:
        trimmed = hypothesis
    return LearningResult(
        hypothesis,
        trimmed,
        rounds,
        incomplete,
        counterexamples,
        states_per_round,
        teacher.membership_queries,
        teacher.equivalence_queries,
    )


def _replayable(reach) -> list:
    # states keep their numbers across rounds (they are access-word indices), so
    # the witnesses of this round are candidate facts for the next one
    if reach is None:
        return []
    return [(p, q, reach.witness(p, q)) for p, q in reach if p != q]
