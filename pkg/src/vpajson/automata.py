"""Visibly pushdown automata and 1-SEVPAs.

A :class:`Vpa` stores transitions as tuples ``(q, a, q2, gamma)`` for calls,
``(q, a, gamma, q2)`` for returns and ``(q, a, q2)`` for internals, indexed by
left-hand side for constant-time lookup. A :class:`OneSevpa` is the
deterministic special case whose calls all enter the initial state and push
``(source, call symbol)``.
"""

from __future__ import annotations

import heapq
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, NamedTuple

from .tokens import CALL, RETURN, PushdownAlphabet, Symbol, Key

FORMAT_VERSION = 1


class AlphabetMismatch(ValueError):
    pass


class EmptyAutomaton(ValueError):
    pass


class Vpa:
    """A (possibly nondeterministic) visibly pushdown automaton."""

    def __init__(
        self,
        alphabet: PushdownAlphabet,
        states: Iterable,
        initials: Iterable,
        finals: Iterable,
        calls: Iterable = (),
        returns: Iterable = (),
        internals: Iterable = (),
        stack_alphabet: Iterable | None = None,
    ):
        self.alphabet = alphabet
        self.states = frozenset(states)
        self.initials = frozenset(initials)
        self.finals = frozenset(finals)
        self.calls = frozenset(calls)
        self.returns = frozenset(returns)
        self.internals = frozenset(internals)
        pushed = {t[3] for t in self.calls} | {t[2] for t in self.returns}
        self.stack_alphabet = frozenset(pushed if stack_alphabet is None else stack_alphabet)
        self._check()
        self._index()

    def _check(self) -> None:
        q = self.states
        calls, rets, ints = set(self.alphabet.calls), set(self.alphabet.returns), set(self.alphabet.internals)
        if not self.initials <= q or not self.finals <= q:
            raise ValueError("initial and final states must be states")
        for p, a, p2, g in self.calls:
            if p not in q or p2 not in q or a not in calls or g not in self.stack_alphabet:
                raise ValueError(f"bad call transition {(p, a, p2, g)}")
        for p, a, g, p2 in self.returns:
            if p not in q or p2 not in q or a not in rets or g not in self.stack_alphabet:
                raise ValueError(f"bad return transition {(p, a, g, p2)}")
        for p, a, p2 in self.internals:
            if p not in q or p2 not in q or a not in ints:
                raise ValueError(f"bad internal transition {(p, a, p2)}")

    def _index(self) -> None:
        self.call_out = defaultdict(list)
        self.calls_into = defaultdict(list)
        self.ret_out = defaultdict(list)
        self.ret_into = defaultdict(list)
        self.int_out = defaultdict(list)
        for p, a, p2, g in self.calls:
            self.call_out[p, a].append((p2, g))
            self.calls_into[p2].append((p, a, g))
        for p, a, g, p2 in self.returns:
            self.ret_out[p, a, g].append(p2)
            self.ret_into[p2].append((p, a, g))
        for p, a, p2 in self.internals:
            self.int_out[p, a].append(p2)
        self.deterministic = len(self.initials) == 1 and all(
            len(v) == 1 for d in (self.call_out, self.ret_out, self.int_out) for v in d.values()
        )

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(states={len(self.states)}, calls={len(self.calls)}, "
            f"returns={len(self.returns)}, internals={len(self.internals)})"
        )

    def relabel(self) -> "Vpa":
        """Rename states and stack symbols to consecutive integers (stable order)."""
        order = _stable_order(self.states)
        sm = {s: i for i, s in enumerate(order)}
        gm = {g: i for i, g in enumerate(_stable_order(self.stack_alphabet))}
        return Vpa(
            self.alphabet,
            range(len(order)),
            [sm[s] for s in self.initials],
            [sm[s] for s in self.finals],
            [(sm[p], a, sm[p2], gm[g]) for p, a, p2, g in self.calls],
            [(sm[p], a, gm[g], sm[p2]) for p, a, g, p2 in self.returns],
            [(sm[p], a, sm[p2]) for p, a, p2 in self.internals],
            range(len(gm)),
        )


def _stable_order(items) -> list:
    try:
        return sorted(items)
    except TypeError:
        return sorted(items, key=repr)


class OneSevpa(Vpa):
    """Deterministic VPA whose calls all target ``initial`` and push ``(source, call)``.

    ``delta_i`` maps ``(q, a)`` to a state and ``delta_r`` maps ``(q, a, (r, c))`` to a state.
    Missing entries are rejecting (the function is partial after bin removal).
    """

    def __init__(
        self,
        alphabet: PushdownAlphabet,
        states: Iterable[int],
        initial: int,
        finals: Iterable[int],
        delta_i: dict,
        delta_r: dict,
    ):
        states = frozenset(states)
        self.initial = initial
        self.delta_i = dict(delta_i)
        self.delta_r = dict(delta_r)
        gamma = [(q, c) for q in states for c in alphabet.calls]
        super().__init__(
            alphabet,
            states,
            [initial],
            finals,
            calls=[(q, c, initial, (q, c)) for q, c in gamma],
            returns=[(q, a, g, q2) for (q, a, g), q2 in self.delta_r.items()],
            internals=[(q, a, q2) for (q, a), q2 in self.delta_i.items()],
            stack_alphabet=gamma,
        )

    def run(self, word: Iterable[Symbol], state=None, stack: tuple = ()) -> tuple | None:
        """Run from ``(state, stack)``; returns the final configuration or None if blocked.

        The stack is a tuple with its top at index 0.
        """
        q = self.initial if state is None else state
        st = list(reversed(stack))
        di, dr = self.delta_i, self.delta_r
        for x in word:
            kind = x.kind
            if kind == CALL:
                st.append((q, x))
                q = self.initial
            elif kind == RETURN:
                if not st:
                    return None
                q = dr.get((q, x, st.pop()))
            else:
                q = di.get((q, x))
            if q is None:
                return None
        return q, tuple(reversed(st))

    def summary(self, word: Iterable[Symbol], state) -> int | None:
        """Target of a well-matched word read from ``state`` with empty stack, or None."""
        out = self.run(word, state)
        if out is None or out[1]:
            return None
        return out[0]

    def relabel(self) -> "OneSevpa":
        order = [self.initial] + sorted(self.states - {self.initial})
        m = {s: i for i, s in enumerate(order)}
        return OneSevpa(
            self.alphabet,
            range(len(order)),
            0,
            [m[f] for f in self.finals],
            {(m[q], a): m[q2] for (q, a), q2 in self.delta_i.items()},
            {(m[q], a, (m[r], c)): m[q2] for (q, a, (r, c)), q2 in self.delta_r.items()},
        )


class Configuration(NamedTuple):
    state: object
    stack: tuple  # top at index 0


def accepts(vpa: Vpa, word: Iterable[Symbol]) -> bool:
    word = tuple(word)
    if isinstance(vpa, OneSevpa):
        out = vpa.run(word)
        return out is not None and not out[1] and out[0] in vpa.finals
    if vpa.deterministic:
        return _accepts_det(vpa, word)
    rel = summarize(vpa, word, vpa.initials)
    return rel is not None and any(q in vpa.finals for _, q in rel)


def _accepts_det(vpa: Vpa, word: tuple) -> bool:
    (q,) = vpa.initials
    stack = []
    for x in word:
        if x.kind == CALL:
            t = vpa.call_out.get((q, x))
            if not t:
                return False
            q, g = t[0]
            stack.append(g)
        elif x.kind == RETURN:
            if not stack:
                return False
            t = vpa.ret_out.get((q, x, stack.pop()))
            if not t:
                return False
            q = t[0]
        else:
            t = vpa.int_out.get((q, x))
            if not t:
                return False
            q = t[0]
    return not stack and q in vpa.finals


def summarize(vpa: Vpa, word: Iterable[Symbol], sources: Iterable) -> set | None:
    """Pairs ``(p, q)`` with ``<p, e> -word-> <q, e>`` for p in ``sources``.

    Returns None when ``word`` is not well-matched. Nondeterminism is handled by
    carrying relations instead of single states, one frame per pending call.
    """
    rel = {(p, p) for p in sources}
    stack = []
    match = vpa.alphabet.match
    for x in word:
        if x.kind == CALL:
            entries = {t for _, p in rel for t, _ in vpa.call_out.get((p, x), ())}
            stack.append((rel, x))
            rel = {(t, t) for t in entries}
        elif x.kind == RETURN:
            if not stack:
                return None
            outer, c = stack.pop()
            if match(c) != x:
                return None
            by_src = defaultdict(list)
            for r1, r2 in rel:
                by_src[r1].append(r2)
            rel = {
                (p, q)
                for p, p1 in outer
                for r1, g in vpa.call_out.get((p1, c), ())
                for r2 in by_src.get(r1, ())
                for q in vpa.ret_out.get((r2, x, g), ())
            }
        else:
            rel = {(p, q2) for p, q in rel for q2 in vpa.int_out.get((q, x), ())}
    if stack:
        return None
    return rel


def _explore(alphabet, initials, step_internal, step_call, step_return):
    """Worklist exploration of a subset-style automaton.

    Every processed state is paired with every known stack symbol for returns,
    so return transitions are complete for the explored part.
    """
    index = {}
    order = []
    work = deque()

    def add(s):
        if s not in index:
            index[s] = len(order)
            order.append(s)
            work.append(s)

    for s in initials:
        add(s)
    ints, cals, rets = [], [], []
    gammas, gset, processed = [], set(), []

    def returns_for(s, g):
        for r in alphabet.returns:
            for t in step_return(s, r, g):
                rets.append((s, r, g, t))
                add(t)

    while work:
        s = work.popleft()
        for a in alphabet.internals:
            for t in step_internal(s, a):
                ints.append((s, a, t))
                add(t)
        fresh = []
        for c in alphabet.calls:
            for t, g in step_call(s, c):
                cals.append((s, c, t, g))
                add(t)
                if g not in gset:
                    gset.add(g)
                    gammas.append(g)
                    fresh.append(g)
        for g in gammas:
            returns_for(s, g)
        for g in fresh:
            for s2 in processed:
                returns_for(s2, g)
        processed.append(s)
    return order, ints, cals, rets, gammas


def _compose_return(vpa: Vpa, inner: frozenset, outer: frozenset, c: Symbol, r: Symbol) -> frozenset:
    by_src = defaultdict(list)
    for r1, r2 in inner:
        by_src[r1].append(r2)
    return frozenset(
        (p, q)
        for p, p1 in outer
        for t, g in vpa.call_out.get((p1, c), ())
        for r2 in by_src.get(t, ())
        for q in vpa.ret_out.get((r2, r, g), ())
    )


def determinize(vpa: Vpa) -> Vpa:
    """Subset construction over relations of states; only reachable subsets are built.

    States are relations S; calls push ``(S, a)`` and move to Id(Q); returns
    combine the pushed relation with the inner one through matching call/return
    transitions. The result is relabelled to integers.
    """
    ident_all = frozenset((q, q) for q in vpa.states)
    match = vpa.alphabet.match

    def step_internal(s, a):
        t = frozenset((p, q2) for p, q in s for q2 in vpa.int_out.get((q, a), ()))
        return (t,) if t else ()

    def step_call(s, c):
        return ((ident_all, (s, c)),)

    def step_return(s, r, g):
        outer, c = g
        if match(c) != r:
            return ()
        t = _compose_return(vpa, s, outer, c, r)
        return (t,) if t else ()

    init = frozenset((q, q) for q in vpa.initials)
    order, ints, cals, rets, gammas = _explore(vpa.alphabet, [init], step_internal, step_call, step_return)
    sm = {s: i for i, s in enumerate(order)}
    gm = {g: i for i, g in enumerate(gammas)}
    finals = [sm[s] for s in order if any(p in vpa.initials and q in vpa.finals for p, q in s)]
    return Vpa(
        vpa.alphabet,
        range(len(order)),
        [0],
        finals,
        [(sm[s], c, sm[t], gm[g]) for s, c, t, g in cals],
        [(sm[s], r, gm[g], sm[t]) for s, r, g, t in rets],
        [(sm[s], a, sm[t]) for s, a, t in ints],
        range(len(gammas)),
    )


def intersect(a: Vpa, b: Vpa) -> Vpa:
    """Synchronous product restricted to states reachable from the initial pairs."""
    if a.alphabet.symbols != b.alphabet.symbols or a.alphabet.matching != b.alphabet.matching:
        raise AlphabetMismatch("intersection needs identical alphabet partitions")

    def step_internal(s, x):
        return [(p, q) for p in a.int_out.get((s[0], x), ()) for q in b.int_out.get((s[1], x), ())]

    def step_call(s, c):
        return [
            ((p, q), (ga, gb))
            for p, ga in a.call_out.get((s[0], c), ())
            for q, gb in b.call_out.get((s[1], c), ())
        ]

    def step_return(s, r, g):
        return [(p, q) for p in a.ret_out.get((s[0], r, g[0]), ()) for q in b.ret_out.get((s[1], r, g[1]), ())]

    inits = [(p, q) for p in a.initials for q in b.initials]
    order, ints, cals, rets, gammas = _explore(a.alphabet, inits, step_internal, step_call, step_return)
    finals = [s for s in order if s[0] in a.finals and s[1] in b.finals]
    return Vpa(a.alphabet, order, inits, finals, cals, rets, ints, gammas).relabel()


def to_one_sevpa(vpa: Vpa) -> OneSevpa:
    """Equivalent total 1-SEVPA by the relation construction with calls reset to one entry state.

    The entry state is the identity on the initial states plus all call targets; a
    state records, for each entry state, where the current well-matched segment
    can lead. The empty relation is the (unique) sink.
    """
    entries = set(vpa.initials) | {t for _, _, t, _ in vpa.calls}
    ident = frozenset((q, q) for q in entries)
    match = vpa.alphabet.match

    def step_internal(s, a):
        return (frozenset((p, q2) for p, q in s for q2 in vpa.int_out.get((q, a), ())),)

    def step_call(s, c):
        return ((ident, (s, c)),)

    def step_return(s, r, g):
        outer, c = g
        if match(c) != r:
            return ()
        return (_compose_return(vpa, s, outer, c, r),)

    order, ints, _, rets, _ = _explore(vpa.alphabet, [ident], step_internal, step_call, step_return)
    sm = {s: i for i, s in enumerate(order)}
    finals = [sm[s] for s in order if any(p in vpa.initials and q in vpa.finals for p, q in s)]
    return OneSevpa(
        vpa.alphabet,
        range(len(order)),
        0,
        finals,
        {(sm[s], a): sm[t] for s, a, t in ints},
        {(sm[s], r, (sm[g[0]], g[1])): sm[t] for s, r, g, t in rets},
    )


def minimize(sevpa: OneSevpa) -> OneSevpa:
    """Coarsest congruence of a 1-SEVPA that respects finality (Moore-style refinement).

    Two states stay together while they agree on finality, on every internal
    successor, and on every return successor both as the inner state and as the
    state stored in the stack symbol. Missing transitions count as a shared sink.
    Unreachable states must already be absent.
    """
    states = sorted(sevpa.states)
    calls = sevpa.alphabet.calls
    match = sevpa.alphabet.match
    ints = sevpa.alphabet.internals
    di, dr = sevpa.delta_i, sevpa.delta_r
    block = {q: int(q in sevpa.finals) for q in states}
    count = len(set(block.values()))
    while True:
        sigs = {}
        for q in states:
            sig = [block[q]]
            sig.extend(block.get(di.get((q, a)), -1) for a in ints)
            for c in calls:
                r = match(c)
                sig.extend(block.get(dr.get((q, r, (s, c))), -1) for s in states)
                sig.extend(block.get(dr.get((s, r, (q, c))), -1) for s in states)
            sigs[q] = tuple(sig)
        ids = {}
        new = {q: ids.setdefault(sigs[q], len(ids)) for q in states}
        block = new
        if len(ids) == count:
            break
        count = len(ids)
    # renumber so that the initial block is 0
    rename = {block[sevpa.initial]: 0}
    for q in states:
        rename.setdefault(block[q], len(rename))
    b = {q: rename[block[q]] for q in states}
    return OneSevpa(
        sevpa.alphabet,
        range(len(rename)),
        0,
        {b[f] for f in sevpa.finals},
        {(b[q], a): b[q2] for (q, a), q2 in di.items()},
        {(b[q], a, (b[r], c)): b[q2] for (q, a, (r, c)), q2 in dr.items()},
    )


# -- witnesses ------------------------------------------------------------------


class _Cat(NamedTuple):
    left: object
    right: object


def _cat(*parts):
    out = ()
    for p in parts:
        if p == ():
            continue
        out = p if out == () else _Cat(out, p)
    return out


def flatten(node) -> tuple:
    """Expand a shared witness tree into a flat symbol tuple."""
    out = []
    todo = [node]
    while todo:
        n = todo.pop()
        if isinstance(n, _Cat):
            todo.append(n.right)
            todo.append(n.left)
        else:
            out.extend(n)
    return tuple(out)


class ReachRelation:
    """Pairs ``(q, q')`` joined by a well-matched word, with one witness each."""

    def __init__(self, witnesses: dict):
        self._wit = witnesses
        self.succ = defaultdict(set)
        self.pred = defaultdict(set)
        for q, q2 in witnesses:
            self.succ[q].add(q2)
            self.pred[q2].add(q)

    def __contains__(self, pair) -> bool:
        return pair in self._wit

    def __iter__(self):
        return iter(self._wit)

    def __len__(self) -> int:
        return len(self._wit)

    @property
    def pairs(self) -> frozenset:
        return frozenset(self._wit)

    def witness_node(self, q, q2):
        return self._wit[q, q2]

    def witness(self, q, q2) -> tuple:
        return flatten(self._wit[q, q2])


def reachability(vpa: Vpa, seeds: Iterable = ()) -> ReachRelation:
    """Least relation containing identity and internal edges, closed under
    transitivity and call/summary/return sandwiches, with witnesses.

    ``seeds`` are extra ``(q, q', word)`` triples already known to hold (for
    instance replayed witnesses of an earlier automaton); they are verified first.
    """
    wit = {}
    succ = defaultdict(set)
    pred = defaultdict(set)
    work = []
    match = vpa.alphabet.match

    def add(q, q2, w):
        if (q, q2) in wit:
            return
        wit[q, q2] = w
        succ[q].add(q2)
        pred[q2].add(q)
        work.append((q, q2))

    for q in _stable_order(vpa.states):
        add(q, q, ())
    for q, a, q2 in sorted(vpa.internals, key=repr):
        add(q, q2, (a,))
    for q, q2, w in seeds:
        w = tuple(w)
        rel = summarize(vpa, w, [q])
        if rel is not None and (q, q2) in rel:
            add(q, q2, w)
    while work:
        x, y = work.pop()
        w = wit[x, y]
        for p in list(pred[x]):
            add(p, y, _cat(wit[p, x], w))
        for z in list(succ[y]):
            add(x, z, _cat(w, wit[y, z]))
        for q, a, g in vpa.calls_into.get(x, ()):
            r = match(a)
            for q2 in vpa.ret_out.get((y, r, g), ()):
                add(q, q2, _cat((a,), w, (r,)))
    return ReachRelation(wit)


def shortest_words(sevpa: OneSevpa) -> dict:
    """Shortest well-matched word leading from the initial state to each reachable state.

    Dijkstra over summaries: a return edge combines two settled states (the one
    stored on the stack and the one reached inside the call).
    """
    q0 = sevpa.initial
    di, dr = sevpa.delta_i, sevpa.delta_r
    calls = [(c, sevpa.alphabet.match(c)) for c in sevpa.alphabet.calls]
    best = {q0: ()}
    heap = [(0, 0, q0)]
    tick = 1
    settled = []
    done = set()

    def offer(q, word):
        nonlocal tick
        if q is not None and (q not in best or len(word) < len(best[q])):
            best[q] = word
            heapq.heappush(heap, (len(word), tick, q))
            tick += 1

    while heap:
        _, _, q = heapq.heappop(heap)
        if q in done:
            continue
        done.add(q)
        settled.append(q)
        w = best[q]
        for a in sevpa.alphabet.internals:
            offer(di.get((q, a)), w + (a,))
        for c, r in calls:
            for s in settled:
                offer(dr.get((s, r, (q, c))), w + (c,) + best[s] + (r,))
                offer(dr.get((q, r, (s, c))), best[s] + (c,) + w + (r,))
    return best


@dataclass
class LiveSet:
    """States lying on some accepting run, with replayable witness pairs.

    ``coreachable`` holds every state that can finish an accepting run from some
    reachable stack; ``members`` additionally requires reachability from q0.
    """

    members: frozenset
    coreachable: frozenset
    _wit: dict

    def witness_pair(self, p) -> tuple:
        w, w2 = self._wit[p]
        return flatten(w), flatten(w2)

    def __contains__(self, p) -> bool:
        return p in self.members


def live_set(sevpa: OneSevpa, reach: ReachRelation) -> LiveSet:
    q0 = sevpa.initial
    wit = {f: ((), ()) for f in sevpa.finals}
    work = sorted(sevpa.finals)
    while work:
        p = work.pop()
        w, w2 = wit[p]
        for p1 in sorted(reach.pred[p]):
            if p1 not in wit:
                wit[p1] = (w, _cat(reach.witness_node(p1, p), w2))
                work.append(p1)
        for p1, r, (s, c) in sevpa.ret_into.get(p, ()):
            if p1 not in wit and (q0, s) in reach:
                wit[p1] = (_cat(w, reach.witness_node(q0, s), (c,)), _cat((r,), w2))
                work.append(p1)
    members = frozenset(p for p in wit if (q0, p) in reach)
    return LiveSet(members, frozenset(wit), wit)


def remove_bin_states(sevpa: OneSevpa, live: LiveSet) -> OneSevpa:
    keep = live.members
    if sevpa.initial not in keep:
        raise EmptyAutomaton("the initial state is a bin state: the language is empty")
    return OneSevpa(
        sevpa.alphabet,
        keep,
        sevpa.initial,
        sevpa.finals & keep,
        {k: q2 for k, q2 in sevpa.delta_i.items() if k[0] in keep and q2 in keep},
        {k: q2 for k, q2 in sevpa.delta_r.items() if k[0] in keep and k[2][0] in keep and q2 in keep},
    )


def is_one_sevpa(vpa: Vpa) -> bool:
    if len(vpa.initials) != 1 or not vpa.deterministic:
        return False
    (q0,) = vpa.initials
    gamma = {(q, c) for q in vpa.states for c in vpa.alphabet.calls}
    if set(vpa.stack_alphabet) != gamma:
        return False
    return set(vpa.calls) == {(q, c, q0, (q, c)) for q, c in gamma}


def trim_one_sevpa(sevpa: OneSevpa) -> OneSevpa:
    """Compute the live set and drop bin states."""
    return remove_bin_states(sevpa, live_set(sevpa, reachability(sevpa)))


# -- serialization --------------------------------------------------------------


def encode_symbol(sym: Symbol) -> str:
    return "key:" + sym.name if sym.key else sym.name


def symbol_decoder(alphabet: PushdownAlphabet) -> Callable[[str], Symbol]:
    table = {s.name: s for s in alphabet.symbols if not s.key}

    def decode(text: str) -> Symbol:
        if text.startswith("key:"):
            return Key(text[4:])
        return table[text]

    return decode


def alphabet_to_json(alphabet: PushdownAlphabet) -> dict:
    if alphabet == PushdownAlphabet.json(alphabet.keys):
        return {"json": True, "keys": list(alphabet.keys)}
    return {
        "json": False,
        "calls": [s.name for s in alphabet.calls],
        "returns": [s.name for s in alphabet.returns],
        "internals": [encode_symbol(s) for s in alphabet.internals],
        "matching": [[c.name, r.name] for c, r in alphabet.matching],
        "keys": list(alphabet.keys),
    }


def alphabet_from_json(data: dict) -> PushdownAlphabet:
    if data.get("json", True):
        return PushdownAlphabet.json(data["keys"])
    calls = {n: Symbol(CALL, n) for n in data["calls"]}
    rets = {n: Symbol(RETURN, n) for n in data["returns"]}
    internals = tuple(Key(n[4:]) if n.startswith("key:") else Symbol("internal", n) for n in data["internals"])
    return PushdownAlphabet(
        tuple(calls.values()),
        tuple(rets.values()),
        internals,
        tuple((calls[c], rets[r]) for c, r in data["matching"]),
        tuple(data.get("keys", ())),
    )


def sevpa_to_json(sevpa: OneSevpa) -> dict:
    enc = encode_symbol
    return {
        "format": "one-sevpa",
        "version": FORMAT_VERSION,
        "alphabet": alphabet_to_json(sevpa.alphabet),
        "states": sorted(sevpa.states),
        "initial": sevpa.initial,
        "finals": sorted(sevpa.finals),
        "internals": sorted([q, enc(a), q2] for (q, a), q2 in sevpa.delta_i.items()),
        "returns": sorted([q, enc(a), r, enc(c), q2] for (q, a, (r, c)), q2 in sevpa.delta_r.items()),
    }


def sevpa_from_json(data: dict) -> OneSevpa:
    if data.get("format") != "one-sevpa" or data.get("version") != FORMAT_VERSION:
        raise ValueError("not a version-1 one-sevpa document")
    alphabet = alphabet_from_json(data["alphabet"])
    dec = symbol_decoder(alphabet)
    return OneSevpa(
        alphabet,
        data["states"],
        data["initial"],
        data["finals"],
        {(q, dec(a)): q2 for q, a, q2 in data["internals"]},
        {(q, dec(a), (r, dec(c))): q2 for q, a, r, c, q2 in data["returns"]},
    )


def vpa_to_json(vpa: Vpa) -> dict:
    """Serialize a general VPA; states and stack symbols are renumbered to integers."""
    v = vpa.relabel()
    enc = encode_symbol
    return {
        "format": "vpa",
        "version": FORMAT_VERSION,
        "alphabet": alphabet_to_json(v.alphabet),
        "states": sorted(v.states),
        "initials": sorted(v.initials),
        "finals": sorted(v.finals),
        "stack_alphabet": sorted(v.stack_alphabet),
        "calls": sorted([p, enc(a), p2, g] for p, a, p2, g in v.calls),
        "returns": sorted([p, enc(a), g, p2] for p, a, g, p2 in v.returns),
        "internals": sorted([p, enc(a), p2] for p, a, p2 in v.internals),
    }


def vpa_from_json(data: dict) -> Vpa:
    if data.get("format") != "vpa" or data.get("version") != FORMAT_VERSION:
        raise ValueError("not a version-1 vpa document")
    alphabet = alphabet_from_json(data["alphabet"])
    dec = symbol_decoder(alphabet)
    return Vpa(
        alphabet,
        data["states"],
        data["initials"],
        data["finals"],
        [(p, dec(a), p2, g) for p, a, p2, g in data["calls"]],
        [(p, dec(a), g, p2) for p, a, g, p2 in data["returns"]],
        [(p, dec(a), p2) for p, a, p2 in data["internals"]],
        data["stack_alphabet"],
    )


def to_dot(vpa: Vpa, name: str = "vpa") -> Iterator[str]:
    """Graphviz lines; calls are labelled ``a,gamma`` and returns ``a,gamma`` with the return symbol."""
    yield f"digraph {name} {{"
    yield "  rankdir=LR;"
    for q in _stable_order(vpa.states):
        shape = "doublecircle" if q in vpa.finals else "circle"
        yield f'  "{q}" [shape={shape}];'
    for i, q in enumerate(_stable_order(vpa.initials)):
        yield f'  "__start{i}" [shape=point]; "__start{i}" -> "{q}";'
    edges = defaultdict(list)
    for p, a, p2 in vpa.internals:
        edges[p, p2].append(str(a))
    if not isinstance(vpa, OneSevpa):
        for p, a, p2, g in vpa.calls:
            edges[p, p2].append(f"{a},{_gamma_label(g)}")
    for p, a, g, p2 in vpa.returns:
        edges[p, p2].append(f"{a},{_gamma_label(g)}")
    for (p, p2), labels in sorted(edges.items(), key=repr):
        label = "\\n".join(sorted(labels)).replace('"', '\\"')
        yield f'  "{p}" -> "{p2}" [label="{label}"];'
    yield "}"


def _gamma_label(g) -> str:
    if isinstance(g, tuple) and len(g) == 2:
        return f"({g[0]},{g[1]})"
    return str(g)
