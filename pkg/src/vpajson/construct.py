"""Schema-to-VPA compilation.

The pipeline turns every object/array shape of a grammar into one
"structured" nonterminal with a regular body over keys, primitives, commas and
references to other structured nonterminals. Each body becomes a DFA, the DFAs
are wired together with call/return transitions, the result is intersected
with a universal automaton and determinized.

Boolean operators are resolved on value sets before bodies are built. A value
set is split by type into primitives, object shapes and array shapes;
intersections are computed shape by shape. Negation is supported when its
operand denotes primitives only (or the complement of such a set).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import automata
from .automata import Vpa
from .schema import (
    And,
    AnyObject,
    ArrayFixed,
    ArrayStar,
    Grammar,
    IllFormedGrammar,
    Not,
    Object,
    Or,
    Primitive,
    require_well_formed,
)
from .tokens import COMMA, LBRACE, LBRACKET, PRIM, PRIMITIVE_NAMES, Key, PushdownAlphabet

MAX_UNORDERED_KEYS = 8


class UnsupportedNegation(ValueError):
    pass


# -- body regular expressions -------------------------------------------------------


@dataclass(frozen=True)
class Ref:
    """A reference to a structured nonterminal inside a body."""

    name: str

    def __repr__(self):
        return self.name


class Regex:
    __slots__ = ()


@dataclass(frozen=True)
class _Empty(Regex):
    def __repr__(self):
        return "∅"


@dataclass(frozen=True)
class _Eps(Regex):
    def __repr__(self):
        return "ε"


EMPTY = _Empty()
EPS = _Eps()


@dataclass(frozen=True)
class Sym(Regex):
    symbol: object

    def __repr__(self):
        return str(self.symbol)


@dataclass(frozen=True)
class Cat(Regex):
    left: Regex
    right: Regex

    def __repr__(self):
        return f"{self.left!r} {self.right!r}"


@dataclass(frozen=True)
class Alt(Regex):
    items: frozenset

    def __repr__(self):
        return "(" + " | ".join(sorted(map(repr, self.items))) + ")"


@dataclass(frozen=True)
class Star(Regex):
    inner: Regex

    def __repr__(self):
        return f"({self.inner!r})*"


@dataclass(frozen=True)
class Both(Regex):
    items: frozenset

    def __repr__(self):
        return "(" + " & ".join(sorted(map(repr, self.items))) + ")"


@dataclass(frozen=True)
class Neg(Regex):
    inner: Regex

    def __repr__(self):
        return f"¬({self.inner!r})"


@dataclass(frozen=True)
class Members(Regex):
    """``k1 v1 # ... # kn vn`` over exactly these keys; any order unless ``ordered``."""

    pairs: tuple  # ((key Symbol, value Regex), ...) in key order
    ordered: bool

    def __repr__(self):
        sep = " < " if self.ordered else " , "
        return "{" + sep.join(f"{k} {v!r}" for k, v in self.pairs) + "}"


@dataclass(frozen=True)
class AnyMembers(Regex):
    """Members over any subset of ``keys`` (each at most once), values matching ``value``."""

    keys: tuple
    value: Regex
    ordered: bool
    nonempty: bool

    def __repr__(self):
        return f"any{'+' if self.nonempty else ''}({', '.join(map(str, self.keys))}: {self.value!r})"


def sym(x) -> Regex:
    return Sym(x)


def cat(*parts: Regex) -> Regex:
    out = EPS
    for p in reversed(parts):
        out = _cat2(p, out)
    return out


def _cat2(a: Regex, b: Regex) -> Regex:
    if a is EMPTY or b is EMPTY:
        return EMPTY
    if a is EPS:
        return b
    if b is EPS:
        return a
    if isinstance(a, Cat):
        return Cat(a.left, _cat2(a.right, b))
    return Cat(a, b)


TOP = Neg(EMPTY)


def alt(*items: Regex) -> Regex:
    flat = set()
    for it in items:
        if isinstance(it, Alt):
            flat |= it.items
        elif it is not EMPTY:
            flat.add(it)
    if TOP in flat:
        return TOP
    if not flat:
        return EMPTY
    if len(flat) == 1:
        return next(iter(flat))
    return Alt(frozenset(flat))


def both(*items: Regex) -> Regex:
    flat = set()
    for it in items:
        if isinstance(it, Both):
            flat |= it.items
        elif it != TOP:
            flat.add(it)
    if EMPTY in flat:
        return EMPTY
    if not flat:
        return TOP
    if len(flat) == 1:
        return next(iter(flat))
    return Both(frozenset(flat))


def star(r: Regex) -> Regex:
    if r is EMPTY or r is EPS:
        return EPS
    if isinstance(r, Star):
        return r
    return Star(r)


def neg(r: Regex) -> Regex:
    if isinstance(r, Neg):
        return r.inner
    return Neg(r)


def members(pairs: Sequence, ordered: bool) -> Regex:
    pairs = tuple(pairs)
    if any(v is EMPTY for _, v in pairs):
        return EMPTY
    return EPS if not pairs else Members(pairs, ordered)


def any_members(keys: Sequence, value: Regex, ordered: bool, nonempty: bool = False) -> Regex:
    keys = tuple(keys)
    if not keys or value is EMPTY:
        return EMPTY if nonempty else EPS
    return AnyMembers(keys, value, ordered, nonempty)


def nullable(r: Regex) -> bool:
    t = type(r)
    if t is _Eps or t is Star:
        return True
    if t is _Empty or t is Sym:
        return False
    if t is Cat:
        return nullable(r.left) and nullable(r.right)
    if t is Alt:
        return any(map(nullable, r.items))
    if t is Both:
        return all(map(nullable, r.items))
    if t is Neg:
        return not nullable(r.inner)
    if t is Members:
        return not r.pairs
    if t is AnyMembers:
        return not r.nonempty
    raise TypeError(r)


def derivative(r: Regex, x) -> Regex:
    t = type(r)
    if t is _Empty or t is _Eps:
        return EMPTY
    if t is Sym:
        return EPS if r.symbol == x else EMPTY
    if t is Cat:
        first = cat(derivative(r.left, x), r.right)
        return alt(first, derivative(r.right, x)) if nullable(r.left) else first
    if t is Alt:
        return alt(*(derivative(i, x) for i in r.items))
    if t is Star:
        return cat(derivative(r.inner, x), r)
    if t is Both:
        return both(*(derivative(i, x) for i in r.items))
    if t is Neg:
        return neg(derivative(r.inner, x))
    if t is Members:
        candidates = r.pairs[:1] if r.ordered else r.pairs
        for k, v in candidates:
            if k == x:
                rest = tuple(kv for kv in r.pairs if kv[0] != x)
                tail = cat(sym(COMMA), Members(rest, r.ordered)) if rest else EPS
                return cat(v, tail)
        return EMPTY
    if t is AnyMembers:
        if x not in r.keys:
            return EMPTY
        if r.ordered:
            rest = r.keys[r.keys.index(x) + 1:]
        else:
            rest = tuple(k for k in r.keys if k != x)
        tail = alt(EPS, cat(sym(COMMA), any_members(rest, r.value, r.ordered, True)))
        return cat(r.value, tail)
    raise TypeError(r)


def symbols_of(r: Regex) -> set:
    out = set()
    todo = [r]
    while todo:
        n = todo.pop()
        t = type(n)
        if t is Sym:
            out.add(n.symbol)
        elif t is Cat:
            todo += [n.left, n.right]
        elif t in (Alt, Both):
            todo += list(n.items)
        elif t in (Star, Neg):
            todo.append(n.inner)
        elif t is Members:
            out.add(COMMA)
            for k, v in n.pairs:
                out.add(k)
                todo.append(v)
        elif t is AnyMembers:
            out.add(COMMA)
            out.update(n.keys)
            todo.append(n.value)
    return out


@dataclass(frozen=True)
class BodyDfa:
    """Deterministic, trimmed (no bin states) automaton for a body language."""

    states: tuple
    initial: int | None
    finals: frozenset
    delta: dict  # (state, symbol) -> state

    def accepts(self, word: Iterable) -> bool:
        q = self.initial
        if q is None:
            return False
        for x in word:
            q = self.delta.get((q, x))
            if q is None:
                return False
        return q in self.finals


def _symbol_order(x):
    return (isinstance(x, Ref), repr(x))


def body_to_dfa(body: Regex, alphabet: Iterable = ()) -> BodyDfa:
    """Derivative construction, then bin-state pruning and minimization.

    Negation complements against ``alphabet`` plus the symbols occurring in ``body``.
    """
    sigma = sorted(symbols_of(body) | set(alphabet), key=_symbol_order)
    index = {body: 0}
    order = [body]
    delta = {}
    work = deque([body])
    while work:
        r = work.popleft()
        i = index[r]
        for x in sigma:
            d = derivative(r, x)
            if d is EMPTY:
                continue
            if d not in index:
                index[d] = len(order)
                order.append(d)
                work.append(d)
            delta[i, x] = index[d]
    finals = {i for i, r in enumerate(order) if nullable(r)}
    return _minimize_dfa(len(order), 0, finals, delta, sigma)


def _minimize_dfa(n: int, initial: int, finals: set, delta: dict, sigma: list) -> BodyDfa:
    # keep states that can reach a final state
    back = {}
    for (p, _), q in delta.items():
        back.setdefault(q, set()).add(p)
    live = set(finals)
    todo = list(finals)
    while todo:
        q = todo.pop()
        for p in back.get(q, ()):
            if p not in live:
                live.add(p)
                todo.append(p)
    if initial not in live:
        return BodyDfa((), None, frozenset(), {})
    delta = {(p, x): q for (p, x), q in delta.items() if p in live and q in live}
    states = sorted(live)
    block = {q: int(q in finals) for q in states}
    count = len(set(block.values()))
    while True:
        sigs = {q: (block[q],) + tuple(block.get(delta.get((q, x)), -1) for x in sigma) for q in states}
        ids = {}
        block = {q: ids.setdefault(sigs[q], len(ids)) for q in states}
        if len(ids) == count:
            break
        count = len(ids)
    # renumber blocks breadth-first from the initial state
    rename = {block[initial]: 0}
    work = deque([initial])
    seen = {initial}
    while work:
        q = work.popleft()
        for x in sigma:
            q2 = delta.get((q, x))
            if q2 is not None and q2 not in seen:
                seen.add(q2)
                rename.setdefault(block[q2], len(rename))
                work.append(q2)
    new_delta = {(rename[block[p]], x): rename[block[q]] for (p, x), q in delta.items() if p in seen}
    return BodyDfa(
        tuple(range(len(rename))),
        0,
        frozenset(rename[block[q]] for q in seen if q in finals),
        new_delta,
    )


# -- normalization -------------------------------------------------------------------


@dataclass(frozen=True)
class FixedObj:
    pairs: tuple  # ((key, formula), ...) sorted by key rank


@dataclass(frozen=True)
class AnyObj:
    value: frozenset


@dataclass(frozen=True)
class StarArr:
    item: frozenset


@dataclass(frozen=True)
class FixedArr:
    item: frozenset
    count: int


UNIVERSAL = frozenset()  # the empty conjunction
ALL_PRIMS = frozenset(PRIMITIVE_NAMES)


@dataclass(frozen=True)
class _Split:
    prims: frozenset
    objs: tuple
    arrs: tuple


_UNIVERSAL_SPLIT = _Split(ALL_PRIMS, (AnyObj(UNIVERSAL),), (StarArr(UNIVERSAL),))


@dataclass
class NormalizedGrammar:
    """One production per structured nonterminal: name -> (bracket, body)."""

    productions: dict
    axioms: tuple
    alphabet: PushdownAlphabet
    ordered: bool

    def bodies(self) -> dict:
        return {name: body for name, (_, body) in self.productions.items()}


class ShapeNormalizer:
    """Splits conjunctions of (possibly negated) nonterminals into primitive, object and array shapes."""

    def __init__(self, grammar: Grammar, ordered: bool):
        self.g = grammar
        self.ordered = ordered
        self.rank = grammar.alphabet.key_rank
        self.lit_cache = {}
        self.split_cache = {}

    def literal(self, nt: str, positive: bool) -> _Split:
        key = (nt, positive)
        if key not in self.lit_cache:
            pos = self._union([self.production(p) for p in self.g.productions[nt]])
            self.lit_cache[key] = pos if positive else self.negate(pos, nt)
        return self.lit_cache[key]

    def production(self, p) -> _Split:
        none = frozenset()
        if isinstance(p, Primitive):
            return _Split(frozenset([p.value]), (), ())
        if isinstance(p, Object):
            pairs = tuple(sorted(((k, frozenset([(nt, True)])) for k, nt in p.pairs), key=lambda kv: self.rank(kv[0])))
            return _Split(none, (FixedObj(pairs),), ())
        if isinstance(p, AnyObject):
            return _Split(none, (AnyObj(frozenset([(p.value, True)])),), ())
        if isinstance(p, ArrayStar):
            return _Split(none, (), (StarArr(frozenset([(p.item, True)])),))
        if isinstance(p, ArrayFixed):
            return _Split(none, (), (FixedArr(frozenset([(p.item, True)]), p.count),))
        if isinstance(p, Or):
            return self._union([self.literal(o, True) for o in p.options])
        if isinstance(p, And):
            out = _UNIVERSAL_SPLIT
            for o in p.options:
                out = self._meet(out, self.literal(o, True))
            return out
        if isinstance(p, Not):
            return self.literal(p.operand, False)
        raise TypeError(p)

    def negate(self, s: _Split, nt: str) -> _Split:
        if not s.objs and not s.arrs:
            return _Split(ALL_PRIMS - s.prims, _UNIVERSAL_SPLIT.objs, _UNIVERSAL_SPLIT.arrs)
        if s.objs == _UNIVERSAL_SPLIT.objs and s.arrs == _UNIVERSAL_SPLIT.arrs:
            return _Split(ALL_PRIMS - s.prims, (), ())
        raise UnsupportedNegation(
            f"negation of {nt!r} covers objects or arrays; only primitive-valued operands can be compiled "
            "(use the learning path for this schema)"
        )

    @staticmethod
    def _union(splits) -> _Split:
        prims, objs, arrs = set(), {}, {}
        for s in splits:
            prims |= s.prims
            objs.update(dict.fromkeys(s.objs))
            arrs.update(dict.fromkeys(s.arrs))
        return _Split(frozenset(prims), tuple(objs), tuple(arrs))

    def _meet(self, a: _Split, b: _Split) -> _Split:
        objs, arrs = {}, {}
        for x in a.objs:
            for y in b.objs:
                m = self._meet_obj(x, y)
                if m is not None:
                    objs[m] = None
        for x in a.arrs:
            for y in b.arrs:
                m = self._meet_arr(x, y)
                if m is not None:
                    arrs[m] = None
        return _Split(a.prims & b.prims, tuple(objs), tuple(arrs))

    @staticmethod
    def _meet_obj(x, y):
        if isinstance(x, AnyObj) and isinstance(y, AnyObj):
            return AnyObj(x.value | y.value)
        if isinstance(x, AnyObj):
            x, y = y, x
        if isinstance(y, AnyObj):
            return FixedObj(tuple((k, f | y.value) for k, f in x.pairs))
        if [k for k, _ in x.pairs] != [k for k, _ in y.pairs]:
            return None
        return FixedObj(tuple((k, f | g) for (k, f), (_, g) in zip(x.pairs, y.pairs)))

    @staticmethod
    def _meet_arr(x, y):
        if isinstance(x, StarArr) and isinstance(y, StarArr):
            return StarArr(x.item | y.item)
        if isinstance(x, StarArr):
            x, y = y, x
        if isinstance(y, StarArr):
            return FixedArr(x.item | y.item, x.count)
        if x.count != y.count:
            return None
        return FixedArr(x.item | y.item, x.count)

    def split(self, formula: frozenset) -> _Split:
        if formula not in self.split_cache:
            out = _UNIVERSAL_SPLIT
            for nt, positive in sorted(formula):
                out = self._meet(out, self.literal(nt, positive))
            self.split_cache[formula] = out
        return self.split_cache[formula]

    def run(self) -> NormalizedGrammar:
        g = self.g
        roots = [frozenset([(ax, True)]) for ax in g.axioms]
        for f in roots:
            s = self.split(f)
            if not s.objs and (s.prims or s.arrs):
                raise IllFormedGrammar("the axiom must produce objects: JSON documents are objects")
        # every formula and shape reachable from the axioms
        formulas, shapes = [], []
        seen_f, seen_s = set(), set()
        todo = list(roots)
        while todo:
            f = todo.pop()
            if f in seen_f:
                continue
            seen_f.add(f)
            formulas.append(f)
            s = self.split(f)
            for shape in s.objs + s.arrs:
                if shape not in seen_s:
                    seen_s.add(shape)
                    shapes.append(shape)
                todo.extend(_shape_values(shape))
        # least fixed point of non-emptiness
        live_f, live_s = set(), set()
        changed = True
        while changed:
            changed = False
            for shape in shapes:
                if shape not in live_s and _shape_nonempty(shape, live_f):
                    live_s.add(shape)
                    changed = True
            for f in formulas:
                if f not in live_f:
                    s = self.split(f)
                    if s.prims or any(x in live_s for x in s.objs + s.arrs):
                        live_f.add(f)
                        changed = True
        # stable names in discovery order from the axioms
        names = {}
        queue = deque(roots)
        visited = set()
        while queue:
            f = queue.popleft()
            if f in visited:
                continue
            visited.add(f)
            s = self.split(f)
            for shape in s.objs + s.arrs:
                if shape in live_s and shape not in names:
                    names[shape] = f"S{len(names)}"
                    queue.extend(_shape_values(shape))
        alphabet = g.alphabet
        prods = {}
        for shape, name in names.items():
            prods[name] = self.body(shape, names, live_s, alphabet)
        axioms = []
        for f in roots:
            for shape in self.split(f).objs:
                if shape in names and names[shape] not in axioms:
                    axioms.append(names[shape])
        return NormalizedGrammar(prods, tuple(axioms), alphabet, self.ordered)

    def value(self, formula: frozenset, names: dict, live_s: set) -> Regex:
        s = self.split(formula)
        parts = [sym(PRIM[v]) for v in PRIMITIVE_NAMES if v in s.prims]
        parts += [sym(Ref(names[x])) for x in s.objs + s.arrs if x in live_s]
        return alt(*parts)

    def body(self, shape, names, live_s, alphabet) -> tuple:
        v = lambda f: self.value(f, names, live_s)  # noqa: E731
        if isinstance(shape, FixedObj):
            if not self.ordered and len(shape.pairs) > MAX_UNORDERED_KEYS:
                raise IllFormedGrammar(
                    f"object with {len(shape.pairs)} keys is too large for the unordered pipeline; "
                    "compile with a key order instead"
                )
            return LBRACE, members([(Key(k), v(f)) for k, f in shape.pairs], self.ordered)
        if isinstance(shape, AnyObj):
            if not self.ordered and len(alphabet.keys) > MAX_UNORDERED_KEYS:
                raise IllFormedGrammar("open objects over many keys need the ordered pipeline")
            return LBRACE, any_members(alphabet.key_symbols, v(shape.value), self.ordered)
        item = v(shape.item)
        if isinstance(shape, StarArr):
            return LBRACKET, alt(EPS, cat(item, star(cat(sym(COMMA), item))))
        parts = []
        for i in range(shape.count):
            if i:
                parts.append(sym(COMMA))
            parts.append(item)
        return LBRACKET, cat(*parts)


def _shape_values(shape) -> list:
    if isinstance(shape, FixedObj):
        return [f for _, f in shape.pairs]
    if isinstance(shape, AnyObj):
        return [shape.value]
    return [shape.item]


def _shape_nonempty(shape, live_f: set) -> bool:
    if isinstance(shape, FixedObj):
        return all(f in live_f for _, f in shape.pairs)
    if isinstance(shape, FixedArr):
        return shape.count == 0 or shape.item in live_f
    return True


def _resolve_order(grammar: Grammar, ordered) -> tuple[Grammar, bool]:
    if ordered is None or ordered is False:
        return grammar, False
    if ordered is True:
        return grammar, True
    return grammar.with_order(list(ordered)), True


def normalize(grammar: Grammar, ordered=None) -> NormalizedGrammar:
    """Structured nonterminals with regular bodies.

    ``ordered`` is None/False (all key permutations), True (the alphabet's key
    order) or an explicit key sequence.
    """
    require_well_formed(grammar)
    grammar, is_ordered = _resolve_order(grammar, ordered)
    return ShapeNormalizer(grammar, is_ordered).run()


# -- assembly -------------------------------------------------------------------------

START = ("start",)
ACCEPT = ("accept",)


def assemble_vpa(normalized: NormalizedGrammar, dfas: dict) -> Vpa:
    """Wire body DFAs together: a reference edge becomes a call into the referenced
    body and returns from its final states; axioms hang off a global start state.
    """
    alphabet = normalized.alphabet
    states = {START, ACCEPT}
    calls, returns, internals = [], [], []
    for name, (bracket, _) in normalized.productions.items():
        dfa = dfas[name]
        for q in dfa.states:
            states.add((name, q))
        for (p, x), p2 in dfa.delta.items():
            src = (name, p)
            if isinstance(x, Ref):
                sub = dfas[x.name]
                if sub.initial is None:
                    continue
                sub_bracket = normalized.productions[x.name][0]
                calls.append((src, sub_bracket, (x.name, sub.initial), src))
                for s in sub.finals:
                    returns.append(((x.name, s), alphabet.match(sub_bracket), src, (name, p2)))
            else:
                internals.append((src, x, (name, p2)))
    for name in normalized.axioms:
        dfa = dfas[name]
        if dfa.initial is None:
            continue
        calls.append((START, LBRACE, (name, dfa.initial), START))
        for s in dfa.finals:
            returns.append(((name, s), alphabet.match(LBRACE), START, ACCEPT))
    return Vpa(alphabet, states, [START], [ACCEPT], calls, returns, internals)


def compile_bodies(normalized: NormalizedGrammar) -> dict:
    return {name: body_to_dfa(body) for name, body in normalized.bodies().items()}


def _value_regex() -> Regex:
    return alt(*(sym(p) for p in PRIM.values()), sym(Ref("object")), sym(Ref("array")))


def _universal(alphabet: PushdownAlphabet, ordered: bool, distinct_keys: bool) -> Vpa:
    value = _value_regex()
    keys = alphabet.key_symbols
    if ordered or distinct_keys:
        obj = any_members(keys, value, ordered)
    else:
        member = cat(alt(*(sym(k) for k in keys)), value)
        obj = alt(EPS, cat(member, star(cat(sym(COMMA), member))))
    arr = alt(EPS, cat(value, star(cat(sym(COMMA), value))))
    norm = NormalizedGrammar({"object": (LBRACE, obj), "array": (LBRACKET, arr)}, ("object",), alphabet, ordered)
    return assemble_vpa(norm, compile_bodies(norm)).relabel()


def universal_vpa(alphabet: PushdownAlphabet, distinct_keys: bool = False) -> Vpa:
    """All documents over the alphabet.

    By default object bodies check member syntax only, so repeated keys are not
    policed; ``distinct_keys=True`` tracks the set of keys seen (exponential in
    the number of keys).
    """
    return _universal(alphabet, False, distinct_keys)


def ordered_universal_vpa(alphabet: PushdownAlphabet, order: Sequence[str] | None = None) -> Vpa:
    """All documents whose objects list their keys in strictly increasing order."""
    if order is not None:
        alphabet = alphabet.with_order(order)
    return _universal(alphabet, True, True)


@dataclass
class CompileReport:
    assembled_states: int
    product_states: int
    deterministic_states: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def vpa_for_schema(grammar: Grammar, ordered=None, report: list | None = None) -> Vpa:
    """Deterministic VPA for the documents of ``grammar`` (sorted documents when ordered)."""
    grammar, is_ordered = _resolve_order(grammar, ordered)
    norm = normalize(grammar, is_ordered)
    assembled = assemble_vpa(norm, compile_bodies(norm)).relabel()
    if is_ordered:
        universe = ordered_universal_vpa(grammar.alphabet)
    else:
        universe = universal_vpa(grammar.alphabet)
    product = automata.intersect(assembled, universe)
    det = automata.determinize(product)
    if report is not None:
        report.append(CompileReport(len(assembled.states), len(product.states), len(det.states)))
    return det


def compile_one_sevpa(grammar: Grammar, ordered=True, report: list | None = None) -> automata.OneSevpa:
    """Minimal 1-SEVPA (before bin removal) for the schema's (sorted) documents."""
    det = vpa_for_schema(grammar, ordered, report)
    return automata.minimize(automata.to_one_sevpa(det))
