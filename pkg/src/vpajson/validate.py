"""Streaming validation against a fixed-order 1-SEVPA and its key graph.

The validator reads abstract symbols once, with one symbol of lookahead. It
keeps a relation ``R`` of state pairs summarizing the current well-matched
segment and a stack of frames, one per open array or object. Inside objects,
``R`` only covers the key-value pair being read; when the object closes, the
key graph decides whether its pairs can be reordered into a run of the
automaton.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable

from .automata import OneSevpa, ReachRelation
from .keygraph import KeyGraph, valid_paths
from .tokens import (
    CALL,
    COMMA,
    LBRACE,
    LBRACKET,
    RBRACE,
    RBRACKET,
    LexError,
    MalformedJson,
    PushdownAlphabet,
    Symbol,
    SymbolStream,
    UnknownKey,
    abstract_lex,
)

MALFORMED = "malformed"
SCHEMA = "schema"


@dataclass
class ArrayFrame:
    saved: frozenset


@dataclass
class EmptyObjectFrame:
    saved: frozenset


@dataclass
class ObjectFrame:
    saved: frozenset
    keys: frozenset
    key: str
    marks: int  # bitmask over key-graph vertex indices


@dataclass
class Stats:
    consumed: int = 0
    max_stack: int = 0
    transitions: int = 0  # automaton lookups, outside valid_paths
    max_ops: int = 0  # largest number of pair operations spent on one symbol
    total_ops: int = 0
    valid_paths_calls: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Verdict:
    valid: bool
    kind: str | None = None  # MALFORMED or SCHEMA when rejected
    index: int | None = None  # 1-based index of the symbol that triggered rejection
    reason: str | None = None
    stats: Stats = field(default_factory=Stats)

    def __bool__(self) -> bool:
        return self.valid


def start_states(graph: KeyGraph, key: str) -> frozenset:
    return graph.starts_for(key)


class _Reject(Exception):
    def __init__(self, kind: str, reason: str):
        super().__init__(reason)
        self.kind = kind
        self.reason = reason


class StreamingValidator:
    """Reusable validator for one automaton and its key graph.

    ``tolerant`` stops key-graph path search at a repeated key, for automata that
    may still contain paths repeating keys. ``fast_fail`` rejects as soon as an
    object starts with a key that no key-graph vertex carries.
    """

    def __init__(
        self,
        sevpa: OneSevpa,
        graph: KeyGraph,
        tolerant: bool = False,
        fast_fail: bool = False,
        reach: ReachRelation | None = None,
    ):
        self.sevpa = sevpa
        self.graph = graph
        self.tolerant = tolerant
        self.fast_fail = fast_fail
        self.reach = reach  # when set, every relation is checked to lie inside it
        self.q0 = sevpa.initial
        self.finals = sevpa.finals
        self.alphabet: PushdownAlphabet = sevpa.alphabet

    def validate(self, source: Iterable[Symbol]) -> Verdict:
        stream = source if isinstance(source, SymbolStream) else SymbolStream(source)
        stats = Stats()
        try:
            ok, kind, reason = self._run(stream, stats)
        except UnknownKey as exc:
            ok, kind, reason = False, SCHEMA, str(exc)
        except LexError as exc:
            ok, kind, reason = False, MALFORMED, str(exc)
        stats.consumed = stream.consumed
        if ok:
            return Verdict(True, stats=stats)
        return Verdict(False, kind, max(stream.consumed, 1), reason, stats)

    def validate_text(self, text: str | IO[str], enum_literals: Iterable = ()) -> Verdict:
        return self.validate(abstract_lex(text, self.alphabet, enum_literals))

    def _run(self, stream: SymbolStream, stats: Stats):
        q0 = self.q0
        di, dr = self.sevpa.delta_i, self.sevpa.delta_r
        graph = self.graph
        stack: list = []
        rel = frozenset([(q0, q0)])
        memo: dict = {}
        a = stream.next()
        if a is None:
            return False, MALFORMED, "empty input"
        while a is not None:
            b = stream.peek()
            ops = 0
            if a.kind == CALL:
                if a == LBRACKET:
                    stack.append(ArrayFrame(rel))
                    rel = frozenset([(q0, q0)])
                elif b == RBRACE:
                    stack.append(EmptyObjectFrame(rel))
                    rel = frozenset([(q0, q0)])
                elif b is not None and b.key:
                    starts = graph.starts_for(b.name)
                    if self.fast_fail and not starts:
                        return False, SCHEMA, f"no object of the schema has key {b.name!r}"
                    stack.append(ObjectFrame(rel, frozenset([b.name]), b.name, 0))
                    rel = frozenset((p, p) for p in starts)
                    ops = len(starts)
                else:
                    return False, MALFORMED, "an object must start with a key or be empty"
                stats.max_stack = max(stats.max_stack, len(stack))
            elif a == RBRACKET or a == RBRACE:
                want = ArrayFrame if a == RBRACKET else (EmptyObjectFrame, ObjectFrame)
                if not stack or not isinstance(stack[-1], want):
                    return False, MALFORMED, f"unmatched {a}"
                frame = stack.pop()
                if isinstance(frame, ObjectFrame):
                    marks = self._mark(frame.marks, frame.key, rel)
                    ops += len(graph.key_lists.get(frame.key, ()))
                    inner = self._valid_paths(frame.keys, marks, memo, stats)
                    call = LBRACE
                elif isinstance(frame, EmptyObjectFrame):
                    inner = (q0,)
                    call = LBRACE
                else:
                    inner = [r for p, r in rel if p == q0]
                    ops += len(rel)
                    call = LBRACKET
                out = set()
                for p, p1 in frame.saved:
                    gamma = (p1, call)
                    for r in inner:
                        ops += 1
                        stats.transitions += 1
                        q = dr.get((r, a, gamma))
                        if q is not None:
                            out.add((p, q))
                rel = frozenset(out)
            elif not stack:
                return False, SCHEMA, f"{a} outside any object or array"
            elif a == COMMA and isinstance(stack[-1], ObjectFrame):
                frame = stack[-1]
                if b is None or not b.key:
                    return False, MALFORMED, "a comma in an object must be followed by a key"
                if b.name in frame.keys:
                    return False, SCHEMA, f"duplicate key {b.name!r}"
                frame.marks = self._mark(frame.marks, frame.key, rel)
                ops += len(graph.key_lists.get(frame.key, ()))
                frame.keys = frame.keys | {b.name}
                frame.key = b.name
                starts = graph.starts_for(b.name)
                if self.fast_fail and not starts:
                    return False, SCHEMA, f"no object of the schema has key {b.name!r}"
                rel = frozenset((p, p) for p in starts)
                ops += len(starts)
            else:
                out = set()
                for p, q in rel:
                    ops += 1
                    stats.transitions += 1
                    q2 = di.get((q, a))
                    if q2 is not None:
                        out.add((p, q2))
                rel = frozenset(out)
            if self.reach is not None and not all(pair in self.reach for pair in rel):
                raise AssertionError(f"relation left the reachability relation after {a}")
            stats.max_ops = max(stats.max_ops, ops)
            stats.total_ops += ops
            a = stream.next()
        if stack:
            return False, MALFORMED, "input ended inside an object or array"
        if any(p == q0 and q in self.finals for p, q in rel):
            return True, None, None
        return False, SCHEMA, "the document does not satisfy the schema"

    def _mark(self, marks: int, key: str, rel: frozenset) -> int:
        verts = self.graph.vertices
        for i in self.graph.key_lists.get(key, ()):
            v = verts[i]
            if (v.source, v.target) not in rel:
                marks |= 1 << i
        return marks

    def _valid_paths(self, keys: frozenset, marks: int, memo: dict, stats: Stats) -> frozenset:
        k = (keys, marks)
        if k not in memo:
            stats.valid_paths_calls += 1
            memo[k] = valid_paths(self.graph, keys, marks, self.tolerant)
        return memo[k]


def validate_stream(sevpa: OneSevpa, graph: KeyGraph, stream: Iterable[Symbol], **options) -> bool:
    return StreamingValidator(sevpa, graph, **options).validate(stream).valid


__all__ = [
    "ArrayFrame",
    "EmptyObjectFrame",
    "MALFORMED",
    "MalformedJson",
    "ObjectFrame",
    "SCHEMA",
    "Stats",
    "StreamingValidator",
    "Verdict",
    "start_states",
    "validate_stream",
]
