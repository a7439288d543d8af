"""Key graph of a 1-SEVPA.

A vertex ``(p, k, p2)`` says that reading the key ``k`` followed by one value
leads from ``p`` to ``p2`` with an untouched stack. An edge joins ``(.., p1)``
to ``(p2, ..)`` when a comma leads from ``p1`` to ``p2``. Paths rooted at the
initial state abstract object bodies, which lets a fixed-order automaton judge
objects whose keys come in any order.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .automata import LiveSet, OneSevpa, ReachRelation, accepts, flatten
from .tokens import COMMA, PRIMITIVES, Symbol


class MissingWitness(LookupError):
    pass


class Vertex(NamedTuple):
    source: int
    key: str
    target: int

    def __str__(self):
        return f"{self.source},{self.key},{self.target}"


@dataclass
class KeyGraph:
    vertices: tuple  # sorted Vertex tuples; the position is the vertex index
    successors: tuple  # index -> tuple of indices
    initial: int
    witnesses: dict | None = None  # index -> lazy key-value word
    index: dict = field(init=False, repr=False)
    key_lists: dict = field(init=False, repr=False)
    start_states: dict = field(init=False, repr=False)
    roots: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {v: i for i, v in enumerate(self.vertices)}
        lists = defaultdict(list)
        starts = defaultdict(set)
        for i, v in enumerate(self.vertices):
            lists[v.key].append(i)
            starts[v.key].add(v.source)
        self.key_lists = {k: tuple(v) for k, v in lists.items()}
        self.start_states = {k: frozenset(v) for k, v in starts.items()}
        self.roots = tuple(i for i, v in enumerate(self.vertices) if v.source == self.initial)

    @property
    def edges(self) -> list:
        return [(self.vertices[i], self.vertices[j]) for i, succ in enumerate(self.successors) for j in succ]

    @property
    def keys(self) -> frozenset:
        return frozenset(self.key_lists)

    def starts_for(self, key: str) -> frozenset:
        return self.start_states.get(key, frozenset())

    def witness(self, vertex: Vertex) -> tuple:
        """Key-value word leading from the vertex source to its target."""
        return _witness_word(self, self.index[vertex])

    def marks_of(self, vertices: Iterable[Vertex]) -> int:
        out = 0
        for v in vertices:
            out |= 1 << self.index[v]
        return out

    def to_json(self) -> dict:
        return {
            "initial": self.initial,
            "vertices": [list(v) for v in self.vertices],
            "edges": [[i, j] for i, succ in enumerate(self.successors) for j in succ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "KeyGraph":
        vertices = tuple(Vertex(p, k, q) for p, k, q in data["vertices"])
        succ = [[] for _ in vertices]
        for i, j in data["edges"]:
            succ[i].append(j)
        return cls(vertices, tuple(tuple(s) for s in succ), data["initial"])

    def to_dot(self, name: str = "keygraph") -> Iterator[str]:
        yield f"digraph {name} {{"
        yield "  node [shape=box];"
        for i, v in enumerate(self.vertices):
            yield f'  v{i} [label="{v.source}, {v.key}, {v.target}"];'
        for i, succ in enumerate(self.successors):
            for j in succ:
                yield f"  v{i} -> v{j};"
        yield "}"


def build_key_graph(sevpa: OneSevpa, reach: ReachRelation, with_witnesses: bool = False) -> KeyGraph:
    q0 = sevpa.initial
    match = sevpa.alphabet.match
    calls = sevpa.alphabet.calls
    di, dr = sevpa.delta_i, sevpa.delta_r
    found = {}
    for (p, k), q in sorted(di.items(), key=repr):
        if not k.key:
            continue
        for a in PRIMITIVES:
            p2 = di.get((q, a))
            if p2 is not None:
                found.setdefault(Vertex(p, k.name, p2), (k, a))
        for c in calls:
            r = match(c)
            for inner in sorted(reach.succ.get(q0, ())):
                p2 = dr.get((inner, r, (q, c)))
                if p2 is not None:
                    v = Vertex(p, k.name, p2)
                    if v not in found:
                        found[v] = _Pair((k, c), reach.witness_node(q0, inner), (r,))
    vertices = tuple(sorted(found))
    by_source = defaultdict(list)
    for i, v in enumerate(vertices):
        by_source[v.source].append(i)
    successors = []
    for v in vertices:
        nxt = di.get((v.target, COMMA))
        successors.append(tuple(by_source.get(nxt, ())) if nxt is not None else ())
    witnesses = {i: found[v] for i, v in enumerate(vertices)} if with_witnesses else None
    return KeyGraph(vertices, tuple(successors), q0, witnesses)


class _Pair(NamedTuple):
    head: tuple
    middle: object
    tail: tuple


def _expand(node) -> tuple:
    if isinstance(node, _Pair):
        return node.head + flatten(node.middle) + node.tail
    return tuple(node)


def _witness_word(graph: KeyGraph, i: int) -> tuple:
    if graph.witnesses is None:
        raise MissingWitness("key graph was built without witnesses")
    return _expand(graph.witnesses[i])


def find_repeated_key_path(graph: KeyGraph) -> list | None:
    """First initial-rooted path whose last key already occurred on it, or None.

    Paths longer than the number of keys must repeat one, so the search depth is bounded.
    """
    verts, succ = graph.vertices, graph.successors
    for root in graph.roots:
        stack = [(root, (root,), frozenset([verts[root].key]))]
        while stack:
            i, path, keys = stack.pop()
            for j in reversed(succ[i]):
                if verts[j].key in keys:
                    return [verts[x] for x in path + (j,)]
                stack.append((j, path + (j,), keys | {verts[j].key}))
    return None


def valid_paths(graph: KeyGraph, keys: frozenset, marks: int = 0, tolerant: bool = False) -> frozenset:
    """Targets of initial-rooted paths that use exactly ``keys`` and avoid marked vertices.

    ``marks`` is a bitmask over vertex indices. In tolerant mode a branch stops at
    the first repeated key; otherwise branches run to a length of ``len(keys)``.
    Both modes return the same set.
    """
    verts, succ = graph.vertices, graph.successors
    want = len(keys)
    out = set()
    stack = []
    for i in graph.roots:
        if verts[i].key in keys and not marks >> i & 1:
            stack.append((i, frozenset([verts[i].key]), 1))
    while stack:
        i, seen, length = stack.pop()
        if len(seen) == want:
            out.add(verts[i].target)
        if length >= want:
            continue
        for j in succ[i]:
            k = verts[j].key
            if k not in keys or marks >> j & 1:
                continue
            if tolerant and k in seen:
                continue
            stack.append((j, seen | {k}, length + 1))
    return frozenset(out)


def counterexample_from_bad_path(graph: KeyGraph, path: list, live: LiveSet, sevpa: OneSevpa) -> tuple:
    """A word accepted by ``sevpa`` whose object body follows ``path`` (so it repeats a key)."""
    body = []
    for n, v in enumerate(path):
        if n:
            body.append(COMMA)
        body.extend(_witness_word(graph, graph.index[v]))
    end = path[-1].target
    if end not in live.coreachable:
        raise MissingWitness(f"no completion witness for state {end}")
    w, w2 = live.witness_pair(end)
    word = tuple(w) + tuple(body) + tuple(w2)
    if not accepts(sevpa, word):
        raise MissingWitness("reconstructed word is not accepted; witnesses are stale")
    return word


def key_sequence(word: Iterable[Symbol]) -> list:
    return [s.name for s in word if s.key]
