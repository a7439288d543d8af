"""Valid and invalid abstract documents for a grammar.

Boolean operators are pushed down to value shapes first (the same analysis the
compiler uses), so conjunctions and negations of primitives never produce dead
branches. Grammars whose negations cover objects or arrays fall back to
generating candidates from the universal grammar and filtering them.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterator

from .construct import UNIVERSAL, AnyObj, FixedArr, FixedObj, ShapeNormalizer, StarArr, UnsupportedNegation
from .schema import (
    Arr,
    ClassicalValidator,
    Doc,
    Grammar,
    Obj,
    doc_to_word,
    require_well_formed,
    satisfies,
    word_is_valid,
)
from .tokens import PRIMITIVE_NAMES, PushdownAlphabet


class NoValidDocument(ValueError):
    pass


class NoInvalidDocument(ValueError):
    pass


class Deviation(enum.Enum):
    WRONG_PRIMITIVE = "wrong-primitive"
    DROP_REQUIRED_KEY = "drop-required-key"
    ADD_FOREIGN_KEY = "add-foreign-key"
    WRONG_ELEMENT_COUNT = "wrong-element-count"
    SWAP_OBJECT_ARRAY = "swap-object-array"
    DUPLICATE_KEY = "duplicate-key"


@dataclass(frozen=True)
class GeneratorConfig:
    max_depth: int = 3
    seed: int | None = 0  # None selects exhaustive mode
    max_array_length: int = 3  # exhaustive mode
    random_array_cap: int = 5
    retries: int = 100

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")

    @property
    def exhaustive(self) -> bool:
        return self.seed is None


class _Values:
    """Memoized value enumeration and sampling per (formula, remaining depth)."""

    def __init__(self, grammar: Grammar, config: GeneratorConfig):
        require_well_formed(grammar)
        self.grammar = grammar
        self.config = config
        self.shapes = ShapeNormalizer(grammar, ordered=False)
        self.keys = grammar.alphabet.keys
        self._all: dict = {}
        self._inhabited: dict = {}

    def split(self, formula):
        try:
            return self.shapes.split(formula)
        except UnsupportedNegation:
            return None

    def accepts(self, formula, doc) -> bool:
        return all(satisfies(self.grammar, nt, doc) == positive for nt, positive in formula)

    # exhaustive

    def all(self, formula: frozenset, depth: int) -> list:
        key = (formula, depth)
        if key not in self._all:
            s = self.split(formula)
            if s is None:
                out = [d for d in self.all(UNIVERSAL, depth) if self.accepts(formula, d)]
            else:
                out = [v for v in PRIMITIVE_NAMES if v in s.prims]
                for shape in s.objs + s.arrs:
                    out.extend(self.shape_all(shape, depth))
            self._all[key] = list(dict.fromkeys(out))
        return self._all[key]

    def shape_all(self, shape, depth: int) -> Iterator[Doc]:
        if depth < 1:
            return
        sub = depth - 1
        if isinstance(shape, FixedObj):
            keys = [k for k, _ in shape.pairs]
            for values in itertools.product(*(self.all(f, sub) for _, f in shape.pairs)):
                yield Obj(zip(keys, values))
        elif isinstance(shape, AnyObj):
            vals = self.all(shape.value, sub)
            for n in range(len(self.keys) + 1):
                for keys in itertools.combinations(self.keys, n):
                    for values in itertools.product(vals, repeat=n):
                        yield Obj(zip(keys, values))
        elif isinstance(shape, StarArr):
            vals = self.all(shape.item, sub)
            for n in range(self.config.max_array_length + 1):
                for items in itertools.product(vals, repeat=n):
                    yield Arr(items)
        else:
            for items in itertools.product(self.all(shape.item, sub), repeat=shape.count):
                yield Arr(items)

    # random

    def inhabited(self, formula: frozenset, depth: int) -> bool:
        key = (formula, depth)
        if key not in self._inhabited:
            self._inhabited[key] = False  # guards against cycles at equal depth
            s = self.split(formula)
            if s is None:
                ok = bool(self.all(formula, depth))
            else:
                ok = bool(s.prims) or any(self.shape_inhabited(x, depth) for x in s.objs + s.arrs)
            self._inhabited[key] = ok
        return self._inhabited[key]

    def shape_inhabited(self, shape, depth: int) -> bool:
        if depth < 1:
            return False
        if isinstance(shape, FixedObj):
            return all(self.inhabited(f, depth - 1) for _, f in shape.pairs)
        if isinstance(shape, FixedArr):
            return shape.count == 0 or self.inhabited(shape.item, depth - 1)
        return True

    def sample(self, formula: frozenset, depth: int, rng: random.Random) -> Doc:
        s = self.split(formula)
        if s is None:
            for _ in range(self.config.retries):
                doc = self.sample(UNIVERSAL, depth, rng)
                if self.accepts(formula, doc):
                    return doc
            options = self.all(formula, depth)
            if not options:
                raise NoValidDocument("no value satisfies the negated constraint at this depth")
            return rng.choice(options)
        choices = [v for v in PRIMITIVE_NAMES if v in s.prims]
        choices += [x for x in s.objs + s.arrs if self.shape_inhabited(x, depth)]
        if not choices:
            raise NoValidDocument("no value fits at this depth")
        pick = rng.choice(choices)
        return pick if isinstance(pick, str) else self.sample_shape(pick, depth, rng)

    def sample_shape(self, shape, depth: int, rng: random.Random) -> Doc:
        sub = depth - 1
        if isinstance(shape, FixedObj):
            return Obj((k, self.sample(f, sub, rng)) for k, f in shape.pairs)
        if isinstance(shape, AnyObj):
            if not self.inhabited(shape.value, sub):
                return Obj(())
            keys = [k for k in self.keys if rng.random() < 0.5]
            return Obj((k, self.sample(shape.value, sub, rng)) for k in keys)
        if isinstance(shape, StarArr):
            n = _geometric(rng, self.config.random_array_cap) if self.inhabited(shape.item, sub) else 0
            return Arr(self.sample(shape.item, sub, rng) for _ in range(n))
        return Arr(self.sample(shape.item, sub, rng) for _ in range(shape.count))

    def roots(self, depth: int) -> list:
        out = []
        for ax in self.grammar.axioms:
            f = frozenset([(ax, True)])
            s = self.split(f)
            if s is None:
                out.append(f)
            else:
                out.extend(x for x in s.objs if self.shape_inhabited(x, depth) and x not in out)
        return out


def _geometric(rng: random.Random, cap: int) -> int:
    # failures before the first success with p = 1/3: mean 2
    u = 1.0 - rng.random()
    return min(int(math.log(u) / math.log(2 / 3)), cap)


def gen_valid(grammar: Grammar, config: GeneratorConfig = GeneratorConfig()) -> Iterator[Doc]:
    """Documents of depth at most ``config.max_depth`` satisfying the grammar.

    Exhaustive mode yields each document once (arrays up to ``max_array_length``)
    and stops; random mode yields forever.
    """
    values = _Values(grammar, config)
    roots = values.roots(config.max_depth)
    if not roots:
        raise NoValidDocument(f"no document of depth <= {config.max_depth}")
    if config.exhaustive:
        seen = set()
        for r in roots:
            docs = values.all(r, config.max_depth) if isinstance(r, frozenset) else values.shape_all(r, config.max_depth)
            for d in docs:
                if isinstance(d, Obj) and d not in seen:
                    seen.add(d)
                    yield d
        return
    rng = random.Random(config.seed)
    while True:
        r = rng.choice(roots)
        if isinstance(r, frozenset):
            doc = values.sample(r, config.max_depth, rng)
            if not isinstance(doc, Obj):
                continue
        else:
            doc = values.sample_shape(r, config.max_depth, rng)
        yield doc


# -- deviations -------------------------------------------------------------------


def _sites(doc: Doc, path=()) -> Iterator[tuple]:
    yield path, doc
    if isinstance(doc, Obj):
        for i, (_, v) in enumerate(doc.pairs):
            yield from _sites(v, path + (i,))
    elif isinstance(doc, Arr):
        for i, v in enumerate(doc.items):
            yield from _sites(v, path + (i,))


def _replace(doc: Doc, path: tuple, new: Doc) -> Doc:
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(doc, Obj):
        pairs = list(doc.pairs)
        pairs[i] = (pairs[i][0], _replace(pairs[i][1], rest, new))
        return Obj(pairs, strict=False)
    items = list(doc.items)
    items[i] = _replace(items[i], rest, new)
    return Arr(items)


def _depth(doc: Doc) -> int:
    if isinstance(doc, Obj):
        return 1 + max((_depth(v) for _, v in doc.pairs), default=0)
    if isinstance(doc, Arr):
        return 1 + max((_depth(v) for v in doc.items), default=0)
    return 0


def mutations(doc: Doc, kind: Deviation, alphabet: PushdownAlphabet) -> Iterator[Doc]:
    """Every single application of one deviation kind to ``doc``."""
    for path, node in _sites(doc):
        if kind is Deviation.WRONG_PRIMITIVE and isinstance(node, str):
            for other in PRIMITIVE_NAMES:
                if other != node:
                    yield _replace(doc, path, other)
        elif isinstance(node, Obj):
            pairs = list(node.pairs)
            if kind is Deviation.DROP_REQUIRED_KEY:
                for i in range(len(pairs)):
                    yield _replace(doc, path, Obj(pairs[:i] + pairs[i + 1:], strict=False))
            elif kind is Deviation.ADD_FOREIGN_KEY:
                present = set(node.keys())
                for k in alphabet.keys:
                    if k not in present:
                        yield _replace(doc, path, Obj(pairs + [(k, "s")], strict=False))
            elif kind is Deviation.DUPLICATE_KEY:
                for i in range(len(pairs)):
                    yield _replace(doc, path, Obj(pairs + [pairs[i]], strict=False))
            elif kind is Deviation.SWAP_OBJECT_ARRAY:
                yield _replace(doc, path, Arr(v for _, v in pairs))
        elif isinstance(node, Arr):
            items = list(node.items)
            if kind is Deviation.WRONG_ELEMENT_COUNT:
                if items:
                    yield _replace(doc, path, Arr(items[:-1]))
                    yield _replace(doc, path, Arr(items + items[-1:]))
                else:
                    yield _replace(doc, path, Arr(["s"]))
            elif kind is Deviation.SWAP_OBJECT_ARRAY and path:
                yield _replace(doc, path, Obj(()))


def _invalid(validator: ClassicalValidator, doc: Doc) -> bool:
    return not word_is_valid(validator.grammar, doc_to_word(doc), validator)


def gen_invalid(
    grammar: Grammar,
    config: GeneratorConfig = GeneratorConfig(),
    kinds: tuple = tuple(Deviation),
) -> Iterator[Doc]:
    """Documents obtained by one deviation from a valid document and rejected by the grammar.

    Mutants that happen to be valid are discarded. Documents with duplicated keys
    are built loosely and only make sense as words (``doc_to_word``).
    """
    validator = ClassicalValidator(grammar)
    alphabet = grammar.alphabet
    if config.exhaustive:
        seen = set()
        for doc in gen_valid(grammar, config):
            for kind in kinds:
                for m in mutations(doc, kind, alphabet):
                    w = doc_to_word(m)
                    if w not in seen and _depth(m) <= config.max_depth and _invalid(validator, m):
                        seen.add(w)
                        yield m
        return
    rng = random.Random(config.seed)
    valid = gen_valid(grammar, GeneratorConfig(config.max_depth, rng.randrange(1 << 30), config.max_array_length,
                                               config.random_array_cap, config.retries))
    while True:
        for _ in range(config.retries):
            doc = next(valid)
            kind = rng.choice(kinds)
            options = list(mutations(doc, kind, alphabet))
            if not options:
                continue
            m = rng.choice(options)
            if _depth(m) <= config.max_depth and _invalid(validator, m):
                yield m
                break
        else:
            raise NoInvalidDocument(f"no invalid mutant found in {config.retries} attempts")


def gen_deviation(grammar: Grammar, kind: Deviation, config: GeneratorConfig = GeneratorConfig()) -> Iterator[Doc]:
    return gen_invalid(grammar, config, (kind,))


# -- key orders ---------------------------------------------------------------------


def gen_ordered(doc: Doc, alphabet: PushdownAlphabet) -> Doc:
    """Sort every object's pairs by the alphabet's key order (stable for repeated keys)."""
    if isinstance(doc, Obj):
        pairs = sorted(doc.pairs, key=lambda kv: alphabet.key_rank(kv[0]))
        return Obj(((k, gen_ordered(v, alphabet)) for k, v in pairs), strict=False)
    if isinstance(doc, Arr):
        return Arr(gen_ordered(v, alphabet) for v in doc.items)
    return doc


def permute_objects(doc: Doc, rng: random.Random) -> Doc:
    if isinstance(doc, Obj):
        pairs = [(k, permute_objects(v, rng)) for k, v in doc.pairs]
        rng.shuffle(pairs)
        return Obj(pairs, strict=False)
    if isinstance(doc, Arr):
        return Arr(permute_objects(v, rng) for v in doc.items)
    return doc


def _count_objects(doc: Doc) -> list:
    if isinstance(doc, Obj):
        return [len(doc.pairs)] + [n for _, v in doc.pairs for n in _count_objects(v)]
    if isinstance(doc, Arr):
        return [n for v in doc.items for n in _count_objects(v)]
    return []


def _all_permutations(doc: Doc) -> Iterator[Doc]:
    if isinstance(doc, Obj):
        inner = [list(_all_permutations(v)) for _, v in doc.pairs]
        keys = [k for k, _ in doc.pairs]
        for values in itertools.product(*inner):
            pairs = list(zip(keys, values))
            for perm in itertools.permutations(pairs):
                yield Obj(perm, strict=False)
    elif isinstance(doc, Arr):
        for items in itertools.product(*(list(_all_permutations(v)) for v in doc.items)):
            yield Arr(items)
    else:
        yield doc


def key_permutations(doc: Doc, rng: random.Random, exhaustive_up_to: int = 4, samples: int = 20,
                     max_total: int = 5000) -> list:
    """Intra-object reorderings of ``doc``: all of them when every object has at most
    ``exhaustive_up_to`` keys (and the total stays under ``max_total``), else ``samples`` random ones.
    """
    sizes = _count_objects(doc)
    total = math.prod(math.factorial(n) for n in sizes)
    if all(n <= exhaustive_up_to for n in sizes) and total <= max_total:
        return list(dict.fromkeys(_all_permutations(doc)))
    return [permute_objects(doc, rng) for _ in range(samples)]
