"""Abstract JSON schemas as extended context-free grammars.

A grammar maps nonterminals to alternative productions. Productions are
primitive values, objects with a fixed key set, arrays (any length or a fixed
count), and the Boolean combinations Or/And/Not over nonterminals. Objects are
matched as key sets, so every production is implicitly closed under key
permutations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Union

from .tokens import (
    CALL,
    COMMA,
    LBRACE,
    LBRACKET,
    PRIM,
    PRIMITIVE_NAMES,
    RBRACE,
    RBRACKET,
    RETURN,
    Key,
    PushdownAlphabet,
    Symbol,
)

GRAMMAR_VERSION = 1


class IllFormedGrammar(ValueError):
    pass


class UnsupportedKeyword(ValueError):
    def __init__(self, keywords: Iterable[str]):
        self.keywords = sorted(set(keywords))
        super().__init__("unsupported schema keywords: " + ", ".join(self.keywords))


class MalformedSchema(ValueError):
    pass


class MalformedDocument(ValueError):
    pass


class DuplicateKey(MalformedDocument):
    pass


# -- productions ----------------------------------------------------------------


@dataclass(frozen=True)
class Primitive:
    value: str


@dataclass(frozen=True)
class Object:
    pairs: tuple  # ((key, nonterminal), ...)

    def __post_init__(self):
        keys = [k for k, _ in self.pairs]
        if len(set(keys)) != len(keys):
            raise IllFormedGrammar(f"object production repeats a key: {keys}")

    @property
    def keys(self) -> frozenset:
        return frozenset(k for k, _ in self.pairs)


@dataclass(frozen=True)
class AnyObject:
    """Any object over the key alphabet whose values all satisfy ``value``."""

    value: str


@dataclass(frozen=True)
class ArrayStar:
    item: str


@dataclass(frozen=True)
class ArrayFixed:
    item: str
    count: int


@dataclass(frozen=True)
class Or:
    options: tuple


@dataclass(frozen=True)
class And:
    options: tuple


@dataclass(frozen=True)
class Not:
    operand: str


Production = Union[Primitive, Object, AnyObject, ArrayStar, ArrayFixed, Or, And, Not]


def references(prod: Production) -> tuple:
    if isinstance(prod, Object):
        return tuple(nt for _, nt in prod.pairs)
    if isinstance(prod, (AnyObject,)):
        return (prod.value,)
    if isinstance(prod, (ArrayStar, ArrayFixed)):
        return (prod.item,)
    if isinstance(prod, (Or, And)):
        return tuple(prod.options)
    if isinstance(prod, Not):
        return (prod.operand,)
    return ()


@dataclass
class Grammar:
    productions: dict  # nonterminal -> tuple of alternative productions
    axioms: tuple
    alphabet: PushdownAlphabet
    enum_literals: tuple = ()
    _wf: str | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.productions = {nt: tuple(ps) for nt, ps in self.productions.items()}
        self.axioms = tuple(self.axioms)
        if not self.axioms:
            raise IllFormedGrammar("a grammar needs at least one axiom")
        for nt in self.axioms:
            if nt not in self.productions:
                raise IllFormedGrammar(f"axiom {nt!r} has no productions")
        for nt, prods in self.productions.items():
            for p in prods:
                for ref in references(p):
                    if ref not in self.productions:
                        raise IllFormedGrammar(f"{nt!r} refers to undefined nonterminal {ref!r}")
                if isinstance(p, Object):
                    for k, _ in p.pairs:
                        if not self.alphabet.has_key(k):
                            raise IllFormedGrammar(f"key {k!r} is not in the alphabet")
                if isinstance(p, Primitive) and p.value not in PRIM:
                    raise IllFormedGrammar(f"unknown primitive {p.value!r}")

    @property
    def nonterminals(self) -> frozenset:
        return frozenset(self.productions)

    def with_order(self, order) -> "Grammar":
        return Grammar(self.productions, self.axioms, self.alphabet.with_order(order), self.enum_literals)


def check_well_formed(grammar: Grammar) -> str | None:
    """None when no nonterminal depends on itself through Or/And/Not only; otherwise a diagnostic."""
    edges = {
        nt: [r for p in prods if isinstance(p, (Or, And, Not)) for r in references(p)]
        for nt, prods in grammar.productions.items()
    }
    color = {}
    path = []

    def visit(nt):
        color[nt] = 1
        path.append(nt)
        for nxt in edges[nt]:
            if color.get(nxt) == 1:
                cycle = path[path.index(nxt):] + [nxt]
                return "cyclic Boolean definition: " + " -> ".join(cycle)
            if nxt not in color:
                found = visit(nxt)
                if found:
                    return found
        path.pop()
        color[nt] = 2
        return None

    for nt in sorted(grammar.productions):
        if nt not in color:
            found = visit(nt)
            if found:
                return found
    return None


def require_well_formed(grammar: Grammar) -> None:
    if grammar._wf is None:
        diag = check_well_formed(grammar)
        grammar._wf = diag or ""
    if grammar._wf:
        raise IllFormedGrammar(grammar._wf)


# -- documents ------------------------------------------------------------------


class Obj:
    """An object node: ordered key/value pairs with distinct keys (unless built loosely)."""

    __slots__ = ("pairs",)

    def __init__(self, pairs: Iterable = (), strict: bool = True):
        pairs = tuple(pairs)
        if strict:
            keys = [k for k, _ in pairs]
            if len(set(keys)) != len(keys):
                raise DuplicateKey(f"duplicate key in object: {keys}")
        self.pairs = pairs

    def keys(self) -> list:
        return [k for k, _ in self.pairs]

    def __eq__(self, other):
        return isinstance(other, Obj) and self.pairs == other.pairs

    def __hash__(self):
        return hash(("obj", self.pairs))

    def __repr__(self):
        return "{" + ", ".join(f"{k}: {v!r}" for k, v in self.pairs) + "}"


class Arr:
    __slots__ = ("items",)

    def __init__(self, items: Iterable = ()):
        self.items = tuple(items)

    def __eq__(self, other):
        return isinstance(other, Arr) and self.items == other.items

    def __hash__(self):
        return hash(("arr", self.items))

    def __repr__(self):
        return "[" + ", ".join(map(repr, self.items)) + "]"


Doc = Union[str, Obj, Arr]


def doc_to_word(doc: Doc) -> tuple:
    out: list = []
    _emit(doc, out)
    return tuple(out)


def _emit(doc: Doc, out: list) -> None:
    if isinstance(doc, Obj):
        out.append(LBRACE)
        for i, (k, v) in enumerate(doc.pairs):
            if i:
                out.append(COMMA)
            out.append(Key(k))
            _emit(v, out)
        out.append(RBRACE)
    elif isinstance(doc, Arr):
        out.append(LBRACKET)
        for i, v in enumerate(doc.items):
            if i:
                out.append(COMMA)
            _emit(v, out)
        out.append(RBRACKET)
    else:
        out.append(PRIM[doc])


def word_to_doc(word: Iterable[Symbol], allow_duplicates: bool = False) -> Doc:
    """Parse an abstract word into a tree; raises MalformedDocument (or DuplicateKey)."""
    word = tuple(word)
    doc, pos = _parse_value(word, 0, not allow_duplicates)
    if pos != len(word):
        raise MalformedDocument(f"trailing symbols after position {pos}")
    return doc


def _parse_value(word: tuple, pos: int, strict: bool):
    if pos >= len(word):
        raise MalformedDocument("unexpected end of word")
    sym = word[pos]
    if sym == LBRACE:
        pos += 1
        pairs = []
        if pos < len(word) and word[pos] == RBRACE:
            return Obj((), strict), pos + 1
        while True:
            if pos >= len(word) or not word[pos].key:
                raise MalformedDocument(f"expected a key at position {pos}")
            key = word[pos].name
            value, pos = _parse_value(word, pos + 1, strict)
            pairs.append((key, value))
            if pos < len(word) and word[pos] == COMMA:
                pos += 1
                continue
            if pos < len(word) and word[pos] == RBRACE:
                return Obj(pairs, strict), pos + 1
            raise MalformedDocument(f"expected ',' or '}}' at position {pos}")
    if sym == LBRACKET:
        pos += 1
        items = []
        if pos < len(word) and word[pos] == RBRACKET:
            return Arr(()), pos + 1
        while True:
            value, pos = _parse_value(word, pos, strict)
            items.append(value)
            if pos < len(word) and word[pos] == COMMA:
                pos += 1
                continue
            if pos < len(word) and word[pos] == RBRACKET:
                return Arr(items), pos + 1
            raise MalformedDocument(f"expected ',' or ']' at position {pos}")
    if sym.kind not in (CALL, RETURN) and not sym.key and sym.name in PRIM and sym != COMMA:
        return sym.name, pos + 1
    raise MalformedDocument(f"unexpected symbol {sym} at position {pos}")


def doc_depth(doc: Doc) -> int:
    if isinstance(doc, Obj):
        return 1 + max((doc_depth(v) for _, v in doc.pairs), default=0)
    if isinstance(doc, Arr):
        return 1 + max((doc_depth(v) for v in doc.items), default=0)
    return 0


def to_json_value(doc: Doc, enum_value=None):
    """Concrete rendering: s -> "s", i -> 1, n -> 1.5, e -> ``enum_value`` (default "e")."""
    if isinstance(doc, Obj):
        return {k: to_json_value(v, enum_value) for k, v in doc.pairs}
    if isinstance(doc, Arr):
        return [to_json_value(v, enum_value) for v in doc.items]
    return {
        "true": True,
        "false": False,
        "null": None,
        "s": "s",
        "i": 1,
        "n": 1.5,
        "e": "e" if enum_value is None else enum_value,
    }[doc]


def render_json(doc: Doc, enum_value=None) -> str:
    """Compact JSON text; unlike ``json.dumps(to_json_value(...))`` it keeps duplicated keys."""
    if isinstance(doc, Obj):
        return "{" + ", ".join(f"{json.dumps(k)}: {render_json(v, enum_value)}" for k, v in doc.pairs) + "}"
    if isinstance(doc, Arr):
        return "[" + ", ".join(render_json(v, enum_value) for v in doc.items) + "]"
    return json.dumps(to_json_value(doc, enum_value))


# -- semantics ------------------------------------------------------------------


def satisfies(grammar: Grammar, nonterminal: str, doc: Doc) -> bool:
    """Direct reading of the satisfaction clauses (no short-cuts)."""
    require_well_formed(grammar)
    return _sat(grammar, nonterminal, doc)


def _sat(g: Grammar, nt: str, doc: Doc) -> bool:
    return any(_sat_prod(g, p, doc) for p in g.productions[nt])


def _sat_prod(g: Grammar, p: Production, doc: Doc) -> bool:
    if isinstance(p, Primitive):
        return doc == p.value
    if isinstance(p, Object):
        if not isinstance(doc, Obj):
            return False
        wanted = dict(p.pairs)
        got = dict(doc.pairs)
        return set(wanted) == set(got) and all(_sat(g, wanted[k], got[k]) for k in wanted)
    if isinstance(p, AnyObject):
        return isinstance(doc, Obj) and all(g.alphabet.has_key(k) and _sat(g, p.value, v) for k, v in doc.pairs)
    if isinstance(p, ArrayStar):
        return isinstance(doc, Arr) and all(_sat(g, p.item, v) for v in doc.items)
    if isinstance(p, ArrayFixed):
        return isinstance(doc, Arr) and len(doc.items) == p.count and all(_sat(g, p.item, v) for v in doc.items)
    if isinstance(p, Or):
        return any(_sat(g, o, doc) for o in p.options)
    if isinstance(p, And):
        return all(_sat(g, o, doc) for o in p.options)
    if isinstance(p, Not):
        return not _sat(g, p.operand, doc)
    raise TypeError(p)


def is_document(grammar: Grammar, doc: Doc) -> bool:
    return any(satisfies(grammar, ax, doc) for ax in grammar.axioms)


class ClassicalValidator:
    """Recursive tree validator with early exits on key-set and length mismatches.

    ``evaluations`` counts calls that check one value against one nonterminal.
    """

    def __init__(self, grammar: Grammar):
        require_well_formed(grammar)
        self.grammar = grammar
        self.evaluations = 0
        self._objects = {}
        for prods in grammar.productions.values():
            for p in prods:
                if isinstance(p, Object):
                    self._objects[p] = (frozenset(p.keys), dict(p.pairs))

    def validate(self, doc: Doc) -> bool:
        return any(self.check(ax, doc) for ax in self.grammar.axioms)

    def check(self, nt: str, doc: Doc) -> bool:
        self.evaluations += 1
        for p in self.grammar.productions[nt]:
            if self._check_prod(p, doc):
                return True
        return False

    def _check_prod(self, p: Production, doc: Doc) -> bool:
        t = type(p)
        if t is Primitive:
            return doc == p.value
        if t is Object:
            if type(doc) is not Obj:
                return False
            keyset, value_of = self._objects[p]
            if len(doc.pairs) != len(keyset):
                return False
            for k, _ in doc.pairs:
                if k not in keyset:
                    return False
            return all(self.check(value_of[k], v) for k, v in doc.pairs)
        if t is AnyObject:
            if type(doc) is not Obj:
                return False
            has = self.grammar.alphabet.has_key
            return all(has(k) for k, _ in doc.pairs) and all(self.check(p.value, v) for _, v in doc.pairs)
        if t is ArrayFixed:
            if type(doc) is not Arr or len(doc.items) != p.count:
                return False
            return all(self.check(p.item, v) for v in doc.items)
        if t is ArrayStar:
            return type(doc) is Arr and all(self.check(p.item, v) for v in doc.items)
        if t is Or:
            return any(self.check(o, doc) for o in p.options)
        if t is And:
            return all(self.check(o, doc) for o in p.options)
        if t is Not:
            return not self.check(p.operand, doc)
        raise TypeError(p)


def classical_validate(grammar: Grammar, doc: Doc) -> bool:
    return ClassicalValidator(grammar).validate(doc)


def word_is_valid(grammar: Grammar, word: Iterable[Symbol], validator: ClassicalValidator | None = None) -> bool:
    """Membership of an abstract word: parse (duplicates and bad syntax reject) then validate."""
    try:
        doc = word_to_doc(word)
    except MalformedDocument:
        return False
    if not isinstance(doc, Obj):
        return False
    return (validator or ClassicalValidator(grammar)).validate(doc)


# -- universal grammar ----------------------------------------------------------

UNIVERSAL_DOCUMENT = "any-object"
UNIVERSAL_VALUE = "any-value"
UNIVERSAL_NESTED = "any-scalar-or-array"


def universal_productions() -> dict:
    return {
        UNIVERSAL_DOCUMENT: (AnyObject(UNIVERSAL_VALUE),),
        UNIVERSAL_NESTED: tuple(Primitive(v) for v in PRIMITIVE_NAMES) + (ArrayStar(UNIVERSAL_VALUE),),
        UNIVERSAL_VALUE: (Or((UNIVERSAL_DOCUMENT, UNIVERSAL_NESTED)),),
    }


def universal_grammar(alphabet: PushdownAlphabet) -> Grammar:
    """All documents over the key alphabet."""
    return Grammar(universal_productions(), (UNIVERSAL_DOCUMENT,), alphabet)


# -- serialization --------------------------------------------------------------


def grammar_to_json(grammar: Grammar) -> dict:
    def enc(p):
        if isinstance(p, Primitive):
            return ["primitive", p.value]
        if isinstance(p, Object):
            return ["object", [list(kv) for kv in p.pairs]]
        if isinstance(p, AnyObject):
            return ["any-object", p.value]
        if isinstance(p, ArrayStar):
            return ["array", p.item]
        if isinstance(p, ArrayFixed):
            return ["array-fixed", p.item, p.count]
        if isinstance(p, Or):
            return ["or", list(p.options)]
        if isinstance(p, And):
            return ["and", list(p.options)]
        return ["not", p.operand]

    return {
        "format": "grammar",
        "version": GRAMMAR_VERSION,
        "keys": list(grammar.alphabet.keys),
        "axioms": list(grammar.axioms),
        "productions": {nt: [enc(p) for p in ps] for nt, ps in sorted(grammar.productions.items())},
        "enum_literals": list(grammar.enum_literals),
    }


def grammar_from_json(data: dict) -> Grammar:
    if data.get("format") != "grammar" or data.get("version") != GRAMMAR_VERSION:
        raise ValueError("not a version-1 grammar document")

    def dec(item):
        tag = item[0]
        if tag == "primitive":
            return Primitive(item[1])
        if tag == "object":
            return Object(tuple(tuple(kv) for kv in item[1]))
        if tag == "any-object":
            return AnyObject(item[1])
        if tag == "array":
            return ArrayStar(item[1])
        if tag == "array-fixed":
            return ArrayFixed(item[1], item[2])
        if tag == "or":
            return Or(tuple(item[1]))
        if tag == "and":
            return And(tuple(item[1]))
        if tag == "not":
            return Not(item[1])
        raise ValueError(f"unknown production tag {tag!r}")

    return Grammar(
        {nt: tuple(dec(p) for p in ps) for nt, ps in data["productions"].items()},
        tuple(data["axioms"]),
        PushdownAlphabet.json(data["keys"]),
        tuple(data.get("enum_literals", ())),
    )


# -- JSON Schema loader -----------------------------------------------------------

_IGNORED = frozenset(
    """$schema $id id title description default examples $comment format pattern minLength maxLength
    minimum maximum exclusiveMinimum exclusiveMaximum multipleOf minItems maxItems uniqueItems
    minProperties maxProperties definitions $defs readOnly writeOnly deprecated contentEncoding
    contentMediaType""".split()
)
_HANDLED = frozenset(
    "type properties patternProperties required additionalProperties items enum const allOf anyOf not $ref".split()
)
_MAX_OPTIONAL = 10
ROOT = "#"


class _Loader:
    def __init__(self, root):
        self.root = root
        self.prods: dict = {}
        self.keys: list = []
        self.enums: list = []
        self.unsupported: set = set()
        self.fresh = 0

    def nonterminal(self, schema, pointer: str) -> str:
        if pointer in self.prods:
            return pointer
        self.prods[pointer] = ()  # placeholder, allows recursion
        self.prods[pointer] = self.translate(schema, pointer)
        return pointer

    def helper(self, pointer: str, prods: tuple) -> str:
        self.fresh += 1
        name = f"{pointer}@{self.fresh}"
        self.prods[name] = prods
        return name

    def universal(self) -> str:
        for nt, ps in universal_productions().items():
            self.prods.setdefault(nt, ps)
        return UNIVERSAL_VALUE

    def resolve(self, ref: str):
        if not ref.startswith("#"):
            raise MalformedSchema(f"only local references are supported: {ref!r}")
        node = self.root
        parts = [p for p in ref[1:].split("/") if p]
        for part in parts:
            part = part.replace("~1", "/").replace("~0", "~")
            try:
                node = node[int(part)] if isinstance(node, list) else node[part]
            except (KeyError, IndexError, ValueError):
                raise MalformedSchema(f"dangling reference {ref!r}") from None
        return node, "#" + "".join("/" + p for p in parts) if parts else ROOT

    def translate(self, schema, pointer: str) -> tuple:
        if schema is True:
            return (Or((self.universal(),)),)
        if schema is False:
            return (Or(()),)
        if not isinstance(schema, dict):
            raise MalformedSchema(f"schema at {pointer} must be an object or a boolean")
        for kw in schema:
            if kw not in _HANDLED and kw not in _IGNORED:
                self.unsupported.add(kw)
        parts = []
        if "$ref" in schema:
            node, target = self.resolve(schema["$ref"])
            parts.append((Or((self.nonterminal(node, target),)),))
        types = schema.get("type")
        if types is None and any(k in schema for k in ("properties", "patternProperties", "required")):
            types = "object"
        if types is None and "items" in schema:
            types = "array"
        if types is not None:
            if isinstance(types, str):
                types = [types]
            alts = []
            for t in types:
                alts.extend(self.typed(t, schema, pointer))
            parts.append(tuple(alts))
        if "enum" in schema or "const" in schema:
            values = schema["enum"] if "enum" in schema else [schema["const"]]
            for v in values:
                if v not in self.enums and not isinstance(v, (dict, list)):
                    self.enums.append(v)
            parts.append((Primitive("e"),))
        for kw, cls in (("allOf", And), ("anyOf", Or)):
            if kw in schema:
                subs = [self.nonterminal(s, f"{pointer}/{kw}/{i}") for i, s in enumerate(schema[kw])]
                parts.append((cls(tuple(subs)),))
        if "not" in schema:
            parts.append((Not(self.nonterminal(schema["not"], f"{pointer}/not")),))
        if not parts:
            return (Or((self.universal(),)),)
        if len(parts) == 1:
            return parts[0]
        return (And(tuple(self.helper(pointer, p) for p in parts)),)

    def typed(self, t: str, schema: dict, pointer: str) -> list:
        if t == "string":
            return [Primitive("s")]
        if t == "integer":
            return [Primitive("i")]
        if t == "number":
            return [Primitive("n"), Primitive("i")]
        if t == "boolean":
            return [Primitive("true"), Primitive("false")]
        if t == "null":
            return [Primitive("null")]
        if t == "object":
            return self.object(schema, pointer)
        if t == "array":
            return self.array(schema, pointer)
        raise MalformedSchema(f"unknown type {t!r} at {pointer}")

    def add_key(self, key: str) -> None:
        if key not in self.keys:
            self.keys.append(key)

    def object(self, schema: dict, pointer: str) -> list:
        extra = schema.get("additionalProperties", None)
        if extra not in (None, False):
            self.unsupported.add("additionalProperties")
        props = []
        for kw in ("properties", "patternProperties"):
            for key, sub in (schema.get(kw) or {}).items():
                self.add_key(key)
                props.append((key, self.nonterminal(sub, f"{pointer}/{kw}/{_escape(key)}")))
        known = {k for k, _ in props}
        for key in schema.get("required", ()):
            if key not in known:
                self.add_key(key)
                props.append((key, self.universal()))
                known.add(key)
        if not props:
            if extra is False or "properties" in schema:
                return [Object(())]
            return [AnyObject(self.universal())]
        required = set(schema.get("required", ()))
        optional = [k for k, _ in props if k not in required]
        if len(optional) > _MAX_OPTIONAL:
            raise MalformedSchema(f"too many optional keys at {pointer} ({len(optional)})")
        out = []
        for n in range(len(optional), -1, -1):
            for dropped in combinations(optional, len(optional) - n):
                out.append(Object(tuple(kv for kv in props if kv[0] not in dropped)))
        return out

    def array(self, schema: dict, pointer: str) -> list:
        items = schema.get("items")
        if isinstance(items, list):
            self.unsupported.add("items (tuple form)")
            return []
        item = self.universal() if items is None else self.nonterminal(items, f"{pointer}/items")
        lo, hi = schema.get("minItems"), schema.get("maxItems")
        if lo is not None and lo == hi:
            return [ArrayFixed(item, int(lo))]
        return [ArrayStar(item)]


def _escape(key: str) -> str:
    return key.replace("~", "~0").replace("/", "~1")


def load_json_schema(schema_text: str | dict, order: Iterable[str] | None = None) -> Grammar:
    """Translate a JSON Schema (keyword subset) into a grammar.

    Optional object keys become one Object alternative per subset of present
    keys. ``order`` fixes the key order; the default is lexicographic.
    """
    if isinstance(schema_text, str):
        try:
            root = json.loads(schema_text)
        except json.JSONDecodeError as exc:
            raise MalformedSchema(f"schema is not JSON: {exc}") from None
    else:
        root = schema_text
    loader = _Loader(root)
    loader.nonterminal(root, ROOT)
    if loader.unsupported:
        raise UnsupportedKeyword(loader.unsupported)
    keys = sorted(loader.keys) if order is None else list(order)
    if set(keys) != set(loader.keys):
        raise MalformedSchema("the key order must list exactly the schema keys")
    grammar = Grammar(loader.prods, (ROOT,), PushdownAlphabet.json(keys), tuple(loader.enums))
    require_well_formed(grammar)
    return grammar
