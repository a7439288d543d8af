"""Abstract pushdown alphabet for JSON documents and the streaming lexer.

Concrete JSON text is abstracted into a word over three kinds of symbols:
calls (``{`` and ``[``), returns (``}`` and ``]``) and internal symbols
(keys, primitive value classes and the comma ``#``).
"""

from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple, Sequence

CALL = "call"
RETURN = "return"
INTERNAL = "internal"


class Symbol(NamedTuple):
    """One abstract symbol. Keys carry ``key=True`` so a key named ``s`` differs from the primitive ``s``."""

    kind: str
    name: str
    key: bool = False

    def __repr__(self) -> str:
        return f"{self.name}:" if self.key else self.name

    __str__ = __repr__


LBRACE = Symbol(CALL, "{")
LBRACKET = Symbol(CALL, "[")
RBRACE = Symbol(RETURN, "}")
RBRACKET = Symbol(RETURN, "]")
COMMA = Symbol(INTERNAL, "#")

PRIMITIVE_NAMES = ("true", "false", "null", "s", "n", "i", "e")
PRIM = {name: Symbol(INTERNAL, name) for name in PRIMITIVE_NAMES}
PRIMITIVES = tuple(PRIM.values())

JSON_MATCHING = {LBRACE: RBRACE, LBRACKET: RBRACKET}


def Key(name: str) -> Symbol:
    return Symbol(INTERNAL, name, True)


Word = tuple  # tuple[Symbol, ...]


class LexError(Exception):
    pass


class MalformedJson(LexError):
    def __init__(self, message: str, offset: int = -1):
        super().__init__(message if offset < 0 else f"{message} at character {offset}")
        self.offset = offset


class UnknownKey(LexError):
    def __init__(self, key: str):
        super().__init__(f"unknown key {key!r}")
        self.key = key


class NotWellMatched(ValueError):
    pass


@dataclass(frozen=True)
class PushdownAlphabet:
    """A partition of symbols into calls, returns and internals, plus the call/return pairing.

    ``json(keys)`` builds the JSON alphabet; ``keys`` keeps the total key order.
    Other partitions (for textbook automata) are built with the plain constructor.
    """

    calls: tuple
    returns: tuple
    internals: tuple
    matching: tuple  # pairs (call, return)
    keys: tuple = ()
    _match: dict = field(default=None, compare=False, hash=False, repr=False)
    _rank: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_match", dict(self.matching))
        object.__setattr__(self, "_rank", {k: i for i, k in enumerate(self.keys)})
        if len(set(self.keys)) != len(self.keys):
            raise ValueError("keys must be pairwise distinct")
        groups = [set(self.calls), set(self.returns), set(self.internals)]
        if sum(map(len, groups)) != len(set().union(*groups)):
            raise ValueError("calls, returns and internals must be disjoint")
        if set(self._match) != groups[0] or set(self._match.values()) != groups[1]:
            raise ValueError("matching must pair every call with a return")

    @classmethod
    def json(cls, keys: Iterable[str]) -> "PushdownAlphabet":
        keys = tuple(keys)
        internals = tuple(Key(k) for k in keys) + PRIMITIVES + (COMMA,)
        return cls(
            calls=(LBRACE, LBRACKET),
            returns=(RBRACE, RBRACKET),
            internals=internals,
            matching=((LBRACE, RBRACE), (LBRACKET, RBRACKET)),
            keys=keys,
        )

    def match(self, call: Symbol) -> Symbol:
        return self._match[call]

    def key_rank(self, key: str) -> int:
        return self._rank[key]

    def has_key(self, key: str) -> bool:
        return key in self._rank

    def sorted_keys(self, keys: Iterable[str]) -> list:
        return sorted(keys, key=self._rank.__getitem__)

    def with_order(self, keys: Sequence[str]) -> "PushdownAlphabet":
        if sorted(keys) != sorted(self.keys):
            raise ValueError("an order must list exactly the alphabet keys")
        return PushdownAlphabet.json(keys)

    @property
    def symbols(self) -> tuple:
        return self.calls + self.returns + self.internals

    @property
    def key_symbols(self) -> tuple:
        return tuple(Key(k) for k in self.keys)

    @property
    def value_symbols(self) -> tuple:
        return tuple(s for s in self.internals if s in PRIMITIVES)


def balance(word: Iterable[Symbol]) -> int:
    total = 0
    for sym in word:
        if sym.kind == CALL:
            total += 1
        elif sym.kind == RETURN:
            total -= 1
    return total


def is_well_matched(word: Iterable[Symbol], matching: dict | None = None) -> bool:
    matching = JSON_MATCHING if matching is None else matching
    stack = []
    for sym in word:
        if sym.kind == CALL:
            stack.append(matching.get(sym))
        elif sym.kind == RETURN:
            if not stack or stack.pop() != sym:
                return False
    return not stack


def depth(word: Iterable[Symbol], matching: dict | None = None) -> int:
    word = tuple(word)
    if not is_well_matched(word, matching):
        raise NotWellMatched(format_word(word))
    best = level = 0
    for sym in word:
        if sym.kind == CALL:
            level += 1
            best = max(best, level)
        elif sym.kind == RETURN:
            level -= 1
    return best


class SymbolStream:
    """Pull-based symbol source with exactly one symbol of lookahead.

    ``consumed`` counts symbols handed out by ``next``; a peeked symbol is not consumed.
    """

    def __init__(self, source: Iterable[Symbol]):
        self._it = iter(source)
        self._buf: list = []
        self.consumed = 0

    def peek(self) -> Symbol | None:
        if not self._buf:
            self._buf.append(next(self._it, None))
        return self._buf[0]

    def next(self) -> Symbol | None:
        sym = self._buf.pop() if self._buf else next(self._it, None)
        if sym is not None:
            self.consumed += 1
        return sym

    def __iter__(self) -> Iterator[Symbol]:
        while (sym := self.next()) is not None:
            yield sym


_NUMBER = re.compile(r"-?(0|[1-9][0-9]*)(\.[0-9]+)?([eE][+-]?[0-9]+)?\Z")
_INTEGER = re.compile(r"-?(0|[1-9][0-9]*)\Z")
_WS = " \t\r\n"
_LITERAL_START = "-0123456789tfn"
_LITERAL_CHARS = set("+-.0123456789eEtruefalsn")


def _literal_identity(value) -> tuple:
    # True == 1 in Python, so tag values with their type before set lookup
    return (type(value).__name__, value)


class _CharReader:
    def __init__(self, stream: IO[str], chunk_size: int):
        self.stream = stream
        self.chunk_size = chunk_size
        self.buf = ""
        self.pos = 0
        self.offset = 0

    def peek(self) -> str:
        if self.pos >= len(self.buf):
            self.buf = self.stream.read(self.chunk_size)
            self.pos = 0
            if not self.buf:
                return ""
        return self.buf[self.pos]

    def take(self) -> str:
        ch = self.peek()
        if ch:
            self.pos += 1
            self.offset += 1
        return ch

    def skip_ws(self) -> str:
        while (ch := self.peek()) and ch in _WS:
            self.take()
        return ch


def _read_string(reader: _CharReader) -> str:
    start = reader.offset
    reader.take()  # opening quote
    parts = ['"']
    while True:
        ch = reader.take()
        if not ch:
            raise MalformedJson("unterminated string", start)
        parts.append(ch)
        if ch == "\\":
            esc = reader.take()
            if not esc:
                raise MalformedJson("unterminated string", start)
            parts.append(esc)
        elif ch == '"':
            break
    try:
        return json.loads("".join(parts))
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"bad string literal ({exc.msg})", start) from None


def abstract_lex(
    text: str | IO[str],
    alphabet: PushdownAlphabet,
    enum_literals: Iterable = (),
    chunk_size: int = 1 << 16,
) -> SymbolStream:
    """Lex concrete JSON text into abstract symbols, reading the input once in chunks.

    ``enum_literals`` lists concrete values that abstract to ``e`` instead of their type class.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    enums = {_literal_identity(v) for v in enum_literals}
    return SymbolStream(_lex(_CharReader(stream, chunk_size), alphabet, enums))


def _lex(reader: _CharReader, alphabet: PushdownAlphabet, enums: set) -> Iterator[Symbol]:
    structural = {"{": LBRACE, "}": RBRACE, "[": LBRACKET, "]": RBRACKET, ",": COMMA}
    while ch := reader.skip_ws():
        if ch in structural:
            reader.take()
            yield structural[ch]
        elif ch == '"':
            value = _read_string(reader)
            if reader.skip_ws() == ":":
                reader.take()
                if not alphabet.has_key(value):
                    raise UnknownKey(value)
                yield Key(value)
            else:
                yield PRIM["e"] if _literal_identity(value) in enums else PRIM["s"]
        elif ch in _LITERAL_START:
            start = reader.offset
            chars = []
            while (c := reader.peek()) and c in _LITERAL_CHARS:
                chars.append(reader.take())
            yield _literal_symbol("".join(chars), start, enums)
        else:
            raise MalformedJson(f"unexpected character {ch!r}", reader.offset)


def _literal_symbol(raw: str, offset: int, enums: set) -> Symbol:
    if raw in ("true", "false", "null"):
        value = json.loads(raw)
        return PRIM["e"] if _literal_identity(value) in enums else PRIM[raw]
    if not _NUMBER.match(raw):
        raise MalformedJson(f"bad literal {raw!r}", offset)
    value = json.loads(raw)
    if _literal_identity(value) in enums:
        return PRIM["e"]
    return PRIM["i"] if _INTEGER.match(raw) else PRIM["n"]


def parse_abstract(text: str, alphabet: PushdownAlphabet | None = None) -> tuple:
    """Parse the textual abstract form, e.g. ``{ title: s # tags: [ s # s ] }``.

    Keys end with a colon; ``#`` is the comma; everything else is a primitive name.
    """
    fixed = {"{": LBRACE, "}": RBRACE, "[": LBRACKET, "]": RBRACKET, "#": COMMA}
    out = []
    for tok in text.split():
        if tok in fixed:
            out.append(fixed[tok])
        elif tok.endswith(":") and len(tok) > 1:
            name = tok[:-1]
            if alphabet is not None and not alphabet.has_key(name):
                raise UnknownKey(name)
            out.append(Key(name))
        elif tok in PRIM:
            out.append(PRIM[tok])
        else:
            raise MalformedJson(f"unknown abstract token {tok!r}")
    return tuple(out)


def format_word(word: Iterable[Symbol]) -> str:
    return " ".join(map(str, word))
