"""Command-line interface.

Exit codes: 0 success (every document valid), 1 some document invalid,
2 usage or I/O error, 3 compilation or learning failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bench
from .artifact import Artifact, ArtifactError, build_artifact, load_artifact, save_artifact
from .automata import EmptyAutomaton, to_dot
from .construct import UnsupportedNegation, compile_one_sevpa
from .generate import Deviation, GeneratorConfig, NoInvalidDocument, NoValidDocument, gen_invalid, gen_valid
from .learn import Teacher, TeacherConfig, learn_one_sevpa
from .schema import (
    ClassicalValidator,
    DuplicateKey,
    Grammar,
    IllFormedGrammar,
    MalformedDocument,
    MalformedSchema,
    Obj,
    UnsupportedKeyword,
    doc_to_word,
    grammar_from_json,
    load_json_schema,
    render_json,
    word_to_doc,
)
from .tokens import LexError, UnknownKey, abstract_lex, format_word

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_COMPILE = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def parse_order(text: str | None):
    if text is None or text == "lexicographic":
        return None
    keys = [k.strip() for k in text.split(",") if k.strip()]
    if not keys:
        raise CliError("--order needs a comma-separated key list or 'lexicographic'")
    return keys


def load_schema(path: str, order=None) -> Grammar:
    """Read a JSON Schema file, or a grammar saved in this package's own format."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: schema is not JSON ({exc.msg})") from None
    try:
        if isinstance(data, dict) and data.get("format") == "grammar":
            grammar = grammar_from_json(data)
            return grammar if order is None else grammar.with_order(order)
        return load_json_schema(data, order)
    except (MalformedSchema, UnsupportedKeyword, IllFormedGrammar, ValueError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_COMPILE) from None


def _inputs(files):
    return files or ["-"]


def _read(name: str) -> str:
    if name == "-":
        return sys.stdin.read()
    try:
        return Path(name).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"{name}: {exc.strerror}") from None


def _report(name: str, valid: bool, detail: str | None, out) -> None:
    out.write(f"{name}: valid\n" if valid else f"{name}: invalid ({detail})\n")


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- subcommands --------------------------------------------------------------------


def cmd_compile(args, out) -> int:
    grammar = load_schema(args.schema, parse_order(args.order))
    try:
        if args.learn:
            teacher = Teacher(grammar, TeacherConfig(max_depth=args.depth, seed=args.seed))
            result = learn_one_sevpa(teacher, max_rounds=args.max_rounds, max_queries=args.max_queries)
            art = build_artifact(result.hypothesis, result.incomplete, grammar.enum_literals)
            summary = {"method": "learn", **{k: v for k, v in result.report().items() if k != "counterexamples"}}
        else:
            art = build_artifact(compile_one_sevpa(grammar, ordered=True), False, grammar.enum_literals)
            summary = {"method": "compile"}
    except (EmptyAutomaton, UnsupportedNegation, IllFormedGrammar) as exc:
        raise CliError(f"{args.schema}: {exc}", EXIT_COMPILE) from None
    summary.update(states=len(art.automaton.states), key_graph_vertices=len(art.key_graph.vertices), flags=art.flags)
    try:
        save_artifact(art, args.output)
    except OSError as exc:
        raise CliError(f"{args.output}: {exc.strerror}") from None
    out.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def _load(path: str) -> Artifact:
    try:
        return load_artifact(path)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None
    except ArtifactError as exc:
        raise CliError(str(exc)) from None


def cmd_validate(args, out) -> int:
    art = _load(args.artifact)
    names = _inputs(args.files)

    def check(name):
        text = _read(name)
        verdict = art.validator(fast_fail=args.fast_fail).validate_text(text, art.enum_literals)
        if verdict.valid:
            return name, True, None
        return name, False, f"{verdict.kind} error at symbol {verdict.index}: {verdict.reason}"

    results = _map(check, names, args.jobs)
    for name, ok, detail in results:
        _report(name, ok, detail, out)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_INVALID


def classical_verdict(grammar: Grammar, text: str) -> tuple[bool, str | None]:
    try:
        word = tuple(abstract_lex(text, grammar.alphabet, grammar.enum_literals))
    except UnknownKey as exc:
        return False, f"schema error: {exc}"
    except LexError as exc:
        return False, f"malformed error: {exc}"
    try:
        doc = word_to_doc(word)
    except MalformedDocument as exc:
        kind = "schema" if isinstance(exc, DuplicateKey) else "malformed"
        return False, f"{kind} error: {exc}"
    if not isinstance(doc, Obj):
        return False, "schema error: the document is not an object"
    if not ClassicalValidator(grammar).validate(doc):
        return False, "schema error: the document does not satisfy the schema"
    return True, None


def cmd_validate_classical(args, out) -> int:
    grammar = load_schema(args.schema, parse_order(args.order))
    names = _inputs(args.files)
    results = _map(lambda n: (n, *classical_verdict(grammar, _read(n))), names, args.jobs)
    for name, ok, detail in results:
        _report(name, ok, detail, out)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_INVALID


def cmd_generate(args, out) -> int:
    grammar = load_schema(args.schema, parse_order(args.order))
    seed = None if args.exhaustive else args.random
    config = GeneratorConfig(max_depth=args.depth, seed=seed)
    kinds = tuple(Deviation[k.upper()] for k in args.deviation) if args.deviation else tuple(Deviation)
    docs = gen_valid(grammar, config) if args.valid else gen_invalid(grammar, config, kinds)
    enum_value = grammar.enum_literals[0] if grammar.enum_literals else None
    try:
        for doc in itertools.islice(docs, args.count):
            if args.format == "abstract":
                out.write(format_word(doc_to_word(doc)) + "\n")
            else:
                out.write(render_json(doc, enum_value) + "\n")
    except (NoValidDocument, NoInvalidDocument) as exc:
        raise CliError(str(exc), EXIT_COMPILE) from None
    return EXIT_OK


def cmd_bench(args, out) -> int:
    if args.family == "worstcase":
        report = bench.worstcase_report(args.ell, tuple(args.items))
    else:
        ns = range(2, args.n + 1) if args.sweep else [args.n]
        report = bench.permfamily_report(ns, unordered_upto=args.unordered_upto)
    out.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_graph(args, out) -> int:
    art = _load(args.artifact)
    lines = to_dot(art.automaton) if args.automaton else art.key_graph.to_dot()
    for line in lines:
        out.write(line + "\n")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vpajson", description="Streaming JSON schema validation with pushdown automata.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="build a validator artifact from a schema")
    c.add_argument("schema")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--order", help="comma-separated key order, or 'lexicographic' (default)")
    c.add_argument("--learn", action="store_true", help="learn the automaton instead of constructing it")
    c.add_argument("--depth", type=int, default=3, help="teacher document depth when learning")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-rounds", type=int, default=50)
    c.add_argument("--max-queries", type=int, default=1_000_000)
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("validate", help="stream documents through an artifact")
    v.add_argument("artifact")
    v.add_argument("files", nargs="*", help="documents ('-' or nothing reads standard input)")
    v.add_argument("--fast-fail", action="store_true")
    v.add_argument("-j", "--jobs", type=int, default=1)
    v.set_defaults(func=cmd_validate)

    vc = sub.add_parser("validate-classical", help="validate documents with the tree-walking validator")
    vc.add_argument("schema")
    vc.add_argument("files", nargs="*")
    vc.add_argument("--order")
    vc.add_argument("-j", "--jobs", type=int, default=1)
    vc.set_defaults(func=cmd_validate_classical)

    g = sub.add_parser("generate", help="generate valid or invalid documents")
    g.add_argument("schema")
    g.add_argument("--order")
    kind = g.add_mutually_exclusive_group(required=True)
    kind.add_argument("--valid", action="store_true")
    kind.add_argument("--invalid", action="store_true")
    mode = g.add_mutually_exclusive_group(required=True)
    mode.add_argument("--random", type=int, metavar="SEED")
    mode.add_argument("--exhaustive", action="store_true")
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--deviation", action="append", choices=[d.name.lower() for d in Deviation])
    g.add_argument("--format", choices=["json", "abstract"], default="json")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="benchmark schema families (JSON report)")
    bsub = b.add_subparsers(dest="family", required=True)
    w = bsub.add_parser("worstcase")
    w.add_argument("--ell", type=int, default=10)
    w.add_argument("--items", type=int, nargs="+", default=[1, 10, 100])
    w.set_defaults(func=cmd_bench)
    pf = bsub.add_parser("permfamily")
    pf.add_argument("--n", type=int, default=4)
    pf.add_argument("--sweep", action="store_true", help="report every size from 2 to n")
    pf.add_argument("--unordered-upto", type=int, default=0, help="also compile the unordered automaton up to this n")
    pf.set_defaults(func=cmd_bench)

    gr = sub.add_parser("graph", help="print the key graph (or the automaton) in DOT")
    gr.add_argument("artifact")
    gr.add_argument("--dot", action="store_true", help="DOT output (the only format)")
    gr.add_argument("--automaton", action="store_true")
    gr.set_defaults(func=cmd_graph)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "count", 1) is not None and getattr(args, "count", 1) < 0:
        sys.stderr.write("vpajson: --count must be non-negative\n")
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except CliError as exc:
        sys.stderr.write(f"vpajson: {exc}\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
