import io
import itertools
import json
import subprocess
import sys

import pytest

import helpers
from helpers import DOCUMENT, DOCUMENT_PERMUTED
from vpajson.artifact import ArtifactError, load_artifact, save_artifact
from vpajson.cli import EXIT_COMPILE, EXIT_INVALID, EXIT_OK, EXIT_USAGE, main, parse_order
from vpajson.generate import GeneratorConfig, gen_invalid, gen_valid
from vpajson.schema import render_json


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "conference.json").write_text(helpers.data_text("conference.json"))
    (d / "doc.json").write_text(DOCUMENT)
    (d / "permuted.json").write_text(DOCUMENT_PERMUTED)
    (d / "truncated.json").write_text(DOCUMENT[: len(DOCUMENT) // 2])
    code, out = run("compile", d / "conference.json", "-o", d / "conf.vpa.json")
    assert code == EXIT_OK
    assert json.loads(out)["states"] == len(helpers.compiled("conference").automaton.states)
    return d


def test_validate_sample_and_permutation(workdir):
    code, out = run("validate", workdir / "conf.vpa.json", workdir / "doc.json", workdir / "permuted.json")
    assert code == EXIT_OK
    assert out.count(": valid") == 2


def test_truncated_document_reports_index(workdir):
    code, out = run("validate", workdir / "conf.vpa.json", workdir / "truncated.json")
    assert code == EXIT_INVALID
    assert "invalid (malformed error at symbol" in out


def test_usage_errors(workdir):
    assert run("validate", workdir / "conf.vpa.json", workdir / "missing.json")[0] == EXIT_USAGE
    assert run("frobnicate")[0] == EXIT_USAGE
    assert run("validate", workdir / "missing.vpa.json", workdir / "doc.json")[0] == EXIT_USAGE
    assert run("generate", workdir / "conference.json", "--valid", "--count", "-1")[0] == EXIT_USAGE


def test_compile_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"type": "object", "propertyNames": {"pattern": "x"}}')
    assert run("compile", bad, "-o", tmp_path / "x.json")[0] == EXIT_COMPILE
    scalar = tmp_path / "scalar.json"
    scalar.write_text('{"type": "string"}')
    assert run("compile", scalar, "-o", tmp_path / "x.json")[0] == EXIT_COMPILE


def test_order_option():
    # None selects the lexicographic default of the schema loader
    assert parse_order(None) is None and parse_order("lexicographic") is None
    assert parse_order("b, a") == ["b", "a"]


def test_explicit_order_changes_nothing_observable(workdir, tmp_path):
    out_file = tmp_path / "ordered.json"
    code, _ = run("compile", workdir / "conference.json", "-o", out_file,
                  "--order", "year,name,conference,keywords,title")
    assert code == EXIT_OK
    code, out = run("validate", out_file, workdir / "doc.json", workdir / "permuted.json")
    assert code == EXIT_OK


def test_learned_compressed_artifact(workdir, tmp_path):
    target = tmp_path / "learned.json.gz"
    code, out = run("compile", workdir / "conference.json", "-o", target, "--learn", "--depth", "3")
    assert code == EXIT_OK and json.loads(out)["method"] == "learn"
    assert target.read_bytes()[:2] == b"\x1f\x8b"
    assert run("validate", target, workdir / "doc.json", workdir / "permuted.json")[0] == EXIT_OK


def test_tampered_artifact_is_refused(workdir, tmp_path):
    data = json.loads((workdir / "conf.vpa.json").read_text())
    data["automaton"]["finals"] = []
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(data))
    with pytest.raises(ArtifactError):
        load_artifact(bad)
    assert run("validate", bad, workdir / "doc.json")[0] == EXIT_USAGE


def test_standard_input(workdir, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO(DOCUMENT))
    code, out = run("validate", workdir / "conf.vpa.json")
    assert code == EXIT_OK and out == "-: valid\n"


def test_generate_formats(workdir):
    code, out = run("generate", workdir / "conference.json", "--valid", "--random", "3", "--count", "5")
    assert code == EXIT_OK
    docs = [json.loads(line) for line in out.splitlines()]
    assert len(docs) == 5 and all("title" in d for d in docs)
    code, out = run("generate", workdir / "conference.json", "--invalid", "--exhaustive", "--depth", "2",
                    "--count", "3", "--format", "abstract", "--deviation", "duplicate_key")
    assert code == EXIT_OK and len(out.splitlines()) == 3
    assert all(line.startswith("{") for line in out.splitlines())


def test_graph_dot(workdir):
    code, out = run("graph", workdir / "conf.vpa.json", "--dot")
    assert code == EXIT_OK and out.startswith("digraph keygraph {")
    code, out = run("graph", workdir / "conf.vpa.json", "--dot", "--automaton")
    assert code == EXIT_OK and "->" in out


def test_bench_reports_are_json():
    code, out = run("bench", "permfamily", "--n", "3", "--sweep")
    report = json.loads(out)
    assert code == EXIT_OK and [r["n"] for r in report["rows"]] == [2, 3]
    code, out = run("bench", "worstcase", "--ell", "3", "--items", "1", "4")
    rows = json.loads(out)["rows"]
    assert code == EXIT_OK and all(r["classical_valid"] == r["streaming_valid"] for r in rows)


def test_module_entry_point(workdir):
    proc = subprocess.run(
        [sys.executable, "-m", "vpajson", "validate", str(workdir / "conf.vpa.json"), str(workdir / "truncated.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_INVALID and "truncated.json: invalid" in proc.stdout


# -- agreement between the two validators ---------------------------------------------


def _write_corpus(directory, name):
    g = helpers.grammar(name)
    cfg = GeneratorConfig(max_depth=3, seed=None)
    docs = list(gen_valid(g, cfg)) + list(itertools.islice(gen_invalid(g, cfg), 150))
    enum_value = g.enum_literals[0] if g.enum_literals else None
    paths = []
    for i, doc in enumerate(docs):
        p = directory / f"{name}-{i:04d}.json"
        p.write_text(render_json(doc, enum_value))
        paths.append(p)
    # hand-written extras: reordered, truncated, foreign key, not an object
    extras = [DOCUMENT_PERMUTED, DOCUMENT[:-3], '{"unknown": 1}', "[1, 2]", "{}"] if name == "conference" else ["{}"]
    for j, text in enumerate(extras):
        p = directory / f"{name}-extra{j}.json"
        p.write_text(text)
        paths.append(p)
    return paths


def _verdicts(out):
    return [line.split(": ", 1)[1].split(" ", 1)[0] for line in out.splitlines()]


@pytest.mark.parametrize("name", list(helpers.ORDERS))
def test_streaming_and_classical_commands_agree(name, tmp_path):
    schema = tmp_path / f"{name}.json"
    schema.write_text(helpers.data_text(f"{name}.json"))
    order = helpers.ORDERS[name]
    order_args = ["--order", ",".join(order)] if order else []
    artifact = tmp_path / "a.json"
    assert run("compile", schema, "-o", artifact, *order_args)[0] == EXIT_OK
    files = _write_corpus(tmp_path, name)
    code_s, out_s = run("validate", artifact, *files, "-j", "4")
    code_c, out_c = run("validate-classical", schema, *files, *order_args)
    assert code_s == code_c == EXIT_INVALID
    assert _verdicts(out_s) == _verdicts(out_c)
    assert "valid" in _verdicts(out_s)


@pytest.mark.parametrize("name", list(helpers.ORDERS))
def test_saved_artifact_gives_identical_verdicts(name, tmp_path):
    art = helpers.compiled(name)
    path = tmp_path / "art.json"
    save_artifact(art, path)
    loaded = load_artifact(path)
    g = helpers.grammar(name)
    cfg = GeneratorConfig(max_depth=3, seed=None)
    docs = list(gen_valid(g, cfg)) + list(itertools.islice(gen_invalid(g, cfg), 200))
    enum_value = g.enum_literals[0] if g.enum_literals else None
    a, b = art.validator(), loaded.validator()
    for doc in docs:
        text = render_json(doc, enum_value)
        assert a.validate_text(text, art.enum_literals) == b.validate_text(text, loaded.enum_literals)
