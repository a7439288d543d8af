"""Saved validators: a trimmed 1-SEVPA bundled with its key graph.

The key graph records the SHA-256 of the automaton it was built from and
``load_artifact`` refuses a file where the two no longer match. Paths ending in
``.gz`` are compressed.
"""

from __future__ import annotations

import gzip
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import automata
from .automata import OneSevpa, ReachRelation
from .keygraph import KeyGraph, build_key_graph, find_repeated_key_path
from .tokens import PushdownAlphabet
from .validate import StreamingValidator

ARTIFACT_FORMAT = "vpajson-artifact"
ARTIFACT_VERSION = 1


class ArtifactError(ValueError):
    pass


def automaton_digest(sevpa: OneSevpa) -> str:
    blob = json.dumps(automata.sevpa_to_json(sevpa), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Artifact:
    automaton: OneSevpa
    key_graph: KeyGraph
    flags: dict = field(default_factory=dict)
    enum_literals: tuple = ()
    reach: ReachRelation | None = field(default=None, repr=False)

    @property
    def alphabet(self) -> PushdownAlphabet:
        return self.automaton.alphabet

    @property
    def tolerant(self) -> bool:
        return bool(self.flags.get("repeated_key_paths"))

    def validator(self, **options) -> StreamingValidator:
        options.setdefault("tolerant", self.tolerant)
        return StreamingValidator(self.automaton, self.key_graph, **options)

    def to_json(self) -> dict:
        graph = self.key_graph.to_json()
        graph["automaton_sha256"] = automaton_digest(self.automaton)
        return {
            "format": ARTIFACT_FORMAT,
            "version": ARTIFACT_VERSION,
            "alphabet": automata.alphabet_to_json(self.alphabet),
            "automaton": automata.sevpa_to_json(self.automaton),
            "key_graph": graph,
            "flags": dict(self.flags),
            "enum_literals": list(self.enum_literals),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Artifact":
        if data.get("format") != ARTIFACT_FORMAT:
            raise ArtifactError("not a validator artifact")
        if data.get("version") != ARTIFACT_VERSION:
            raise ArtifactError(f"unsupported artifact version {data.get('version')!r}")
        try:
            sevpa = automata.sevpa_from_json(data["automaton"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ArtifactError(f"bad automaton: {exc}") from None
        if automata.alphabet_from_json(data["alphabet"]) != sevpa.alphabet:
            raise ArtifactError("artifact alphabet differs from the automaton alphabet")
        graph_data = data["key_graph"]
        if graph_data.get("automaton_sha256") != automaton_digest(sevpa):
            raise ArtifactError("key graph was built from a different automaton")
        graph = KeyGraph.from_json(graph_data)
        return cls(sevpa, graph, dict(data.get("flags", {})), tuple(data.get("enum_literals", ())))


def build_artifact(sevpa: OneSevpa, incomplete: bool = False, enum_literals=(), with_witnesses: bool = True) -> Artifact:
    """Trim ``sevpa`` and derive its key graph.

    The flag ``repeated_key_paths`` is set when some key-graph path repeats a
    key; validators built from such artifacts cut those paths short.
    """
    reach = automata.reachability(sevpa)
    trimmed = automata.remove_bin_states(sevpa, automata.live_set(sevpa, reach))
    if len(trimmed.states) != len(sevpa.states):
        reach = automata.reachability(trimmed)
    graph = build_key_graph(trimmed, reach, with_witnesses=with_witnesses)
    flags = {
        "incomplete_learning": bool(incomplete),
        "repeated_key_paths": find_repeated_key_path(graph) is not None,
    }
    return Artifact(trimmed, graph, flags, tuple(enum_literals), reach)


def _open(path, mode):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def save_artifact(artifact: Artifact, path) -> None:
    with _open(path, "w") as fh:
        json.dump(artifact.to_json(), fh, sort_keys=True)
        fh.write("\n")


def load_artifact(path) -> Artifact:
    try:
        with _open(path, "r") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: not JSON ({exc.msg})") from None
    return Artifact.from_json(data)
