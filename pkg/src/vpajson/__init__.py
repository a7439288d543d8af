"""Streaming JSON schema validation with visibly pushdown automata.

Schemas compile (or are learned) into a fixed-key-order 1-SEVPA; its key graph
lets a single left-to-right pass accept objects whose keys come in any order.
"""

from .artifact import Artifact, build_artifact, load_artifact, save_artifact
from .automata import OneSevpa, Vpa, accepts, determinize, minimize, reachability, to_one_sevpa
from .construct import compile_one_sevpa
from .keygraph import KeyGraph, build_key_graph, valid_paths
from .learn import Teacher, TeacherConfig, learn_one_sevpa
from .schema import ClassicalValidator, Grammar, load_json_schema
from .tokens import PushdownAlphabet, abstract_lex
from .validate import StreamingValidator, Verdict

__version__ = "0.1.0"

__all__ = [
    "Artifact",
    "ClassicalValidator",
    "Grammar",
    "KeyGraph",
    "OneSevpa",
    "PushdownAlphabet",
    "StreamingValidator",
    "Teacher",
    "TeacherConfig",
    "Verdict",
    "Vpa",
    "abstract_lex",
    "accepts",
    "build_artifact",
    "build_key_graph",
    "compile_one_sevpa",
    "determinize",
    "learn_one_sevpa",
    "load_artifact",
    "load_json_schema",
    "minimize",
    "reachability",
    "save_artifact",
    "to_one_sevpa",
    "valid_paths",
]
