"""Deterministic negotiations: semantics, soundness, reduction rules and
summarization by merge, shortcut and iteration."""

from .generate import generate_sound_sdn, random_mutant, retarget_mutants, with_random_relations
from .model import Atom, Negotiation, NotDeterministic, ValidationError, is_deterministic, negotiation, validate
from .rules import RuleApplication, Transcript, apply_iteration, apply_merge, apply_shortcut, replay
from .semantics import (
    LimitExceeded,
    Marking,
    Sound,
    Unsound,
    reachability_graph,
    soundness_oracle,
    summary_oracle,
)
from .structure import enumerate_loops, fragments, negotiation_graph, split_negotiation, synchronizers
from .summarize import ReductionFailure, Summary, check_sound_reduction, summarize, summarize_acyclic
from .textio import ParseError, parse, serialize, to_dot
from .transformers import Label, Relation, StateSpace, compose, star, union

__version__ = "0.1.0"

__all__ = [
    "Atom", "Negotiation", "NotDeterministic", "ValidationError", "is_deterministic", "negotiation", "validate",
    "Label", "Relation", "StateSpace", "compose", "star", "union",
    "LimitExceeded", "Marking", "Sound", "Unsound", "reachability_graph", "soundness_oracle", "summary_oracle",
    "enumerate_loops", "fragments", "negotiation_graph", "split_negotiation", "synchronizers",
    "RuleApplication", "Transcript", "apply_iteration", "apply_merge", "apply_shortcut", "replay",
    "ReductionFailure", "Summary", "check_sound_reduction", "summarize", "summarize_acyclic",
    "ParseError", "parse", "serialize", "to_dot",
    "generate_sound_sdn", "random_mutant", "retarget_mutants", "with_random_relations",
]
