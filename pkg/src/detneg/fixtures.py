"""Small hand-built negotiations used by the tests, demos and CLI corpus.

Several of them are built to exhibit one structural property each; their
docstrings say which choices that property forces.
"""

from __future__ import annotations

from .model import Negotiation, negotiation
from .transformers import Relation, StateSpace

__all__ = [
    "single_atom",
    "chain",
    "fdm_acyclic",
    "fdm_deadlock",
    "fdm_cyclic",
    "fdm_cyclic_mutant",
    "nested_loops",
    "cyclic_without_loops",
    "loop_without_synchronizer",
    "one_agent_loop",
    "self_loop",
    "acyclic_deadlock",
    "side_loop",
    "tangled_loops",
    "party_time_space",
    "party_time_deltas",
    "ALL",
]

FDM = ("D", "F", "M")


def single_atom(outcomes=("r",)) -> Negotiation:
    return negotiation(["a"], {"n0": (["a"], {r: {} for r in outcomes})}, "n0", "n0")


def chain() -> Negotiation:
    """n0 --r--> nf over one agent."""
    return negotiation(
        ["a"],
        {"n0": (["a"], {"r": {"a": "nf"}}), "nf": (["a"], {"end": {}})},
        "n0",
        "nf",
    )


def fdm_acyclic() -> Negotiation:
    """Father/Daughter/Mother, acyclic; Mother has a proper hyperarc."""
    return negotiation(
        FDM,
        {
            "n0": (FDM, {"st": {"F": "nFD", "D": "nFD", "M": ["nDM", "nf"]}}),
            "nFD": (["F", "D"], {
                "yes": {"F": "nf", "D": "nf"},
                "no": {"F": "nf", "D": "nf"},
                "am": {"F": "nf", "D": "nDM"},
            }),
            "nDM": (["D", "M"], {"yes": {"D": "nf", "M": "nf"}, "no": {"D": "nf", "M": "nf"}}),
            "nf": (FDM, {"end": {}}),
        },
        "n0",
        "nf",
    )


def fdm_deadlock() -> Negotiation:
    """The acyclic FDM negotiation with Mother sent only to nDM: unsound."""
    neg = fdm_acyclic()
    nxt = dict(neg.next)
    nxt[("n0", "M", "st")] = frozenset(["nDM"])
    return neg.with_atoms(neg.atoms, nxt)


def fdm_cyclic() -> Negotiation:
    """Father, Daughter and Mother, cyclic and deterministic.

    n1 is the Father/Daughter negotiation of a return time, n2 the proposal
    to Mother; Mother's outcome ``r`` sends Father and Daughter back to n1.
    """
    return negotiation(
        FDM,
        {
            "n0": (FDM, {
                "yes": {"F": "n1", "D": "n1", "M": "n2"},
                "no": {"F": "nf", "D": "nf", "M": "nf"},
            }),
            "n1": (["F", "D"], {"t": {"F": "n2", "D": "n2"}}),
            "n2": (FDM, {
                "yes": {"F": "nf", "D": "nf", "M": "nf"},
                "r": {"F": "n1", "D": "n1", "M": "n2"},
            }),
            "nf": (FDM, {"end": {}}),
        },
        "n0",
        "nf",
    )


def fdm_cyclic_mutant() -> Negotiation:
    """fdm_cyclic with Mother's ``yes`` retargeted to n2: Mother can never
    reach the final atom after approving. D and F can keep looping, but the
    final marking is unreachable once Mother has left n0."""
    neg = fdm_cyclic()
    nxt = dict(neg.next)
    nxt[("n2", "M", "yes")] = frozenset(["n2"])
    return neg.with_atoms(neg.atoms, nxt)


def nested_loops() -> Negotiation:
    """Cyclic SDN with three named loops.

    It has the loops (n1,a)(n2,a)(n4,a)(n5,b), (n1,b)(n3,a)(n5,b) and
    (n2,a)(n4,b). The first is synchronized only by n1 and n5 and the others
    by all their atoms, so the parties of n1, n3 and n5 strictly contain
    those of n2 and n4. Two agents suffice: F and D, with D alone in n2
    and n4. The inner loop's fragment is the one reduced first.
    """
    FD = ("D", "F")
    return negotiation(
        FD,
        {
            "n0": (FD, {"a": {"F": "n1", "D": "n1"}}),
            "n1": (FD, {"a": {"F": "n5", "D": "n2"}, "b": {"F": "n3", "D": "n3"}}),
            "n2": (["D"], {"a": {"D": "n4"}}),
            "n3": (FD, {"a": {"F": "n5", "D": "n5"}}),
            "n4": (["D"], {"a": {"D": "n5"}, "b": {"D": "n2"}}),
            "n5": (FD, {"a": {"F": "nf", "D": "nf"}, "b": {"F": "n1", "D": "n1"}}),
            "nf": (FD, {"end": {}}),
        },
        "n0",
        "nf",
    )


def cyclic_without_loops() -> Negotiation:
    """Sound, cyclic, non-deterministic, without loops: the only large step
    is n0 n1 n2 n1 nf (single outcome per atom)."""
    return negotiation(
        ("a", "b"),
        {
            "n0": (["a", "b"], {"r": {"a": "n1", "b": "n2"}}),
            "n1": (["a"], {"r": {"a": ["n2", "nf"]}}),
            "n2": (["a", "b"], {"r": {"a": "n1", "b": "nf"}}),
            "nf": (["a", "b"], {"r": {}}),
        },
        "n0",
        "nf",
    )


def loop_without_synchronizer() -> Negotiation:
    """Sound, cyclic, non-deterministic; n1 n2 is a loop whose atoms have
    incomparable party sets, hence no synchronizer."""
    abc = ("a", "b", "c")
    return negotiation(
        abc,
        {
            "n0": (abc, {"r": {"a": "n1", "b": "n1", "c": "n2"}}),
            "n1": (["a", "b"], {"r": {"a": ["n1", "nf"], "b": "n2"}}),
            "n2": (["b", "c"], {"r": {"b": ["n1", "nf"], "c": ["n2", "nf"]}}),
            "nf": (abc, {"r": {}}),
        },
        "n0",
        "nf",
    )


def one_agent_loop() -> Negotiation:
    """One-agent SDN with the single loop (n1,a)(n3,a)(n4,b).

    n3 has a second input arc (from n2), three outcomes and n4 two, so the
    first replayed shortcut adds three outcomes to n1 without removing n3 and
    the second adds two without removing n4.
    """
    A = ("a",)
    return negotiation(
        A,
        {
            "n0": (A, {"a": {"a": "n1"}, "b": {"a": "n2"}}),
            "n1": (A, {"a": {"a": "n3"}, "b": {"a": "nf"}}),
            "n2": (A, {"a": {"a": "n3"}}),
            "n3": (A, {"a": {"a": "n4"}, "b": {"a": "nf"}, "c": {"a": "n5"}}),
            "n4": (A, {"b": {"a": "n1"}, "c": {"a": "nf"}}),
            "n5": (A, {"a": {"a": "nf"}}),
            "nf": (A, {"end": {}}),
        },
        "n0",
        "nf",
    )


def self_loop() -> Negotiation:
    """n0 -> n1, where n1 either repeats (all parties back to n1) or exits."""
    ab = ("a", "b")
    return negotiation(
        ab,
        {
            "n0": (ab, {"go": {"a": "n1", "b": "n1"}}),
            "n1": (ab, {"again": {"a": "n1", "b": "n1"}, "exit": {"a": "nf", "b": "nf"}}),
            "nf": (ab, {"end": {}}),
        },
        "n0",
        "nf",
    )


def acyclic_deadlock() -> Negotiation:
    """Acyclic, deterministic and unsound: after ``x`` agent a waits at n2
    while agent b waits at n1, and each atom needs both."""
    ab = ("a", "b")
    return negotiation(
        ab,
        {
            "n0": (ab, {"ok": {"a": "n1", "b": "n1"}, "x": {"a": "n2", "b": "n1"}}),
            "n1": (ab, {"r": {"a": "n2", "b": "n2"}}),
            "n2": (ab, {"r": {"a": "nf", "b": "nf"}}),
            "nf": (ab, {"end": {}}),
        },
        "n0",
        "nf",
    )


def side_loop() -> Negotiation:
    """n0 and n1 loop through each other and n1 also loops on itself. The
    self-loop lies on no elementary cycle through n0, yet it can be repeated
    inside the loop n0 synchronizes."""
    A = ("a",)
    return negotiation(
        A,
        {
            "n0": (A, {"in": {"a": "n1"}, "out": {"a": "nf"}}),
            "n1": (A, {"stay": {"a": "n1"}, "back": {"a": "n0"}}),
            "nf": (A, {"end": {}}),
        },
        "n0",
        "nf",
    )


def tangled_loops() -> Negotiation:
    """One agent on the cycles n0-n1, n1-n2 and n0-n3. Whichever atom is
    chosen as synchronizer, its fragment still contains a cycle avoiding it."""
    A = ("a",)
    return negotiation(
        A,
        {
            "i": (A, {"go": {"a": "n0"}}),
            "n0": (A, {"p": {"a": "n1"}, "q": {"a": "n3"}, "x": {"a": "nf"}}),
            "n1": (A, {"p": {"a": "n0"}, "q": {"a": "n2"}}),
            "n2": (A, {"p": {"a": "n1"}}),
            "n3": (A, {"p": {"a": "n0"}}),
            "nf": (A, {"end": {}}),
        },
        "i",
        "nf",
    )


def party_time_space(times=(1, 2, 3, 4)) -> StateSpace:
    """Father/Daughter local states: a bottom state plus return times."""
    labels = ["bot"] + [str(t) for t in times]
    return StateSpace({"D": labels, "F": labels})


def party_time_deltas(space: StateSpace) -> dict[str, Relation]:
    """Transformers of the Father/Daughter atom over ``party_time_space``.

    ``yes`` agrees on a common time between the two proposals, ``no`` sends
    both to bottom. Inputs with a bottom component go to bottom so that both
    relations are left-total.
    """

    def yes(q):
        d, f = q  # lexicographic agent order: D, F
        if "bot" in q:
            return [("bot", "bot")]
        lo, hi = sorted((int(d), int(f)))
        return [(str(t), str(t)) for t in range(lo, hi + 1)]

    def no(q):
        return [("bot", "bot")]

    return {
        "yes": Relation.from_function(space, ["D", "F"], yes),
        "no": Relation.from_function(space, ["D", "F"], no),
    }


ALL = {
    "single_atom": single_atom,
    "chain": chain,
    "fdm_acyclic": fdm_acyclic,
    "fdm_deadlock": fdm_deadlock,
    "fdm_cyclic": fdm_cyclic,
    "fdm_cyclic_mutant": fdm_cyclic_mutant,
    "nested_loops": nested_loops,
    "cyclic_without_loops": cyclic_without_loops,
    "loop_without_synchronizer": loop_without_synchronizer,
    "one_agent_loop": one_agent_loop,
    "self_loop": self_loop,
    "acyclic_deadlock": acyclic_deadlock,
    "side_loop": side_loop,
    "tangled_loops": tangled_loops,
}
