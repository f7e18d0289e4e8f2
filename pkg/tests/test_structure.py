from __future__ import annotations

import random

import networkx as nx
import pytest

from detneg.fixtures import (
    chain,
    cyclic_without_loops,
    fdm_cyclic,
    loop_without_synchronizer,
    nested_loops,
    one_agent_loop,
    self_loop,
    side_loop,
    tangled_loops,
)
from detneg.generate import generate_sound_sdn
from detneg.model import negotiation, validate
from detneg.semantics import reachability_graph, soundness_oracle
from detneg.structure import (
    SPLIT_OUTCOME,
    EmptyFragment,
    Fragment,
    Loop,
    elementary_fragments,
    enumerate_loops,
    enumerate_minimal_loops,
    exits,
    fragment,
    fragments,
    is_acyclic,
    negotiation_graph,
    select_synchronizer,
    split_negotiation,
    synchronizer_atoms,
    synchronizers,
    topological_order,
)

ONE = ["a"]


def test_graph_of_the_cyclic_family_negotiation():
    g = negotiation_graph(fdm_cyclic())
    assert g.vertices == ("n0", "n1", "n2", "nf")
    assert g.edges == {("n0", "n1"), ("n0", "n2"), ("n0", "nf"), ("n1", "n2"), ("n2", "n1"),
                       ("n2", "n2"), ("n2", "nf")}
    assert not is_acyclic(g)


def test_topological_order_breaks_ties_by_name():
    neg = negotiation(
        ONE + ["b"],
        {
            "s": (["a", "b"], {"r": {"a": "y", "b": "x"}}),
            "x": (["b"], {"r": {"b": "f"}}),
            "y": (["a"], {"r": {"a": "f"}}),
            "f": (["a", "b"], {"e": {}}),
        },
        "s",
        "f",
    )
    assert topological_order(negotiation_graph(neg)) == ["s", "x", "y", "f"]
    assert topological_order(negotiation_graph(self_loop())) is None


def test_nested_loops_has_the_three_named_loops():
    steps = {l.steps for l in enumerate_loops(nested_loops())}

    def has_rotation(seq):
        return any(seq[k:] + seq[:k] in steps for k in range(len(seq)))

    assert has_rotation((("n1", "a"), ("n2", "a"), ("n4", "a"), ("n5", "b")))
    assert has_rotation((("n1", "b"), ("n3", "a"), ("n5", "b")))
    assert has_rotation((("n2", "a"), ("n4", "b")))


def test_synchronizers_of_the_long_loop():
    neg = nested_loops()
    (long_loop,) = [l for l in enumerate_loops(neg) if l.atoms == {"n1", "n2", "n4", "n5"}]
    assert synchronizers(neg, long_loop) == {"n1", "n5"}
    (inner,) = [l for l in enumerate_loops(neg) if l.atoms == {"n2", "n4"}]
    assert synchronizers(neg, inner) == {"n2", "n4"}


def test_fragments_are_nested():
    neg = nested_loops()
    f1, f2 = fragment(neg, "n1"), fragment(neg, "n2")
    assert set(f1.atoms) == {"n1", "n2", "n3", "n4", "n5"}
    assert dict(f2.atoms) == {"n2": {"a"}, "n4": {"b"}}
    assert f2.outcomes() < f1.outcomes()
    assert exits(neg, f2) == [("n4", "a")]
    assert exits(neg, f1) == [("n5", "a")]
    assert not fragment(neg, "n0")


def test_minimal_synchronizer_is_the_inner_one():
    neg = nested_loops()
    s, frag, split = select_synchronizer(neg)
    assert s == "n2"
    assert is_acyclic(negotiation_graph(split.negotiation))
    assert not is_acyclic(negotiation_graph(split_negotiation(neg, fragment(neg, "n1")).negotiation))


def test_split_negotiation_shape():
    neg = nested_loops()
    split = split_negotiation(neg, fragment(neg, "n2"))
    sub = split.negotiation
    assert validate(sub) == []
    assert split.split_final == "n2'"
    assert sub.initial == "n2" and sub.final == "n2'"
    assert set(sub.atoms) == {"n2", "n4", "n2'"}
    assert sub.agents == ("D",)
    assert sub.next[("n4", "D", "b")] == {"n2'"}
    assert sub.outcomes("n2'") == [SPLIT_OUTCOME]
    assert split.back_map == {"n2": "n2", "n4": "n4", "n2'": "n2"}
    assert soundness_oracle(sub)


def test_split_of_empty_fragment():
    with pytest.raises(EmptyFragment):
        split_negotiation(chain(), Fragment("n0", {}))


def test_split_name_avoids_collisions():
    neg = negotiation(
        ONE,
        {
            "s": (ONE, {"again": {"a": "s"}, "on": {"a": "s'"}}),
            "s'": (ONE, {"e": {}}),
        },
        "s",
        "s'",
    )
    assert split_negotiation(neg, fragment(neg, "s")).split_final == "s''"


def test_cyclic_graph_without_loops():
    neg = cyclic_without_loops()
    assert not is_acyclic(negotiation_graph(neg))
    assert nx.is_directed_acyclic_graph(_rg_digraph(neg))
    assert enumerate_loops(neg) == ()
    assert synchronizer_atoms(neg) == frozenset()


def test_loop_without_synchronizer():
    neg = loop_without_synchronizer()
    assert soundness_oracle(neg)
    loops = [l for l in enumerate_loops(neg) if l.atoms == {"n1", "n2"}]
    assert loops
    assert all(synchronizers(neg, l) == frozenset() for l in loops)


def _rg_digraph(neg):
    rg = reachability_graph(neg)
    g = nx.DiGraph()
    g.add_nodes_from(range(len(rg)))
    g.add_edges_from((i, j) for i, _, _, j in rg.edge_triples())
    return g


def test_loops_are_closed_occurrence_sequences():
    from detneg.semantics import fire

    for neg in (nested_loops(), one_agent_loop(), fdm_cyclic()):
        for loop in enumerate_loops(neg):
            m = loop.base
            for n, r in loop.steps:
                m = fire(neg, m, n, r)
            assert m == loop.base


def test_self_loop_loop_and_fragment():
    neg = self_loop()
    (loop,) = enumerate_loops(neg)
    assert loop.steps == (("n1", "again"),)
    assert str(loop) == "(n1,again)"
    assert dict(fragment(neg, "n1").atoms) == {"n1": {"again"}}


def test_exact_fragment_includes_self_loops_of_other_atoms():
    neg = side_loop()
    assert dict(fragments(neg)["n0"].atoms) == {"n0": {"in"}, "n1": {"back", "stay"}}
    assert dict(elementary_fragments(neg)["n0"].atoms) == {"n0": {"in"}, "n1": {"back"}}


def test_every_split_can_be_cyclic():
    neg = tangled_loops()
    frags = fragments(neg)
    assert {s for s, f in frags.items() if f} == {"n0", "n1", "n2", "n3"}
    assert select_synchronizer(neg, frags=frags) is None


def test_minimal_loops_are_strongly_connected_and_synchronized():
    for seed in range(150):
        rng = random.Random(seed)
        neg = generate_sound_sdn(seed, rng.randint(3, 8), rng.randint(1, 3), rng.randint(1, 3))
        g = negotiation_graph(neg)
        dg = nx.DiGraph(list(g.edges))
        loops = enumerate_minimal_loops(neg)
        assert loops, seed
        for loop in loops:
            sub = dg.subgraph(loop.atoms)
            assert nx.is_strongly_connected(sub)
            if len(loop.atoms) == 1:
                (n,) = loop.atoms
                assert sub.has_edge(n, n)
            assert synchronizers(neg, loop), seed


def test_loop_type():
    loop = Loop((("n", "r"), ("m", "s")), reachability_graph(chain()).initial)
    assert loop.atoms == {"n", "m"}
