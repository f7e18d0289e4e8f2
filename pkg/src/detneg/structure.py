"""Static graph, behavioural loops, synchronizers, fragments and splits."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

import networkx as nx

from .model import Atom, Negotiation
from .semantics import DEFAULT_NODE_LIMIT, LimitExceeded, Marking, ReachabilityGraph, reachability_graph
from .transformers import identity_like

__all__ = [
    "DEFAULT_CYCLE_LIMIT",
    "SPLIT_OUTCOME",
    "NegGraph",
    "Loop",
    "Fragment",
    "SplitNegotiation",
    "EmptyFragment",
    "negotiation_graph",
    "is_acyclic",
    "topological_order",
    "enumerate_loops",
    "enumerate_minimal_loops",
    "synchronizers",
    "fragment",
    "fragments",
    "elementary_fragments",
    "fragment_from_loops",
    "exits",
    "synchronizer_atoms",
    "split_negotiation",
    "select_synchronizer",
]

DEFAULT_CYCLE_LIMIT = 100_000
SPLIT_OUTCOME = "done"


class EmptyFragment(ValueError):
    pass


@dataclass(frozen=True)
class NegGraph:
    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def successors(self, n: str) -> list[str]:
        return sorted(b for a, b in self.edges if a == n)


def negotiation_graph(neg: Negotiation) -> NegGraph:
    edges = {(n, t) for (n, _, _), ts in neg.next.items() for t in ts}
    return NegGraph(tuple(sorted(neg.atoms)), frozenset(edges))


def topological_order(g: NegGraph) -> Optional[list[str]]:
    """Kahn's algorithm, smallest name first; ``None`` if ``g`` has a cycle."""
    indeg = {v: 0 for v in g.vertices}
    succ: dict[str, list[str]] = {v: [] for v in g.vertices}
    for a, b in g.edges:
        indeg[b] += 1
        succ[a].append(b)
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    return order if len(order) == len(g.vertices) else None


def is_acyclic(g: NegGraph) -> bool:
    return topological_order(g) is not None


# ---------------------------------------------------------------------------
# loops


@dataclass(frozen=True)
class Loop:
    """Occurrence sequence leading from ``base`` back to ``base``."""

    steps: tuple[tuple[str, str], ...]
    base: Marking

    @property
    def atoms(self) -> frozenset[str]:
        return frozenset(n for n, _ in self.steps)

    def __str__(self) -> str:
        return "".join(f"({n},{r})" for n, r in self.steps)


def enumerate_loops(
    neg: Negotiation,
    rg: Optional[ReachabilityGraph] = None,
    cycle_limit: int = DEFAULT_CYCLE_LIMIT,
) -> tuple[Loop, ...]:
    """Elementary cycles of the reachability graph, one Loop per choice of
    step labels, each rotated to start at its smallest marking."""
    if rg is None:
        rg = reachability_graph(neg)
    labels: dict[tuple[int, int], list[tuple[str, str]]] = {}
    for i, n, r, j in rg.edge_triples():
        labels.setdefault((i, j), []).append((n, r))
    g = nx.DiGraph()
    g.add_nodes_from(range(len(rg.nodes)))
    g.add_edges_from(labels)
    loops = []
    for cycle in nx.simple_cycles(g):
        k = cycle.index(min(cycle))
        cycle = cycle[k:] + cycle[:k]
        hops = [sorted(labels[(a, b)]) for a, b in zip(cycle, cycle[1:] + cycle[:1])]
        for steps in itertools.product(*hops):
            loops.append(Loop(tuple(steps), rg.nodes[cycle[0]]))
            if len(loops) > cycle_limit:
                raise LimitExceeded(f"more than {cycle_limit} elementary cycles")
    loops.sort(key=lambda l: (l.base.key(), l.steps))
    return tuple(loops)


def enumerate_minimal_loops(
    neg: Negotiation,
    rg: Optional[ReachabilityGraph] = None,
    cycle_limit: int = DEFAULT_CYCLE_LIMIT,
) -> tuple[Loop, ...]:
    """Loops whose atom set has no proper subset among the atom sets of loops.

    Every loop's atom set contains the atom set of an elementary cycle, so
    minimality over elementary cycles is minimality over all loops.
    """
    loops = enumerate_loops(neg, rg, cycle_limit)
    sets = {l.atoms for l in loops}
    minimal = {s for s in sets if not any(o < s for o in sets)}
    return tuple(l for l in loops if l.atoms in minimal)


def synchronizers(neg: Negotiation, loop: Loop) -> frozenset[str]:
    """Atoms of the loop whose parties include the parties of every loop atom."""
    everyone = frozenset().union(*(neg.parties(n) for n in loop.atoms))
    return frozenset(n for n in loop.atoms if neg.parties(n) >= everyone)


# ---------------------------------------------------------------------------
# fragments


@dataclass(frozen=True)
class Fragment:
    """Atoms and outcomes on loops synchronized by ``synchronizer``.

    ``atoms`` maps each projected atom to its restricted outcome set.
    """

    synchronizer: str
    atoms: Mapping[str, frozenset[str]]

    def __bool__(self) -> bool:
        return bool(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def outcomes(self) -> frozenset[tuple[str, str]]:
        return frozenset((n, r) for n, rs in self.atoms.items() for r in rs)


def _all_loop_fragments(neg: Negotiation, rg: ReachabilityGraph) -> dict[str, Fragment]:
    # A loop synchronized by s, with repetitions allowed, is a closed walk
    # through an s-step using only atoms whose parties lie within P_s. Such
    # walks are exactly the steps inside a strongly connected component (of
    # the graph restricted to those atoms) that also contains an s-step.
    out: dict[str, Fragment] = {}
    by_parties: dict[frozenset[str], list[str]] = {}
    for s in sorted(neg.atoms):
        by_parties.setdefault(neg.parties(s), []).append(s)
    steps = list(rg.edge_triples())
    for pset, group in by_parties.items():
        kept = [(i, n, r, j) for i, n, r, j in steps if neg.parties(n) <= pset]
        g = nx.DiGraph()
        g.add_edges_from((i, j) for i, _, _, j in kept)
        comp = {}
        for k, scc in enumerate(nx.strongly_connected_components(g)):
            for v in scc:
                comp[v] = k
        internal: dict[int, list[tuple[str, str]]] = {}
        for i, n, r, j in kept:
            if comp[i] == comp[j]:
                internal.setdefault(comp[i], []).append((n, r))
        for s in group:
            atoms: dict[str, set[str]] = {}
            for labels in internal.values():
                if any(n == s for n, _ in labels):
                    for n, r in labels:
                        atoms.setdefault(n, set()).add(r)
            out[s] = Fragment(s, {n: frozenset(rs) for n, rs in sorted(atoms.items())})
    return out


def fragments(
    neg: Negotiation,
    rg: Optional[ReachabilityGraph] = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> dict[str, Fragment]:
    """The fragment of every atom over all loops it synchronizes."""
    if rg is None:
        rg = reachability_graph(neg, node_limit)
    return _all_loop_fragments(neg, rg)


def fragment(neg: Negotiation, s: str, rg: Optional[ReachabilityGraph] = None,
             node_limit: int = DEFAULT_NODE_LIMIT) -> Fragment:
    """Fragment of ``s``; empty if ``s`` synchronizes no loop."""
    return fragments(neg, rg, node_limit)[s]


def elementary_fragments(
    neg: Negotiation,
    rg: Optional[ReachabilityGraph] = None,
    cycle_limit: int = DEFAULT_CYCLE_LIMIT,
) -> dict[str, Fragment]:
    """Fragments generated by elementary reachability-graph cycles only.

    Each is contained in the corresponding :func:`fragments` entry and can
    be strictly smaller: a self-loop on another atom of the fragment never
    lies on an elementary cycle through ``s``.
    """
    if rg is None:
        rg = reachability_graph(neg)
    loops = enumerate_loops(neg, rg, cycle_limit)
    return {s: fragment_from_loops(neg, s, loops) for s in sorted(neg.atoms)}


def fragment_from_loops(neg: Negotiation, s: str, loops) -> Fragment:
    """Fragment built only from the given loops that ``s`` synchronizes."""
    atoms: dict[str, set[str]] = {}
    for loop in loops:
        if s in synchronizers(neg, loop):
            for n, r in loop.steps:
                atoms.setdefault(n, set()).add(r)
    return Fragment(s, {n: frozenset(rs) for n, rs in sorted(atoms.items())})


def exits(neg: Negotiation, frag: Fragment) -> list[tuple[str, str]]:
    """Outcomes of fragment atoms that are not outcomes of the fragment."""
    return [(n, r) for n in sorted(frag.atoms) for r in neg.outcomes(n) if r not in frag.atoms[n]]


def synchronizer_atoms(neg: Negotiation, rg: Optional[ReachabilityGraph] = None,
                       node_limit: int = DEFAULT_NODE_LIMIT) -> frozenset[str]:
    """Atoms that synchronize at least one loop."""
    return frozenset(s for s, f in fragments(neg, rg, node_limit).items() if f)


# ---------------------------------------------------------------------------
# s-negotiations


@dataclass(frozen=True)
class SplitNegotiation:
    """The s-negotiation of a fragment.

    Fragment atoms keep their names; ``split_final`` is the fresh final atom.
    ``back_map`` sends every atom of ``negotiation`` to its parent atom, so
    both the initial copy and the fresh final atom map to the synchronizer.
    """

    negotiation: Negotiation
    synchronizer: str
    split_final: str
    back_map: Mapping[str, str]


def _fresh_atom(neg: Negotiation, base: str) -> str:
    name = base + "'"
    while name in neg.atoms:
        name += "'"
    return name


def split_negotiation(neg: Negotiation, frag: Fragment) -> SplitNegotiation:
    if not frag:
        raise EmptyFragment(f"fragment of {frag.synchronizer} is empty")
    s = frag.synchronizer
    fin = _fresh_atom(neg, s)
    atoms: dict[str, Atom] = {}
    nxt = {}
    for n, rs in frag.atoms.items():
        parties = neg.parties(n)
        atoms[n] = Atom(n, parties, {r: neg.delta(n, r) for r in sorted(rs)})
        for r in rs:
            for a in parties:
                nxt[(n, a, r)] = frozenset(fin if t == s else t for t in neg.next[(n, a, r)])
    some = neg.delta(*neg.out()[0])
    atoms[fin] = Atom(fin, neg.parties(s), {SPLIT_OUTCOME: identity_like(some)})
    for a in neg.parties(s):
        nxt[(fin, a, SPLIT_OUTCOME)] = frozenset()
    split = Negotiation(tuple(neg.parties(s)), atoms, s, fin, nxt, neg.space)
    back = {n: n for n in frag.atoms}
    back[fin] = s
    return SplitNegotiation(split, s, fin, back)


def select_synchronizer(
    neg: Negotiation,
    rg: Optional[ReachabilityGraph] = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
    frags: Optional[Mapping[str, Fragment]] = None,
) -> Optional[tuple[str, Fragment, SplitNegotiation]]:
    """A synchronizer whose s-negotiation is acyclic, with the fewest
    fragment atoms (ties by name); ``None`` if there is none."""
    if frags is None:
        frags = fragments(neg, rg, node_limit)
    for s in sorted((s for s, f in frags.items() if f), key=lambda s: (len(frags[s]), s)):
        split = split_negotiation(neg, frags[s])
        if is_acyclic(negotiation_graph(split.negotiation)):
            return s, frags[s], split
    return None
