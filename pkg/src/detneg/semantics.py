"""Markings, small steps, reachability graphs and the brute-force oracles.

The oracles here are deliberately naive: they explore the full marking graph
and are meant as an independent check of the reduction engine on small
instances.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union

import numpy as np

from .model import Negotiation
from .transformers import Relation, compose, union

__all__ = [
    "DEFAULT_NODE_LIMIT",
    "LimitExceeded",
    "NotEnabled",
    "UnsoundInput",
    "Marking",
    "SmallStep",
    "ReachabilityGraph",
    "Sound",
    "Unsound",
    "initial_marking",
    "final_marking",
    "enabled",
    "fire",
    "reachability_graph",
    "soundness_oracle",
    "deadlocks",
    "marking_relations",
    "summary_oracle",
    "enumerate_large_steps",
    "large_step_summary",
]

DEFAULT_NODE_LIMIT = 1_000_000


class LimitExceeded(RuntimeError):
    """A state-space or cycle limit was hit; the instance is too large."""


class NotEnabled(ValueError):
    pass


class UnsoundInput(ValueError):
    pass


@dataclass(frozen=True)
class Marking:
    """For each agent (in canonical order), the atoms it is ready to engage in."""

    agents: tuple[str, ...]
    ready: tuple[frozenset[str], ...]

    @classmethod
    def from_dict(cls, agents, mapping: Mapping[str, object]) -> "Marking":
        agents = tuple(sorted(agents))
        ready = []
        for a in agents:
            v = mapping.get(a, ())
            ready.append(frozenset([v] if isinstance(v, str) else v))
        return cls(agents, tuple(ready))

    def __getitem__(self, agent: str) -> frozenset[str]:
        return self.ready[self.agents.index(agent)]

    def as_dict(self) -> dict[str, frozenset[str]]:
        return dict(zip(self.agents, self.ready))

    def key(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(sorted(s)) for s in self.ready)

    def is_final(self) -> bool:
        return not any(self.ready)

    def __str__(self) -> str:
        parts = []
        for a, s in zip(self.agents, self.ready):
            parts.append(f"{a}:{','.join(sorted(s)) or '-'}")
        return " ".join(parts)


@dataclass(frozen=True)
class SmallStep:
    source: Marking
    atom: str
    outcome: str
    target: Marking


def initial_marking(neg: Negotiation) -> Marking:
    return Marking(neg.agents, tuple(frozenset([neg.initial]) for _ in neg.agents))


def final_marking(neg: Negotiation) -> Marking:
    return Marking(neg.agents, tuple(frozenset() for _ in neg.agents))


def enabled(neg: Negotiation, m: Marking) -> set[str]:
    """Atoms all of whose parties are ready to engage in them at ``m``."""
    ready = m.as_dict()
    candidates = set().union(*m.ready) if m.ready else set()
    return {n for n in candidates if all(n in ready[a] for a in neg.parties(n))}


def fire(neg: Negotiation, m: Marking, atom: str, outcome: str) -> Marking:
    if atom not in neg.atoms or atom not in enabled(neg, m):
        raise NotEnabled(f"{atom} is not enabled at {m}")
    if outcome not in neg.atoms[atom].outcomes:
        raise NotEnabled(f"{atom} has no outcome {outcome!r}")
    parties = neg.parties(atom)
    ready = tuple(
        neg.next[(atom, a, outcome)] if a in parties else s
        for a, s in zip(m.agents, m.ready)
    )
    return Marking(m.agents, ready)


@dataclass(frozen=True)
class ReachabilityGraph:
    """Reachable markings and small steps, in canonical order.

    ``succ[i]`` lists ``(atom, outcome, j)`` for the steps leaving ``nodes[i]``.
    """

    nodes: tuple[Marking, ...]
    edges: tuple[SmallStep, ...]
    initial: Marking
    final: Marking
    index: Mapping[Marking, int]
    succ: tuple[tuple[tuple[str, str, int], ...], ...]

    def __len__(self) -> int:
        return len(self.nodes)

    def edge_triples(self) -> Iterator[tuple[int, str, str, int]]:
        for i, out in enumerate(self.succ):
            for n, r, j in out:
                yield i, n, r, j

    def has_final(self) -> bool:
        return self.final in self.index


def reachability_graph(neg: Negotiation, node_limit: int = DEFAULT_NODE_LIMIT) -> ReachabilityGraph:
    start = initial_marking(neg)
    seen = {start}
    raw: dict[Marking, list[tuple[str, str, Marking]]] = {}
    queue = deque([start])
    while queue:
        m = queue.popleft()
        steps = []
        for n in sorted(enabled(neg, m)):
            for r in neg.outcomes(n):
                m2 = fire(neg, m, n, r)
                steps.append((n, r, m2))
                if m2 not in seen:
                    seen.add(m2)
                    if len(seen) > node_limit:
                        raise LimitExceeded(f"more than {node_limit} reachable markings")
                    queue.append(m2)
        raw[m] = steps
    nodes = tuple(sorted(seen, key=Marking.key))
    index = {m: i for i, m in enumerate(nodes)}
    succ = tuple(tuple((n, r, index[m2]) for n, r, m2 in raw[m]) for m in nodes)
    edges = tuple(SmallStep(m, n, r, m2) for m in nodes for n, r, m2 in raw[m])
    return ReachabilityGraph(nodes, edges, start, final_marking(neg), index, succ)


# ---------------------------------------------------------------------------
# soundness


@dataclass(frozen=True)
class Sound:
    def __bool__(self) -> bool:
        return True

    def __str__(self) -> str:
        return "Sound"


@dataclass(frozen=True)
class Unsound:
    """Unsoundness witness.

    ``kind`` is ``never-enabled`` (``atom`` is never enabled), ``deadlock`` or
    ``livelock`` (the final marking is unreachable from ``marking``).
    ``sequences`` holds shortest occurrence sequences from the initial
    marking to ``marking`` (at most 64 of them).
    """

    kind: str
    marking: Optional[Marking] = None
    atom: Optional[str] = None
    sequences: tuple[tuple[tuple[str, str], ...], ...] = ()

    def __bool__(self) -> bool:
        return False

    @property
    def sequence(self) -> tuple[tuple[str, str], ...]:
        return self.sequences[0] if self.sequences else ()

    def __str__(self) -> str:
        if self.kind == "never-enabled":
            return f"Unsound: atom {self.atom} is never enabled"
        seq = " ".join(f"({n},{r})" for n, r in self.sequence) or "<empty>"
        return f"Unsound: {self.kind} at [{self.marking}] after {seq}"


Verdict = Union[Sound, Unsound]


def _distances(rg: ReachabilityGraph) -> list[int]:
    dist = [-1] * len(rg.nodes)
    start = rg.index[rg.initial]
    dist[start] = 0
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for _, _, j in rg.succ[i]:
            if dist[j] < 0:
                dist[j] = dist[i] + 1
                queue.append(j)
    return dist


def _shortest_sequences(rg: ReachabilityGraph, goal: int, limit: int = 64):
    dist = _distances(rg)
    preds: dict[int, list[tuple[int, str, str]]] = {}
    for i, n, r, j in rg.edge_triples():
        if dist[j] == dist[i] + 1:
            preds.setdefault(j, []).append((i, n, r))
    out: list[tuple[tuple[str, str], ...]] = []

    def back(j, suffix):
        if len(out) >= limit:
            return
        if dist[j] == 0:
            out.append(tuple(suffix))
            return
        for i, n, r in sorted(preds.get(j, ()), key=lambda p: (p[1], p[2], p[0])):
            back(i, [(n, r)] + suffix)

    back(goal, [])
    return tuple(sorted(out))


def _coreachable_final(rg: ReachabilityGraph) -> set[int]:
    if not rg.has_final():
        return set()
    pred: dict[int, list[int]] = {}
    for i, _, _, j in rg.edge_triples():
        pred.setdefault(j, []).append(i)
    goal = rg.index[rg.final]
    good = {goal}
    stack = [goal]
    while stack:
        j = stack.pop()
        for i in pred.get(j, ()):
            if i not in good:
                good.add(i)
                stack.append(i)
    return good


def soundness_oracle(
    neg: Negotiation,
    node_limit: int = DEFAULT_NODE_LIMIT,
    rg: Optional[ReachabilityGraph] = None,
) -> Verdict:
    """Decide soundness by exhaustive exploration of the marking graph.

    Sound iff every atom is enabled at some reachable marking and the final
    marking is reachable from every reachable marking. The reported bad
    marking is the one closest to the initial marking.
    """
    if rg is None:
        rg = reachability_graph(neg, node_limit)
    good = _coreachable_final(rg)
    dist = _distances(rg)
    bad = [i for i in range(len(rg.nodes)) if i not in good]
    if bad:
        i = min(bad, key=lambda k: (dist[k], rg.nodes[k].key()))
        kind = "deadlock" if not rg.succ[i] else "livelock"
        return Unsound(kind, rg.nodes[i], None, _shortest_sequences(rg, i))
    seen = {n for _, n, _, _ in rg.edge_triples()}
    for n in sorted(neg.atoms):
        if n not in seen:
            return Unsound("never-enabled", None, n)
    return Sound()


def deadlocks(neg: Negotiation, node_limit: int = DEFAULT_NODE_LIMIT) -> set[Marking]:
    rg = reachability_graph(neg, node_limit)
    return {m for m, out in zip(rg.nodes, rg.succ) if not out and not m.is_final()}


# ---------------------------------------------------------------------------
# summaries


def _concrete_deltas(neg: Negotiation):
    for n, r in neg.out():
        t = neg.delta(n, r)
        if not isinstance(t, Relation):
            raise TypeError(f"delta({n},{r}) is not a concrete relation")
    first = neg.delta(*neg.out()[0])
    return first.space


def marking_relations(
    neg: Negotiation,
    rg: ReachabilityGraph,
    seed: Optional[dict[int, np.ndarray]] = None,
) -> dict[int, Relation]:
    """Least fixpoint: for each reachable marking, the union over all paths
    from the initial marking of the composed transformers.

    ``seed`` (node index to boolean matrix) lets callers restart the
    iteration from a given assignment, e.g. to check that a computed
    fixpoint is stable.
    """
    space = _concrete_deltas(neg)
    size = len(space)
    val = [np.zeros((size, size), dtype=bool) for _ in rg.nodes]
    start = rg.index[rg.initial]
    val[start] = np.eye(size, dtype=bool)
    if seed is not None:
        for i, m in seed.items():
            val[i] = val[i] | m
    mats = {(n, r): neg.delta(n, r).matrix.astype(np.uint8) for n, r in neg.out()}
    work = deque(range(len(rg.nodes)) if seed is not None else [start])
    queued = set(work)
    while work:
        i = work.popleft()
        queued.discard(i)
        if not val[i].any():
            continue
        src = val[i].astype(np.uint8)
        for n, r, j in rg.succ[i]:
            step = (src @ mats[(n, r)]) > 0
            new = val[j] | step
            if not np.array_equal(new, val[j]):
                val[j] = new
                if j not in queued:
                    work.append(j)
                    queued.add(j)
    return {i: Relation(space, m) for i, m in enumerate(val)}


def summary_oracle(
    neg: Negotiation,
    node_limit: int = DEFAULT_NODE_LIMIT,
    check_sound: bool = True,
) -> dict[str, Relation]:
    """Summary transformer of each final outcome, by a fixpoint over the
    reachability graph. Handles cyclic negotiations."""
    rg = reachability_graph(neg, node_limit)
    if check_sound:
        verdict = soundness_oracle(neg, rg=rg)
        if not verdict:
            raise UnsoundInput(str(verdict))
    space = _concrete_deltas(neg)
    rel = marking_relations(neg, rg)
    out: dict[str, Relation] = {r: Relation(space, np.zeros((len(space),) * 2, bool))
                                for r in neg.outcomes(neg.final)}
    for i, n, r, j in rg.edge_triples():
        if n == neg.final:
            out[r] = union(out[r], compose(rel[i], neg.delta(n, r)))
    return out


def enumerate_large_steps(neg: Negotiation, max_length: int) -> Iterator[tuple[tuple[str, str], ...]]:
    """All large steps with at most ``max_length`` small steps, by DFS over
    occurrence sequences (no marking graph involved)."""
    x0 = initial_marking(neg)

    def go(m: Marking, prefix):
        if m.is_final():
            yield tuple(prefix)
            return
        if len(prefix) >= max_length:
            return
        for n in sorted(enabled(neg, m)):
            for r in neg.outcomes(n):
                prefix.append((n, r))
                yield from go(fire(neg, m, n, r), prefix)
                prefix.pop()

    yield from go(x0, [])


def large_step_summary(neg: Negotiation, max_length: int) -> dict[str, Relation]:
    """Union of composed transformers over large steps of bounded length."""
    space = _concrete_deltas(neg)
    empty = Relation(space, np.zeros((len(space),) * 2, bool))
    out = {r: empty for r in neg.outcomes(neg.final)}
    for seq in enumerate_large_steps(neg, max_length):
        rel = Relation.identity(space)
        for n, r in seq:
            rel = compose(rel, neg.delta(n, r))
        out[seq[-1][1]] = union(out[seq[-1][1]], rel)
    return out
