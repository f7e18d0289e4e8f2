"""Seeded generators: sound deterministic negotiations, mutants, and random
concrete transformers."""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Optional

from .model import Atom, Negotiation
from .transformers import Label, Relation, StateSpace

__all__ = [
    "generate_sound_sdn",
    "retarget_mutants",
    "random_mutant",
    "with_random_relations",
]


class _Builder:
    def __init__(self, agents: list[str], rng: random.Random):
        self.rng = rng
        self.agents = agents
        self.parties: dict[str, frozenset[str]] = {"n0": frozenset(agents), "nf": frozenset(agents)}
        # outcomes[n][r] = {agent: target}
        self.outcomes: dict[str, dict[str, dict[str, str]]] = {
            "n0": {"o0": {a: "nf" for a in agents}},
            "nf": {"o1": {}},
        }
        self.next_atom = 1
        self.next_outcome = 2

    def atom(self, parties) -> str:
        name = f"n{self.next_atom}"
        self.next_atom += 1
        self.parties[name] = frozenset(parties)
        self.outcomes[name] = {}
        return name

    def outcome(self) -> str:
        name = f"o{self.next_outcome}"
        self.next_outcome += 1
        return name

    def subset(self, parties) -> list[str]:
        ps = sorted(parties)
        return sorted(self.rng.sample(ps, self.rng.randint(1, len(ps))))

    def pick_outcome(self) -> tuple[str, str]:
        choices = [(n, r) for n in sorted(self.outcomes) if n != "nf" for r in sorted(self.outcomes[n])]
        return self.rng.choice(choices)

    # refinements -------------------------------------------------------

    def sequential(self) -> None:
        # a subset of the parties of (n, r) meets in a new atom on the way
        n, r = self.pick_outcome()
        s = self.subset(self.parties[n])
        k = self.atom(s)
        tm = self.outcomes[n][r]
        self.outcomes[k][self.outcome()] = {a: tm[a] for a in s}
        for a in s:
            tm[a] = k

    def presplit(self) -> None:
        # a subset of the parties of t meets in a new atom just before t
        t = self.rng.choice(sorted(n for n in self.parties if n != "n0"))
        s = self.subset(self.parties[t])
        j = self.atom(s)
        for n, outs in self.outcomes.items():
            for tm in outs.values():
                for a in s:
                    if tm.get(a) == t:
                        tm[a] = j
        self.outcomes[j][self.outcome()] = {a: t for a in s}

    def duplicate(self) -> None:
        n, r = self.pick_outcome()
        self.outcomes[n][self.outcome()] = dict(self.outcomes[n][r])

    def loop(self, with_body: bool) -> None:
        k = self.rng.choice(sorted(n for n in self.parties if n != "nf"))
        ps = self.parties[k]
        if with_body:
            b = self.atom(ps)
            self.outcomes[k][self.outcome()] = {a: b for a in ps}
            self.outcomes[b][self.outcome()] = {a: k for a in ps}
        else:
            self.outcomes[k][self.outcome()] = {a: k for a in ps}

    def build(self) -> Negotiation:
        atoms = {}
        nxt = {}
        for n in sorted(self.parties):
            outs = self.outcomes[n]
            atoms[n] = Atom(n, self.parties[n], {r: Label(n, r) for r in sorted(outs)})
            for r, tm in outs.items():
                for a in self.parties[n]:
                    nxt[(n, a, r)] = frozenset([tm[a]]) if n != "nf" else frozenset()
        return Negotiation(tuple(self.agents), atoms, "n0", "nf", nxt)


def generate_sound_sdn(seed: int, atoms: int, agents: int, loop_depth: int = 0) -> Negotiation:
    """A sound deterministic negotiation with exactly ``atoms`` atoms.

    Built from the two-atom chain by seeded refinements that keep soundness:
    inserting an atom on an outcome, inserting an atom in front of another,
    duplicating an outcome, and inserting ``loop_depth`` loops (a self-loop,
    or a two-atom loop with a fresh body atom) at some atom.
    """
    if atoms < 2 or agents < 1 or loop_depth < 0:
        raise ValueError("need atoms >= 2, agents >= 1 and loop_depth >= 0")
    rng = random.Random(seed)
    b = _Builder([f"a{i}" for i in range(agents)], rng)
    loops = 0
    while len(b.parties) < atoms or loops < loop_depth:
        room = len(b.parties) < atoms
        if loops < loop_depth and (not room or rng.random() < 0.3):
            b.loop(with_body=room and rng.random() < 0.6)
            loops += 1
            continue
        x = rng.random()
        if x < 0.5:
            b.sequential()
        elif x < 0.8:
            b.presplit()
        else:
            b.duplicate()
    return b.build()


def retarget_mutants(neg: Negotiation) -> Iterator[Negotiation]:
    """Every negotiation obtained by sending one agent of one outcome to a
    different atom in which that agent participates, in canonical order."""
    for (n, a, r) in neg.triples():
        if n == neg.final:
            continue
        (cur,) = neg.next[(n, a, r)]
        for t in sorted(neg.atoms):
            if t != cur and a in neg.parties(t):
                nxt = dict(neg.next)
                nxt[(n, a, r)] = frozenset([t])
                yield neg.with_atoms(neg.atoms, nxt)


def random_mutant(neg: Negotiation, rng: random.Random) -> Optional[Negotiation]:
    """One single-edge retarget mutant chosen with ``rng``, or None."""
    options = [
        (k, t)
        for k in neg.triples()
        if k[0] != neg.final
        for t in sorted(neg.atoms)
        if k[1] in neg.parties(t) and frozenset([t]) != neg.next[k]
    ]
    if not options:
        return None
    k, t = rng.choice(options)
    nxt = dict(neg.next)
    nxt[k] = frozenset([t])
    return neg.with_atoms(neg.atoms, nxt)


def with_random_relations(neg: Negotiation, seed: int, states: int = 2, max_image: int = 2) -> Negotiation:
    """Replace every transformer by a random left-total relation over the
    atom's parties, on ``states`` local states per agent."""
    rng = random.Random(seed)
    space = StateSpace({a: [str(i) for i in range(states)] for a in neg.agents})
    atoms = {}
    for n in sorted(neg.atoms):
        atom = neg.atoms[n]
        parties = sorted(atom.parties)
        local = [tuple(q) for q in itertools.product(*(space.local[a] for a in parties))]
        outs = {}
        for r in sorted(atom.outcomes):
            pairs = [(q, q2) for q in local for q2 in rng.sample(local, rng.randint(1, min(max_image, len(local))))]
            outs[r] = Relation.from_local(space, parties, pairs)
        atoms[n] = Atom(n, atom.parties, outs)
    return Negotiation(neg.agents, atoms, neg.initial, neg.final, dict(neg.next), space)

