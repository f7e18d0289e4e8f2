"""Negotiations: atoms, the next-atoms function, validation and determinism."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Optional, Union

from .transformers import Concat, Expr, Label, Relation, Star, StateSpace, Transformer, is_s_transformer
from .transformers import Union as SymUnion

__all__ = [
    "Atom",
    "Negotiation",
    "Violation",
    "ValidationError",
    "NotDeterministic",
    "negotiation",
    "validate",
    "is_deterministic",
    "require_deterministic",
]

Triple = tuple[str, str, str]  # (atom, agent, outcome)


@dataclass(frozen=True)
class Atom:
    name: str
    parties: frozenset[str]
    outcomes: Mapping[str, Transformer]

    def __post_init__(self):
        object.__setattr__(self, "parties", frozenset(self.parties))


@dataclass(frozen=True)
class Negotiation:
    """A negotiation over a fixed agent set.

    ``next[(n, a, r)]`` is the set of atoms agent ``a`` is ready to engage in
    after atom ``n`` ends with outcome ``r``. Values are treated as immutable;
    rule applications build new negotiations.
    """

    agents: tuple[str, ...]
    atoms: Mapping[str, Atom]
    initial: str
    final: str
    next: Mapping[Triple, frozenset[str]]
    space: Optional[StateSpace] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(sorted(self.agents)))

    # structure ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.atoms)

    def parties(self, n: str) -> frozenset[str]:
        return self.atoms[n].parties

    def outcomes(self, n: str) -> list[str]:
        return sorted(self.atoms[n].outcomes)

    def delta(self, n: str, r: str) -> Transformer:
        return self.atoms[n].outcomes[r]

    def out(self) -> list[tuple[str, str]]:
        """All outcomes ``(n, r)`` in canonical order."""
        return [(n, r) for n in sorted(self.atoms) for r in self.outcomes(n)]

    def out_count(self) -> int:
        return sum(len(a.outcomes) for a in self.atoms.values())

    def triples(self) -> Iterator[Triple]:
        for n in sorted(self.atoms):
            atom = self.atoms[n]
            for r in sorted(atom.outcomes):
                for a in sorted(atom.parties):
                    yield (n, a, r)

    def target(self, n: str, a: str, r: str) -> str:
        """The unique next atom of a deterministic triple."""
        (t,) = self.next[(n, a, r)]
        return t

    def targets(self, n: str, r: str) -> dict[str, frozenset[str]]:
        return {a: self.next[(n, a, r)] for a in sorted(self.parties(n))}

    def target_map(self, n: str, r: str) -> frozenset[tuple[str, str]]:
        """Target of a deterministic outcome as a set of ``(agent, atom)``."""
        return frozenset((a, self.target(n, a, r)) for a in self.parties(n))

    def incoming(self, n: str) -> list[Triple]:
        return [k for k, v in self.next.items() if n in v]

    @property
    def backend(self) -> str:
        for atom in self.atoms.values():
            for t in atom.outcomes.values():
                return "concrete" if isinstance(t, Relation) else "symbolic"
        return "symbolic"

    def with_atoms(self, atoms, next, *, initial=None, final=None) -> "Negotiation":
        return replace(
            self,
            atoms=atoms,
            next=next,
            initial=self.initial if initial is None else initial,
            final=self.final if final is None else final,
        )

    def rename(self, atoms=None, agents=None, outcomes=None) -> "Negotiation":
        """Rename atoms, agents and outcomes by the given dictionaries.

        Symbolic labels are renamed along with atoms and outcomes. Concrete
        transformers are kept, so agents of a concrete negotiation cannot be
        renamed.
        """
        am = atoms or {}
        gm = agents or {}
        om = outcomes or {}
        A = lambda n: am.get(n, n)  # noqa: E731
        G = lambda a: gm.get(a, a)  # noqa: E731
        O = lambda n, r: om.get((n, r), r)  # noqa: E731
        if gm and self.space is not None:
            raise ValueError("cannot rename agents of a concrete negotiation")

        def relabel(t):
            if isinstance(t, Label):
                return Label(A(t.atom), O(t.atom, t.outcome))
            if isinstance(t, Concat):
                return Concat(tuple(relabel(p) for p in t.parts))
            if isinstance(t, SymUnion):
                return SymUnion(frozenset(relabel(p) for p in t.items))
            if isinstance(t, Star):
                return Star(relabel(t.inner))
            return t

        new_atoms = {
            A(n): Atom(A(n), frozenset(G(a) for a in atom.parties),
                       {O(n, r): relabel(t) for r, t in atom.outcomes.items()})
            for n, atom in self.atoms.items()
        }
        new_next = {
            (A(n), G(a), O(n, r)): frozenset(A(t) for t in ts)
            for (n, a, r), ts in self.next.items()
        }
        return Negotiation(
            tuple(G(a) for a in self.agents), new_atoms, A(self.initial), A(self.final),
            new_next, self.space,
        )


Targets = Union[str, Iterable[str]]


def negotiation(
    agents: Iterable[str],
    atoms: Mapping[str, tuple[Iterable[str], Mapping[str, Mapping[str, Targets]]]],
    initial: str,
    final: str,
    deltas: Optional[Mapping[tuple[str, str], Transformer]] = None,
    space: Optional[StateSpace] = None,
) -> Negotiation:
    """Convenience constructor.

    ``atoms`` maps an atom name to ``(parties, {outcome: {agent: targets}})``
    where ``targets`` is an atom name or an iterable of names. Outcomes of the
    final atom use an empty mapping. Missing deltas default to the symbolic
    leaf ``Label(atom, outcome)``, or to the identity if ``space`` is given.
    """
    deltas = dict(deltas or {})
    built: dict[str, Atom] = {}
    nxt: dict[Triple, frozenset[str]] = {}
    for name, (parties, outs) in atoms.items():
        parties = frozenset(parties)
        ts = {}
        for r, tmap in outs.items():
            if (name, r) in deltas:
                ts[r] = deltas[(name, r)]
            elif space is not None:
                ts[r] = Relation.identity(space)
            else:
                ts[r] = Label(name, r)
            for a in parties:
                tgt = tmap.get(a, ())
                nxt[(name, a, r)] = frozenset([tgt] if isinstance(tgt, str) else tgt)
        built[name] = Atom(name, parties, ts)
    return Negotiation(tuple(agents), built, initial, final, nxt, space)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


class ValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class NotDeterministic(ValueError):
    """Raised by operations that require a deterministic negotiation."""


def validate(neg: Negotiation) -> list[Violation]:
    """Every well-formedness violation of ``neg`` (empty list if none).

    Codes: ``clause-1`` (an agent missing from the initial or final atom),
    ``clause-2`` (empty next set off the final atom or non-empty on it),
    ``domain`` (next function not defined exactly on the triples),
    ``dangling`` (reference to an unknown atom), ``port`` (target atom lacks
    the agent), ``atom`` (bad parties/outcomes), ``transformer``.
    """
    out: list[Violation] = []
    agents = set(neg.agents)
    if not neg.agents:
        out.append(Violation("atom", "negotiation has no agents"))
    if len(agents) != len(neg.agents):
        out.append(Violation("atom", "duplicate agent names"))
    for special in ("initial", "final"):
        name = getattr(neg, special)
        if name not in neg.atoms:
            out.append(Violation("dangling", f"{special} atom {name!r} does not exist"))
    for name, atom in neg.atoms.items():
        if atom.name != name:
            out.append(Violation("atom", f"atom key {name!r} holds atom named {atom.name!r}"))
        if not atom.parties:
            out.append(Violation("atom", f"atom {name} has no parties"))
        if not atom.outcomes:
            out.append(Violation("atom", f"atom {name} has no outcomes"))
        stray = atom.parties - agents
        if stray:
            out.append(Violation("atom", f"atom {name} has unknown parties {sorted(stray)}"))
    for special, clause in ((neg.initial, "initial"), (neg.final, "final")):
        if special in neg.atoms:
            missing = agents - neg.atoms[special].parties
            if missing:
                out.append(Violation(
                    "clause-1", f"agents {sorted(missing)} do not participate in the {clause} atom {special}"))

    expected = set(neg.triples())
    present = set(neg.next)
    for t in sorted(expected - present):
        out.append(Violation("domain", f"next atoms undefined for {t}"))
    for t in sorted(present - expected):
        out.append(Violation("domain", f"next atoms defined outside T(N) for {t}"))

    for (n, a, r) in sorted(present & expected):
        ts = neg.next[(n, a, r)]
        if n == neg.final and ts:
            out.append(Violation("clause-2", f"final atom {n} sends {a} on {r} to {sorted(ts)}"))
        if n != neg.final and not ts:
            out.append(Violation("clause-2", f"non-final atom {n} sends {a} on {r} nowhere"))
        for t in sorted(ts):
            if t not in neg.atoms:
                out.append(Violation("dangling", f"({n},{a},{r}) refers to unknown atom {t!r}"))
            elif a not in neg.atoms[t].parties:
                out.append(Violation("port", f"({n},{a},{r}) leads to {t}, where {a} is not a party"))

    kinds = set()
    for name, atom in neg.atoms.items():
        for r, t in atom.outcomes.items():
            if isinstance(t, Relation):
                kinds.add("concrete")
                if neg.space is not None and t.space != neg.space:
                    out.append(Violation("transformer", f"delta({name},{r}) lives over another state space"))
                if not t.is_left_total():
                    out.append(Violation("transformer", f"delta({name},{r}) is not left-total"))
                if not is_s_transformer(t, atom.parties):
                    out.append(Violation("transformer", f"delta({name},{r}) changes non-parties"))
            elif isinstance(t, Expr):
                kinds.add("symbolic")
            else:
                out.append(Violation("transformer", f"delta({name},{r}) is not a transformer"))
    if len(kinds) > 1:
        out.append(Violation("transformer", "symbolic and concrete transformers are mixed"))
    return out


def is_deterministic(neg: Negotiation) -> bool:
    """True iff every non-final triple has exactly one next atom.

    The final atom is exempt: its next sets are empty by well-formedness.
    """
    return all(len(ts) == 1 for (n, _, _), ts in neg.next.items() if n != neg.final)


def require_deterministic(neg: Negotiation) -> None:
    if not is_deterministic(neg):
        raise NotDeterministic("negotiation has proper hyperarcs")
