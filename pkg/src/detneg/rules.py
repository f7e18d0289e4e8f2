"""Merge, shortcut and iteration rules, transcripts, and replay onto a parent."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from .model import Atom, Negotiation
from .transformers import compose, star, union

__all__ = [
    "MERGE",
    "SHORTCUT",
    "ITERATION",
    "MAX_NAME",
    "GuardError",
    "EmptyOutcome",
    "RuleApplication",
    "Transcript",
    "fresh_name",
    "find_merges",
    "apply_merge",
    "merge_all",
    "unconditionally_enables",
    "find_shortcuts",
    "shortcut_applicable",
    "apply_shortcut",
    "find_iterations",
    "apply_iteration",
    "apply",
    "replay",
]

MERGE, SHORTCUT, ITERATION = "merge", "shortcut", "iteration"
MAX_NAME = 48


class GuardError(ValueError):
    """A rule was applied where its guard does not hold."""


class EmptyOutcome(GuardError):
    """Iteration on an atom whose only outcomes are self-loops."""


@dataclass(frozen=True)
class RuleApplication:
    """One rule application.

    ``operands`` are the consumed outcomes of ``atom``: two for a merge, one
    for shortcut and iteration. ``target`` is the enabled atom of a shortcut.
    ``produced[i]`` is the fresh outcome built from ``derived_from[i]``: an
    outcome of ``target`` for a shortcut, a surviving outcome of ``atom`` for
    an iteration, and the merged pair (joined by ``+``) for a merge.
    """

    kind: str
    atom: str
    operands: tuple[str, ...]
    produced: tuple[str, ...]
    derived_from: tuple[str, ...] = ()
    target: Optional[str] = None
    removed_atom: Optional[str] = None

    def to_line(self) -> str:
        parts = [self.kind, f"atom={self.atom}", f"outcomes={','.join(self.operands)}"]
        if self.target is not None:
            parts.append(f"enables={self.target}")
        parts.append(f"produced={','.join(self.produced)}")
        if self.kind != MERGE:
            parts.append(f"derived={','.join(self.derived_from)}")
        if self.removed_atom is not None:
            parts.append(f"removed={self.removed_atom}")
        return " ".join(parts)

    @classmethod
    def from_line(cls, line: str) -> "RuleApplication":
        kind, *rest = line.split()
        kv = dict(item.split("=", 1) for item in rest)
        split = lambda s: tuple(s.split(",")) if s else ()  # noqa: E731
        operands = split(kv["outcomes"])
        derived = split(kv.get("derived", "")) if kind != MERGE else ("+".join(operands),)
        return cls(kind, kv["atom"], operands, split(kv["produced"]), derived,
                   kv.get("enables"), kv.get("removed"))


@dataclass(frozen=True)
class Transcript:
    applications: tuple[RuleApplication, ...] = ()

    def __iter__(self) -> Iterator[RuleApplication]:
        return iter(self.applications)

    def __len__(self) -> int:
        return len(self.applications)

    def __add__(self, other: "Transcript") -> "Transcript":
        return Transcript(self.applications + tuple(other))

    def without_last(self) -> "Transcript":
        return Transcript(self.applications[:-1])

    def counts(self) -> dict[str, int]:
        out = {MERGE: 0, SHORTCUT: 0, ITERATION: 0}
        for app in self.applications:
            out[app.kind] += 1
        return out

    def dumps(self) -> str:
        return "".join(app.to_line() + "\n" for app in self.applications)

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        lines = (l.strip() for l in text.splitlines())
        return cls(tuple(RuleApplication.from_line(l) for l in lines if l and not l.startswith("#")))


def fresh_name(base: str, taken: Iterable[str]) -> str:
    """``base`` (hashed if long), suffixed with ``~k`` if already taken."""
    taken = set(taken)
    if len(base) > MAX_NAME:
        base = "h" + hashlib.blake2b(base.encode(), digest_size=8).hexdigest()
    name, k = base, 0
    while name in taken:
        k += 1
        name = f"{base}~{k}"
    return name


def _replace_atom(neg: Negotiation, atom: Atom, nxt: dict, drop: Iterable[str] = (),
                  final: Optional[str] = None) -> Negotiation:
    atoms = {k: v for k, v in neg.atoms.items() if k not in drop}
    atoms[atom.name] = atom
    return neg.with_atoms(atoms, nxt, final=final)


# ---------------------------------------------------------------------------
# merge


def find_merges(neg: Negotiation) -> list[tuple[str, str, str]]:
    # the final atom is skipped: all its outcomes have empty targets, and
    # merging them would change the set of final outcomes
    out = []
    for n in sorted(neg.atoms):
        if n == neg.final:
            continue
        rs = neg.outcomes(n)
        tm = {r: neg.target_map(n, r) for r in rs}
        out.extend((n, r1, r2) for i, r1 in enumerate(rs) for r2 in rs[i + 1:] if tm[r1] == tm[r2])
    return out


def apply_merge(neg: Negotiation, redex: tuple[str, str, str]) -> tuple[Negotiation, RuleApplication]:
    n, r1, r2 = redex
    if n not in neg.atoms or n == neg.final or r1 == r2:
        raise GuardError(f"no merge at {redex}")
    atom = neg.atoms[n]
    if r1 not in atom.outcomes or r2 not in atom.outcomes or neg.targets(n, r1) != neg.targets(n, r2):
        raise GuardError(f"merge guard fails at {redex}")
    r1, r2 = sorted((r1, r2))
    outs = {r: t for r, t in atom.outcomes.items() if r not in (r1, r2)}
    rf = fresh_name(f"{r1}+{r2}", outs)
    outs[rf] = union(atom.outcomes[r1], atom.outcomes[r2])
    nxt = {k: v for k, v in neg.next.items() if not (k[0] == n and k[2] in (r1, r2))}
    for a in atom.parties:
        nxt[(n, a, rf)] = neg.next[(n, a, r1)]
    app = RuleApplication(MERGE, n, (r1, r2), (rf,), (f"{r1}+{r2}",))
    return _replace_atom(neg, Atom(n, atom.parties, outs), nxt), app


def merge_all(neg: Negotiation, keep=None, observer=None) -> tuple[Negotiation, list[RuleApplication]]:
    """Apply merges until none is left. ``keep(neg, redex)`` can filter the
    redexes; ``observer(before, app, after)`` sees every application."""
    apps = []
    while True:
        redexes = [x for x in find_merges(neg) if keep is None or keep(neg, x)]
        if not redexes:
            return neg, apps
        before = neg
        neg, app = apply_merge(neg, redexes[0])
        if observer is not None:
            observer(before, app, neg)
        apps.append(app)


# ---------------------------------------------------------------------------
# shortcut


def unconditionally_enables(neg: Negotiation, n: str, r: str, n2: str) -> bool:
    pn2 = neg.parties(n2)
    return pn2 <= neg.parties(n) and all(neg.next[(n, a, r)] == {n2} for a in pn2)


def find_shortcuts(neg: Negotiation) -> list[tuple[str, str, str]]:
    """Every ``(n, r, n')`` with ``n' != n`` and ``(n, r)`` unconditionally
    enabling ``n'``. See :func:`shortcut_applicable` for the extra condition
    on shortcuts into the final atom."""
    out = []
    for n in sorted(neg.atoms):
        if n == neg.final:
            continue
        for r in neg.outcomes(n):
            ts = set().union(*(neg.next[(n, a, r)] for a in neg.parties(n)))
            out.extend((n, r, t) for t in sorted(ts) if t != n and unconditionally_enables(neg, n, r, t))
    return out


def shortcut_applicable(neg: Negotiation, redex: tuple[str, str, str]) -> bool:
    """Guard plus, for a shortcut into the final atom, the requirement that
    it absorbs the final atom: ``r`` is the only outcome of ``n`` and the
    only way into the final atom."""
    n, r, n2 = redex
    if n not in neg.atoms or n2 not in neg.atoms or n == n2 or n == neg.final:
        return False
    if r not in neg.atoms[n].outcomes or not unconditionally_enables(neg, n, r, n2):
        return False
    if n2 == neg.final:
        return neg.outcomes(n) == [r] and all(k[0] == n for k in neg.incoming(n2))
    return True


def apply_shortcut(neg: Negotiation, redex: tuple[str, str, str]) -> tuple[Negotiation, RuleApplication]:
    n, r, n2 = redex
    if not shortcut_applicable(neg, redex):
        raise GuardError(f"shortcut guard fails at {redex}")
    atom, other = neg.atoms[n], neg.atoms[n2]
    outs = {k: t for k, t in atom.outcomes.items() if k != r}
    nxt = {k: v for k, v in neg.next.items() if not (k[0] == n and k[2] == r)}
    produced, derived = [], []
    for r2 in neg.outcomes(n2):
        rf = fresh_name(f"{r}.{r2}", outs)
        outs[rf] = compose(atom.outcomes[r], other.outcomes[r2])
        for a in atom.parties:
            nxt[(n, a, rf)] = neg.next[(n2, a, r2)] if a in other.parties else neg.next[(n, a, r)]
        produced.append(rf)
        derived.append(r2)
    removed = None
    final = None
    if n2 != neg.initial and not any(n2 in v for v in nxt.values()):
        removed = n2
        nxt = {k: v for k, v in nxt.items() if k[0] != n2}
        if n2 == neg.final:
            final = n
    app = RuleApplication(SHORTCUT, n, (r,), tuple(produced), tuple(derived), n2, removed)
    drop = (removed,) if removed else ()
    return _replace_atom(neg, Atom(n, atom.parties, outs), nxt, drop, final), app


# ---------------------------------------------------------------------------
# iteration


def find_iterations(neg: Negotiation) -> list[tuple[str, str]]:
    return [
        (n, r)
        for n in sorted(neg.atoms)
        if n != neg.final
        for r in neg.outcomes(n)
        if all(neg.next[(n, a, r)] == {n} for a in neg.parties(n))
    ]


def apply_iteration(neg: Negotiation, redex: tuple[str, str]) -> tuple[Negotiation, RuleApplication]:
    n, r = redex
    if redex not in find_iterations(neg):
        raise GuardError(f"iteration guard fails at {redex}")
    atom = neg.atoms[n]
    rest = [x for x in neg.outcomes(n) if x != r]
    if not rest:
        raise EmptyOutcome(f"atom {n} has no outcome besides the self-loop {r}")
    loop = star(atom.outcomes[r])
    outs: dict = {}
    nxt = {k: v for k, v in neg.next.items() if k[0] != n}
    produced = []
    for r2 in rest:
        rf = fresh_name(f"{r}*.{r2}", outs)
        outs[rf] = compose(loop, atom.outcomes[r2])
        for a in atom.parties:
            nxt[(n, a, rf)] = neg.next[(n, a, r2)]
        produced.append(rf)
    app = RuleApplication(ITERATION, n, (r,), tuple(produced), tuple(rest))
    return _replace_atom(neg, Atom(n, atom.parties, outs), nxt), app


def apply(neg: Negotiation, kind: str, redex: tuple) -> tuple[Negotiation, RuleApplication]:
    return {MERGE: apply_merge, SHORTCUT: apply_shortcut, ITERATION: apply_iteration}[kind](neg, redex)


# ---------------------------------------------------------------------------
# replay


def replay(
    neg: Negotiation,
    transcript: Transcript,
    back_map: Mapping[str, str],
    observer=None,
) -> tuple[Negotiation, Transcript]:
    """Apply the rules of an s-negotiation's transcript to the parent ``neg``.

    Atoms are sent through ``back_map``. Outcome names are translated through
    the correspondence recorded by earlier applications, since fresh names
    in the parent may differ (the parent's atoms can have more outcomes).
    Every guard is re-checked in the parent, and atom removal is decided by
    the parent's own incoming references. An application that touches the
    fresh final atom of the split raises :class:`GuardError`; so does any
    guard failure.
    """
    split_final = {k for k, v in back_map.items() if k != v}
    names: dict[tuple[str, str], str] = {}
    name = lambda n, r: names.get((n, r), r)  # noqa: E731
    done = []
    for app in transcript:
        if app.atom in split_final or app.target in split_final:
            raise GuardError(f"application touches the split final atom: {app.to_line()}")
        n = back_map.get(app.atom, app.atom)
        if app.kind == MERGE:
            redex = (n, *(name(app.atom, r) for r in app.operands))
        elif app.kind == SHORTCUT:
            redex = (n, name(app.atom, app.operands[0]), back_map.get(app.target, app.target))
        else:
            redex = (n, name(app.atom, app.operands[0]))
        if n not in neg.atoms:
            raise GuardError(f"atom {n} no longer exists in the parent")
        before = neg
        neg, real = apply(neg, app.kind, redex)
        if observer is not None:
            observer(before, real, neg)
        if app.kind == MERGE:
            names[(app.atom, app.produced[0])] = real.produced[0]
        else:
            src = app.target if app.kind == SHORTCUT else app.atom
            by_source = dict(zip(real.derived_from, real.produced))
            for p, d in zip(app.produced, app.derived_from):
                names[(app.atom, p)] = by_source[name(src, d)]
        done.append(real)
    return neg, Transcript(tuple(done))
