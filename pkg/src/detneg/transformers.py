"""State transformers: symbolic expressions and concrete finite relations.

Two backends share one small algebra (``compose``, ``union``, ``star``):

* symbolic terms over ``(atom, outcome)`` labels, built from :class:`Label`,
  :class:`Concat`, :class:`Union`, :class:`Star` and :data:`IDENTITY`;
* concrete relations over a finite :class:`StateSpace`, stored as boolean
  adjacency matrices indexed by the global states of the space.

Mixing backends in one operation raises :class:`BackendMismatch`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Union as _U

import numpy as np

__all__ = [
    "BackendMismatch",
    "StateSpace",
    "Relation",
    "Expr",
    "Label",
    "Concat",
    "Union",
    "Star",
    "Identity",
    "IDENTITY",
    "Transformer",
    "compose",
    "union",
    "star",
    "apply_relation",
    "identity_like",
    "evaluate",
    "is_s_transformer",
]


class BackendMismatch(TypeError):
    """Raised when symbolic and concrete transformers are combined."""


# ---------------------------------------------------------------------------
# concrete backend


class StateSpace:
    """Finite product of per-agent local state sets.

    Agents are kept in lexicographic order; a global state is the tuple of
    local labels in that order.
    """

    def __init__(self, per_agent: Mapping[str, Iterable[str]]):
        spaces = {a: tuple(str(q) for q in qs) for a, qs in per_agent.items()}
        for a, qs in spaces.items():
            if not qs:
                raise ValueError(f"agent {a!r} has an empty state set")
            if len(set(qs)) != len(qs):
                raise ValueError(f"agent {a!r} has duplicate state labels")
        self.agents: tuple[str, ...] = tuple(sorted(spaces))
        self.local: dict[str, tuple[str, ...]] = {a: spaces[a] for a in self.agents}
        self.states: tuple[tuple[str, ...], ...] = tuple(
            itertools.product(*(self.local[a] for a in self.agents))
        )
        self.index: dict[tuple[str, ...], int] = {q: i for i, q in enumerate(self.states)}
        self._key = tuple((a, self.local[a]) for a in self.agents)

    def __len__(self) -> int:
        return len(self.states)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StateSpace) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        inner = ", ".join(f"{a}: {list(qs)}" for a, qs in self._key)
        return f"StateSpace({{{inner}}})"

    def position(self, agent: str) -> int:
        return self.agents.index(agent)

    def project(self, state: tuple[str, ...], agents: Iterable[str]) -> tuple[str, ...]:
        return tuple(state[self.position(a)] for a in sorted(agents))


class Relation:
    """A relation on the global states of a :class:`StateSpace`.

    ``matrix[i, j]`` is true iff ``(states[i], states[j])`` is in the relation.
    Instances are immutable (the matrix is marked read-only).
    """

    __slots__ = ("space", "matrix", "_hash")

    def __init__(self, space: StateSpace, matrix: np.ndarray):
        m = np.array(matrix, dtype=bool)
        if m.shape != (len(space), len(space)):
            raise ValueError("matrix shape does not match the state space")
        m.setflags(write=False)
        self.space = space
        self.matrix = m
        self._hash = None

    # constructors ---------------------------------------------------------

    @classmethod
    def identity(cls, space: StateSpace) -> "Relation":
        return cls(space, np.eye(len(space), dtype=bool))

    @classmethod
    def from_pairs(
        cls,
        space: StateSpace,
        pairs: Iterable[tuple[tuple[str, ...], tuple[str, ...]]],
        check_total: bool = True,
    ) -> "Relation":
        """Build a relation from explicit global state pairs."""
        m = np.zeros((len(space), len(space)), dtype=bool)
        for q, q2 in pairs:
            try:
                m[space.index[tuple(q)], space.index[tuple(q2)]] = True
            except KeyError as exc:
                raise ValueError(f"state {exc.args[0]!r} is not in the state space") from None
        rel = cls(space, m)
        if check_total:
            rel.check_left_total()
        return rel

    @classmethod
    def from_local(
        cls,
        space: StateSpace,
        parties: Iterable[str],
        pairs: Iterable[tuple[tuple[str, ...], tuple[str, ...]]],
        check_total: bool = True,
    ) -> "Relation":
        """Lift pairs over the parties' local states to a global relation.

        Local tuples list the parties in lexicographic order. Non-parties keep
        their state.
        """
        parties = sorted(parties)
        pos = [space.position(a) for a in parties]
        local = {}
        for q, q2 in pairs:
            q, q2 = tuple(q), tuple(q2)
            if len(q) != len(parties) or len(q2) != len(parties):
                raise ValueError(f"local pair {q}->{q2} does not match parties {parties}")
            local.setdefault(q, []).append(q2)
        m = np.zeros((len(space), len(space)), dtype=bool)
        for i, state in enumerate(space.states):
            key = tuple(state[p] for p in pos)
            for image in local.get(key, ()):
                new = list(state)
                for p, v in zip(pos, image):
                    new[p] = v
                try:
                    m[i, space.index[tuple(new)]] = True
                except KeyError:
                    raise ValueError(f"local state {image!r} is not in the state space") from None
        rel = cls(space, m)
        if check_total:
            rel.check_left_total()
        return rel

    @classmethod
    def from_function(
        cls,
        space: StateSpace,
        parties: Iterable[str],
        fn: Callable[[tuple[str, ...]], Iterable[tuple[str, ...]]],
    ) -> "Relation":
        """Lift a local nondeterministic function ``q_P -> {q'_P}``."""
        parties = sorted(parties)
        locals_ = itertools.product(*(space.local[a] for a in parties))
        pairs = [(q, q2) for q in locals_ for q2 in fn(q)]
        return cls.from_local(space, parties, pairs)

    # queries --------------------------------------------------------------

    def check_left_total(self) -> None:
        missing = np.flatnonzero(~self.matrix.any(axis=1))
        if missing.size:
            q = self.space.states[int(missing[0])]
            raise ValueError(f"relation is not left-total: no image for {q}")

    def is_left_total(self) -> bool:
        return bool(self.matrix.any(axis=1).all())

    def pairs(self) -> set[tuple[tuple[str, ...], tuple[str, ...]]]:
        st = self.space.states
        return {(st[i], st[j]) for i, j in zip(*np.nonzero(self.matrix))}

    def image(self, state: tuple[str, ...]) -> set[tuple[str, ...]]:
        try:
            i = self.space.index[tuple(state)]
        except KeyError:
            raise ValueError(f"state {state!r} is not in the state space") from None
        return {self.space.states[j] for j in np.flatnonzero(self.matrix[i])}

    def __len__(self) -> int:
        return int(self.matrix.sum())

    def __le__(self, other: "Relation") -> bool:
        return bool((self.matrix <= other.matrix).all())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.space, np.packbits(self.matrix).tobytes()))
        return self._hash

    def __repr__(self) -> str:
        return f"Relation(<{len(self)} pairs over {len(self.space)} states>)"


def _bool_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.uint8) @ b.astype(np.uint8)) > 0


def _closure(m: np.ndarray) -> np.ndarray:
    acc = m | np.eye(m.shape[0], dtype=bool)
    while True:
        nxt = acc | _bool_matmul(acc, acc)
        if np.array_equal(nxt, acc):
            return acc
        acc = nxt


# ---------------------------------------------------------------------------
# symbolic backend


class Expr:
    """Base class of symbolic transformer terms.

    Terms are hash-consed loosely: every node caches its hash and string so
    large shared DAGs stay cheap to compare.
    """

    __slots__ = ()

    def labels(self) -> frozenset["Label"]:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(Expr):
    def labels(self) -> frozenset["Label"]:
        return frozenset()

    def __str__(self) -> str:
        return "id"


IDENTITY = Identity()


@dataclass(frozen=True)
class Label(Expr):
    atom: str
    outcome: str

    def labels(self) -> frozenset["Label"]:
        return frozenset([self])

    def __str__(self) -> str:
        return f"{self.atom}:{self.outcome}"


@dataclass(frozen=True, eq=False)
class _Node(Expr):
    _h: int = field(init=False, repr=False, compare=False)
    _s: str = field(init=False, repr=False, compare=False)

    def _key(self):
        raise NotImplementedError

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((type(self).__name__, self._key())))
        object.__setattr__(self, "_s", self._render())

    def __hash__(self) -> int:
        return self._h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (
            type(self) is type(other)
            and self._h == other._h  # type: ignore[attr-defined]
            and self._key() == other._key()  # type: ignore[attr-defined]
        )

    def __str__(self) -> str:
        return self._s


@dataclass(frozen=True, eq=False)
class Concat(_Node):
    parts: tuple[Expr, ...] = ()

    def _key(self):
        return self.parts

    def _render(self) -> str:
        return "(cat " + " ".join(str(p) for p in self.parts) + ")"

    def labels(self) -> frozenset[Label]:
        return frozenset().union(*(p.labels() for p in self.parts))


@dataclass(frozen=True, eq=False)
class Union(_Node):
    items: frozenset[Expr] = frozenset()

    def _key(self):
        return self.items

    def _render(self) -> str:
        return "(alt " + " ".join(sorted(str(p) for p in self.items)) + ")"

    def labels(self) -> frozenset[Label]:
        return frozenset().union(*(p.labels() for p in self.items))


@dataclass(frozen=True, eq=False)
class Star(_Node):
    inner: Expr = IDENTITY

    def _key(self):
        return self.inner

    def _render(self) -> str:
        return f"(star {self.inner})"

    def labels(self) -> frozenset[Label]:
        return self.inner.labels()


def _concat(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Identity):
        return b
    if isinstance(b, Identity):
        return a
    parts = (a.parts if isinstance(a, Concat) else (a,)) + (b.parts if isinstance(b, Concat) else (b,))
    return Concat(parts)


def _union(a: Expr, b: Expr) -> Expr:
    items = set(a.items if isinstance(a, Union) else (a,))
    items.update(b.items if isinstance(b, Union) else (b,))
    if len(items) == 1:
        return next(iter(items))
    return Union(frozenset(items))


def _star(a: Expr) -> Expr:
    if isinstance(a, (Identity, Star)):
        return a
    return Star(a)


# ---------------------------------------------------------------------------
# shared algebra

Transformer = _U[Expr, Relation]


def _same_space(t1: Relation, t2: Relation) -> None:
    if t1.space != t2.space:
        raise BackendMismatch("relations live over different state spaces")


def compose(t1: Transformer, t2: Transformer) -> Transformer:
    """Sequential composition: first ``t1``, then ``t2``."""
    if isinstance(t1, Expr) and isinstance(t2, Expr):
        return _concat(t1, t2)
    if isinstance(t1, Relation) and isinstance(t2, Relation):
        _same_space(t1, t2)
        return Relation(t1.space, _bool_matmul(t1.matrix, t2.matrix))
    raise BackendMismatch(f"cannot compose {type(t1).__name__} with {type(t2).__name__}")


def union(t1: Transformer, t2: Transformer) -> Transformer:
    if isinstance(t1, Expr) and isinstance(t2, Expr):
        return _union(t1, t2)
    if isinstance(t1, Relation) and isinstance(t2, Relation):
        _same_space(t1, t2)
        return Relation(t1.space, t1.matrix | t2.matrix)
    raise BackendMismatch(f"cannot unite {type(t1).__name__} with {type(t2).__name__}")


def star(t: Transformer) -> Transformer:
    """Reflexive-transitive closure."""
    if isinstance(t, Expr):
        return _star(t)
    if isinstance(t, Relation):
        return Relation(t.space, _closure(t.matrix))
    raise BackendMismatch(f"not a transformer: {t!r}")


def identity_like(t: Transformer) -> Transformer:
    """The identity transformer of the same backend as ``t``."""
    if isinstance(t, Relation):
        return Relation.identity(t.space)
    return IDENTITY


def apply_relation(t: Relation, q0: tuple[str, ...]) -> set[tuple[str, ...]]:
    """Image of a global state under a concrete transformer."""
    if not isinstance(t, Relation):
        raise BackendMismatch("apply_relation needs a concrete transformer")
    return t.image(q0)


def evaluate(expr: Expr, leaves: Mapping[Label, Relation], space: StateSpace) -> Relation:
    """Interpret a symbolic term over concrete leaf relations."""
    memo: dict[Expr, Relation] = {}

    def go(e: Expr) -> Relation:
        hit = memo.get(e)
        if hit is not None:
            return hit
        if isinstance(e, Identity):
            out = Relation.identity(space)
        elif isinstance(e, Label):
            out = leaves[e]
        elif isinstance(e, Concat):
            out = go(e.parts[0])
            for p in e.parts[1:]:
                out = compose(out, go(p))
        elif isinstance(e, Union):
            it = iter(sorted(e.items, key=str))
            out = go(next(it))
            for p in it:
                out = union(out, go(p))
        elif isinstance(e, Star):
            out = star(go(e.inner))
        else:
            raise TypeError(f"unknown expression node {e!r}")
        memo[e] = out
        return out

    return go(expr)


def is_s_transformer(t: Relation, parties: Iterable[str]) -> bool:
    """True iff every pair of ``t`` leaves non-parties unchanged."""
    space = t.space
    fixed = [space.position(a) for a in space.agents if a not in set(parties)]
    if not fixed:
        return True
    st = space.states
    for i, j in zip(*np.nonzero(t.matrix)):
        if any(st[i][p] != st[j][p] for p in fixed):
            return False
    return True
