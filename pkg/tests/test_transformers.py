from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detneg.transformers import (
    IDENTITY,
    BackendMismatch,
    Concat,
    Label,
    Relation,
    StateSpace,
    Star,
    Union,
    compose,
    evaluate,
    identity_like,
    is_s_transformer,
    star,
    union,
)

SPACE = StateSpace({"a": ["0", "1"], "b": ["x", "y", "z"]})


# set-of-pairs reference semantics, independent of the matrix code


def ref_compose(p, q):
    return {(x, z) for x, y in p for y2, z in q if y == y2}


def ref_star(p, states):
    acc = {(s, s) for s in states} | set(p)
    while True:
        nxt = acc | ref_compose(acc, acc)
        if nxt == acc:
            return acc
        acc = nxt


def relations(space):
    states = list(space.states)
    return st.lists(st.tuples(st.sampled_from(states), st.sampled_from(states)), max_size=20).map(
        lambda pairs: Relation.from_pairs(space, pairs, check_total=False)
    )


@settings(max_examples=60, deadline=None)
@given(relations(SPACE), relations(SPACE))
def test_compose_matches_pair_semantics(r1, r2):
    assert compose(r1, r2).pairs() == ref_compose(r1.pairs(), r2.pairs())


@settings(max_examples=60, deadline=None)
@given(relations(SPACE), relations(SPACE))
def test_union_matches_pair_semantics(r1, r2):
    assert union(r1, r2).pairs() == r1.pairs() | r2.pairs()


@settings(max_examples=60, deadline=None)
@given(relations(SPACE))
def test_star_matches_pair_semantics(r):
    assert star(r).pairs() == ref_star(r.pairs(), SPACE.states)


@settings(max_examples=40, deadline=None)
@given(relations(SPACE), relations(SPACE), relations(SPACE))
def test_concrete_algebra_laws(r1, r2, r3):
    assert compose(compose(r1, r2), r3) == compose(r1, compose(r2, r3))
    assert compose(r1, union(r2, r3)) == union(compose(r1, r2), compose(r1, r3))
    assert star(star(r1)) == star(r1)
    assert compose(star(r1), star(r1)) == star(r1)


def test_identity_is_neutral():
    r = Relation.from_pairs(SPACE, [(s, SPACE.states[0]) for s in SPACE.states])
    ident = identity_like(r)
    assert compose(ident, r) == r
    assert compose(r, ident) == r
    assert identity_like(Label("n", "r")) is IDENTITY


def test_from_local_keeps_non_parties():
    r = Relation.from_local(SPACE, ["a"], [(("0",), ("1",)), (("1",), ("1",))])
    assert r.image(("0", "y")) == {("1", "y")}
    assert is_s_transformer(r, ["a"])
    assert not is_s_transformer(Relation.from_pairs(SPACE, [(s, ("0", "x")) for s in SPACE.states]), ["a"])


def test_left_totality_is_checked():
    with pytest.raises(ValueError, match="left-total"):
        Relation.from_pairs(SPACE, [(("0", "x"), ("0", "x"))])
    with pytest.raises(ValueError, match="not in the state space"):
        Relation.from_pairs(SPACE, [(("9", "x"), ("0", "x"))], check_total=False)


def test_relations_are_immutable():
    r = Relation.identity(SPACE)
    with pytest.raises(ValueError):
        r.matrix[0, 1] = True


def test_state_space_is_sorted_and_validated():
    space = StateSpace({"z": ["1"], "a": ["p", "q"]})
    assert space.agents == ("a", "z")
    assert space.states == (("p", "1"), ("q", "1"))
    with pytest.raises(ValueError):
        StateSpace({"a": []})
    with pytest.raises(ValueError):
        StateSpace({"a": ["x", "x"]})


def test_symbolic_terms_normalize():
    a, b, c = Label("n", "a"), Label("n", "b"), Label("m", "c")
    assert compose(compose(a, b), c) == Concat((a, b, c))
    assert compose(IDENTITY, a) == a
    assert union(a, union(b, a)) == Union(frozenset({a, b}))
    assert union(a, a) == a
    assert star(star(a)) == Star(a)
    assert star(IDENTITY) == IDENTITY
    assert str(compose(a, star(union(b, c)))) == "(cat n:a (star (alt m:c n:b)))"


def test_backends_do_not_mix():
    with pytest.raises(BackendMismatch):
        compose(Label("n", "a"), Relation.identity(SPACE))
    other = StateSpace({"a": ["0"]})
    with pytest.raises(BackendMismatch):
        union(Relation.identity(SPACE), Relation.identity(other))


@settings(max_examples=40, deadline=None)
@given(relations(SPACE), relations(SPACE), st.integers(0, 3))
def test_evaluate_is_a_homomorphism(r1, r2, shape):
    a, b = Label("n", "a"), Label("n", "b")
    leaves = {a: r1, b: r2}
    terms = [
        (compose(a, b), compose(r1, r2)),
        (union(a, b), union(r1, r2)),
        (star(compose(a, b)), star(compose(r1, r2))),
        (compose(star(a), union(b, IDENTITY)), compose(star(r1), union(r2, Relation.identity(SPACE)))),
    ]
    term, expected = terms[shape]
    assert evaluate(term, leaves, SPACE) == expected


def test_matrix_indexing_follows_state_order():
    pairs = list(itertools.islice(itertools.product(SPACE.states, repeat=2), 0, 36, 7))
    r = Relation.from_pairs(SPACE, pairs, check_total=False)
    rows, cols = np.nonzero(r.matrix)
    assert {(SPACE.states[i], SPACE.states[j]) for i, j in zip(rows, cols)} == set(pairs)
