from __future__ import annotations

import random

import pytest

from detneg.generate import generate_sound_sdn, random_mutant, retarget_mutants, with_random_relations
from detneg.model import is_deterministic, validate
from detneg.semantics import soundness_oracle
from detneg.structure import is_acyclic, negotiation_graph
from detneg.textio import serialize
from detneg.transformers import Relation, is_s_transformer


def test_two_atoms_is_the_trivial_chain():
    neg = generate_sound_sdn(1, 2, 1)
    assert set(neg.atoms) == {"n0", "nf"}
    assert neg.out() == [("n0", "o0"), ("nf", "o1")]
    assert neg.next[("n0", "a0", "o0")] == {"nf"}


def test_exact_atom_count_and_determinism_in_seed():
    for seed in range(20):
        neg = generate_sound_sdn(seed, 7, 3, 2)
        assert len(neg.atoms) == 7
        assert serialize(neg) == serialize(generate_sound_sdn(seed, 7, 3, 2))


def test_generated_instances_are_sound_deterministic_and_valid():
    # the generator's own acceptance check: 500 seeded instances
    for seed in range(500):
        rng = random.Random(seed)
        neg = generate_sound_sdn(seed, rng.randint(2, 8), rng.randint(1, 3), rng.randint(0, 3))
        assert validate(neg) == []
        assert is_deterministic(neg)
        assert soundness_oracle(neg), seed


def test_no_loops_means_acyclic():
    for seed in range(100):
        neg = generate_sound_sdn(seed, 2 + seed % 12, 1 + seed % 4, 0)
        assert is_acyclic(negotiation_graph(neg))


def test_loops_make_the_graph_cyclic():
    for seed in range(50):
        assert not is_acyclic(negotiation_graph(generate_sound_sdn(seed, 6, 2, 1)))


@pytest.mark.parametrize("args", [(0, 1, 1, 0), (0, 3, 0, 0), (0, 3, 1, -1)])
def test_parameter_bounds(args):
    with pytest.raises(ValueError):
        generate_sound_sdn(*args)


def test_retarget_mutants_change_one_edge():
    neg = generate_sound_sdn(4, 5, 2, 1)
    mutants = list(retarget_mutants(neg))
    assert mutants
    for m in mutants:
        diff = [k for k in neg.next if neg.next[k] != m.next[k]]
        assert len(diff) == 1
        assert validate(m) == [] and is_deterministic(m)


def test_random_mutant_is_seeded():
    neg = generate_sound_sdn(9, 6, 3, 1)
    a = random_mutant(neg, random.Random(1))
    b = random_mutant(neg, random.Random(1))
    assert a == b and a != neg


def test_many_mutants_are_unsound():
    unsound = 0
    for seed in range(60):
        neg = generate_sound_sdn(seed, 6, 2, 1)
        unsound += not soundness_oracle(random_mutant(neg, random.Random(seed)))
    assert unsound > 30


def test_random_relations_are_valid_transformers():
    neg = with_random_relations(generate_sound_sdn(2, 6, 3, 1), 2, states=3)
    assert validate(neg) == []
    assert neg.backend == "concrete"
    assert len(neg.space) == 27
    for n, r in neg.out():
        t = neg.delta(n, r)
        assert isinstance(t, Relation) and t.is_left_total()
        assert is_s_transformer(t, neg.parties(n))
