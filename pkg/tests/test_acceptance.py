"""Acceptance suite: one test per criterion.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion (see conftest.py). Run on its own with
``python tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py``.
"""

from __future__ import annotations

import io
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from detneg.cli import main
from detneg.fixtures import (
    cyclic_without_loops,
    fdm_cyclic,
    fdm_deadlock,
    loop_without_synchronizer,
    nested_loops,
    one_agent_loop,
)
from detneg.generate import generate_sound_sdn, random_mutant, with_random_relations
from detneg.model import is_deterministic
from detneg.rules import ITERATION, MERGE, SHORTCUT, replay
from detneg.semantics import LimitExceeded, reachability_graph, soundness_oracle, summary_oracle
from detneg.structure import (
    enumerate_loops,
    enumerate_minimal_loops,
    fragment,
    is_acyclic,
    negotiation_graph,
    split_negotiation,
    synchronizers,
)
from detneg.summarize import check_sound_reduction, summarize, summarize_acyclic
from detneg.textio import parse, serialize

CORPUS = Path(__file__).resolve().parents[1] / "corpus"


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue()


def before_iterations(store):
    def observer(before, app, after):
        if app.kind == ITERATION:
            store.append(before)

    return observer


@pytest.mark.criterion(1, "cyclic family summarizes and both methods agree; deadlock witness")
def test_cyclic_family_and_deadlock_witness():
    start = time.perf_counter()
    result = summarize(fdm_cyclic())
    assert result and len(result.negotiation.atoms) == 1
    code, out = cli("sound", str(CORPUS / "fdm_cyclic.neg"), "--method", "both")
    assert time.perf_counter() - start < 1.0
    assert code == 0 and out == "Sound (agree)\n"

    verdict = soundness_oracle(fdm_deadlock())
    assert not verdict and verdict.kind == "deadlock"
    assert (("n0", "st"), ("nFD", "yes")) in verdict.sequences


@pytest.mark.criterion(2, "nested loops reduce in two iterations, inner first, with reproducible shapes")
def test_nested_loops_pipeline():
    neg = nested_loops()
    live = []
    result = summarize(neg, observer=before_iterations(live))
    assert result and len(result.negotiation.atoms) == 1
    assert [it.synchronizer for it in result.stats.iterations] == ["n2", "n1"]

    inner, outer = live
    # the inner loop is folded into a self-loop on n2, n4 is gone
    assert set(inner.atoms) == {"n0", "n1", "n2", "n3", "n5", "nf"}
    assert [r for r in inner.outcomes("n2") if inner.targets("n2", r) == {"D": {"n2"}}] == ["a.b"]
    # the outer loop is a single atom with one self-loop and one exit
    assert set(outer.atoms) == {"n0", "n1", "nf"}
    kinds = sorted(outer.targets("n1", r)["D"] == {"n1"} for r in outer.outcomes("n1"))
    assert kinds == [False, True]

    replayed = []
    after, real = replay(neg, result.transcript, {n: n for n in neg.atoms}, before_iterations(replayed))
    assert [serialize(x) for x in replayed] == [serialize(x) for x in live]
    assert real == result.transcript and after == result.negotiation


@pytest.mark.criterion(3, "cyclic graph without loops; loop without a synchronizer")
def test_structural_counterexamples():
    left = cyclic_without_loops()
    assert not is_acyclic(negotiation_graph(left))
    rg = reachability_graph(left)
    assert nx.is_directed_acyclic_graph(nx.DiGraph([(i, j) for i, _, _, j in rg.edge_triples()]))
    assert not enumerate_loops(left)

    right = loop_without_synchronizer()
    assert not is_deterministic(right)
    loops = [l for l in enumerate_minimal_loops(right) if set(l.atoms) == {"n1", "n2"}]
    assert loops and synchronizers(right, loops[0]) == set()


@pytest.mark.criterion(4, "one-agent loop: outcome growth, n3 kept, summary reached")
def test_one_agent_loop_trace():
    neg = one_agent_loop()
    split = split_negotiation(neg, fragment(neg, "n1"))
    sub = summarize(split.negotiation)
    assert sub
    steps = []

    def observer(before, app, after):
        steps.append((app, before, after))

    after, _ = replay(neg, sub.transcript.without_last(), split.back_map, observer)
    shortcuts = [(app, b, a) for app, b, a in steps if app.kind == SHORTCUT and app.atom == "n1"]
    (first, b1, a1), (second, b2, a2) = shortcuts[:2]
    assert len(first.produced) == 3 and a1.out_count() - b1.out_count() == 2
    assert len(second.produced) == 2 and a2.out_count() - b2.out_count() == 1
    assert first.removed_atom is None and "n3" in a1.atoms
    assert "n3" in after.atoms

    result = summarize(neg)
    assert result and len(result.negotiation.atoms) == 1


@pytest.mark.criterion(5, "acyclic bound on merges and shortcuts over 200 instances")
def test_acyclic_application_bound():
    start = time.perf_counter()
    violations = []
    for seed in range(200):
        rng = random.Random(seed)
        neg = generate_sound_sdn(seed, rng.randint(2, 30), rng.randint(1, 4), 0)
        result = summarize_acyclic(neg)
        assert result, seed
        counts = result.transcript.counts()
        used = counts.get(MERGE, 0) + counts.get(SHORTCUT, 0)
        if used > len(neg.atoms) ** 2 + neg.out_count():
            violations.append(seed)
    assert violations == []
    assert time.perf_counter() - start < 60.0


@pytest.mark.criterion(6, "every per-iteration flag holds over 200 cyclic instances")
def test_cyclic_instrumentation():
    failures = []
    for seed in range(200):
        rng = random.Random(seed)
        neg = generate_sound_sdn(seed, rng.randint(4, 20), rng.randint(1, 3), rng.randint(1, 4))
        assert not is_acyclic(negotiation_graph(neg))
        result = summarize(neg)
        assert result, seed
        flags = result.stats.flags()
        failures += [(seed, k) for k, ok in flags.items() if not ok]
    assert failures == []


@pytest.mark.criterion(7, "each rule application preserves determinism, soundness and the summary")
def test_rule_correctness_on_concrete_instances():
    bad, applications = [], 0
    for seed in range(100):
        rng = random.Random(1000 + seed)
        base = generate_sound_sdn(seed, rng.randint(2, 8), rng.randint(1, 3), rng.randint(0, 2))
        neg = with_random_relations(base, seed, states=rng.randint(2, 3))

        def observer(before, app, after, seed=seed):
            nonlocal applications
            applications += 1
            names = {}
            if app.kind == SHORTCUT and app.target == before.final:
                names = dict(zip(app.produced, app.derived_from))
            old, new = summary_oracle(before), summary_oracle(after)
            same = len(old) == len(new) and all(
                np.array_equal(new[r].matrix, old[names.get(r, r)].matrix) for r in new)
            if not (is_deterministic(after) and soundness_oracle(after) and same):
                bad.append((seed, app.to_line()))

        assert summarize(neg, observer=observer), seed
    assert applications > 0
    assert bad == []


@pytest.mark.criterion(8, "reduction and oracle agree on 300 sound instances and 300 mutants")
def test_reduction_matches_oracle():
    disagreements, checked = [], 0
    for seed in range(300):
        rng = random.Random(seed)
        neg = generate_sound_sdn(seed, rng.randint(2, 8), rng.randint(1, 3), rng.randint(0, 3))
        mutant = random_mutant(neg, rng)
        for kind, cand in (("sound", neg), ("mutant", mutant)):
            if cand is None:
                continue
            try:
                expected = bool(soundness_oracle(cand))
            except LimitExceeded:
                continue
            checked += 1
            if bool(check_sound_reduction(cand)) != expected:
                disagreements.append((seed, kind))
    assert checked >= 590
    assert disagreements == []


@pytest.mark.criterion(9, "cyclic instances have minimal loops, connected and synchronized")
def test_loop_properties():
    cyclic = 0
    for seed in range(200):
        rng = random.Random(seed)
        neg = generate_sound_sdn(seed, rng.randint(2, 8), rng.randint(1, 3), rng.randint(0, 3))
        graph = negotiation_graph(neg)
        if is_acyclic(graph):
            continue
        cyclic += 1
        g = nx.DiGraph(list(graph.edges))
        loops = enumerate_minimal_loops(neg)
        assert loops, seed
        for loop in loops:
            assert nx.is_strongly_connected(g.subgraph(loop.atoms)), seed
            assert synchronizers(neg, loop), seed
    assert cyclic > 100


@pytest.mark.criterion(10, "corpus round-trips byte for byte; repeated CLI runs are identical")
def test_round_trip_and_repeatability(tmp_path):
    files = sorted(CORPUS.glob("*.neg"))
    assert files
    for path in files:
        text = path.read_text(encoding="utf-8")
        assert serialize(parse(text)) == text, path.name
        runs = [cli("sound", str(path), "--method", "oracle") for _ in range(2)]
        assert runs[0] == runs[1], path.name

    target = str(CORPUS / "tangled_loops.neg")
    outputs = []
    for hash_seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=hash_seed)
        proc = subprocess.run([sys.executable, "-m", "detneg", "summarize", target,
                               "--trace", str(tmp_path / f"t{hash_seed}"), "--stats", str(tmp_path / f"s{hash_seed}")],
                              capture_output=True, env=env, check=True)
        outputs.append((proc.stdout, (tmp_path / f"t{hash_seed}").read_bytes(),
                        (tmp_path / f"s{hash_seed}").read_bytes()))
    assert outputs[0] == outputs[1]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
