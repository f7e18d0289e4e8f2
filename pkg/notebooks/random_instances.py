"""
Random sound negotiations
=========================

Generated instances are sound by construction. Single-edge mutants
usually are not, and both checks must agree on them.
"""

import random
import time

from detneg.generate import generate_sound_sdn, random_mutant, with_random_relations
from detneg.semantics import soundness_oracle, summary_oracle
from detneg.summarize import check_sound_reduction, summarize

rows = []
start = time.perf_counter()
for seed in range(100):
    rng = random.Random(seed)
    neg = generate_sound_sdn(seed, rng.randint(3, 12), rng.randint(1, 3), rng.randint(0, 3))
    mutant = random_mutant(neg, rng)
    result = summarize(neg)
    rows.append((len(neg.atoms), len(result.stats.iterations), len(result.transcript),
                 bool(check_sound_reduction(mutant)) == bool(soundness_oracle(mutant))))
print(f"{len(rows)} instances in {time.perf_counter() - start:.2f}s")
print("max iterations:", max(r[1] for r in rows))
print("max rule applications:", max(r[2] for r in rows))
print("mutant verdicts agree:", all(r[3] for r in rows))

# With concrete relations the summary is a relation over global states,
# equal to the fixpoint computed on the reachability graph.
conc = with_random_relations(generate_sound_sdn(3, 6, 2, 1), 3, states=2)
summary = summarize(conc).negotiation
(r,) = summary.outcomes(summary.initial)
print(summary.delta(summary.initial, r) == next(iter(summary_oracle(conc).values())))
