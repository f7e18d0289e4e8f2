"""
Reducing nested loops
=====================

Two loops share the agent D. The inner one is folded first, then the
outer one, and the run is replayed to show the same shapes again.
"""

from detneg.fixtures import nested_loops
from detneg.rules import ITERATION, replay
from detneg.structure import enumerate_minimal_loops, fragments, synchronizers
from detneg.summarize import stats, summarize
from detneg.textio import serialize, to_dot

neg = nested_loops()
for loop in enumerate_minimal_loops(neg):
    print(sorted(loop.atoms), "synchronized by", sorted(synchronizers(neg, loop)))

for s, frag in sorted(fragments(neg).items()):
    if frag:
        print("fragment of", s, dict(sorted(frag.atoms.items())))

# Keep the negotiation as it was right before each iteration rule.
shapes = []


def before_iteration(before, app, after):
    if app.kind == ITERATION:
        shapes.append(before)


result = summarize(neg, observer=before_iteration)
for shape in shapes:
    print(serialize(shape))
print(stats(result))

# Replaying the transcript on the input yields the same negotiations.
again = []
replay(neg, result.transcript, {n: n for n in neg.atoms}, observer=lambda b, app, a: again.append(b)
       if app.kind == ITERATION else None)
print("same shapes:", [serialize(x) for x in again] == [serialize(x) for x in shapes])

print(to_dot(neg))
