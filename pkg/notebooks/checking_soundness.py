"""
Checking soundness two ways
===========================

A negotiation is loaded from text, reduced with the rules and checked
against the reachability graph.
"""

from detneg.fixtures import fdm_deadlock
from detneg.semantics import reachability_graph, soundness_oracle
from detneg.summarize import check_sound_reduction, summarize
from detneg.textio import parse, serialize

doc = """\
agents D F M
atom n0 parties D F M initial
atom n1 parties D F
atom n2 parties D F M
atom nf parties D F M final
outcome n0 no -> D:nf F:nf M:nf
outcome n0 yes -> D:n1 F:n1 M:n2
outcome n1 t -> D:n2 F:n2
outcome n2 r -> D:n1 F:n1 M:n2
outcome n2 yes -> D:nf F:nf M:nf
outcome nf end
"""
neg = parse(doc)
print(len(reachability_graph(neg)), "reachable markings")

# The reduction ends with a single atom whose outcomes are regular
# expressions over the original outcomes.
result = summarize(neg)
print(serialize(result.negotiation))
for app in result.transcript:
    print(app.to_line())

# The oracle explores every reachable marking instead.
print("oracle:", soundness_oracle(neg))
print("reduction:", check_sound_reduction(neg))

# An unsound variant: the oracle names the stuck marking and a witness.
verdict = soundness_oracle(fdm_deadlock())
print(verdict.kind, verdict.marking.as_dict())
for seq in verdict.sequences[:3]:
    print("  ", " ".join(f"({n},{r})" for n, r in seq))
