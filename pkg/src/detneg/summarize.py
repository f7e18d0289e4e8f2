"""Acyclic summarization and the cyclic reduction procedure, with statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .model import Negotiation, require_deterministic
from .rules import (
    SHORTCUT,
    GuardError,
    RuleApplication,
    Transcript,
    apply_iteration,
    apply_shortcut,
    find_iterations,
    find_merges,
    find_shortcuts,
    merge_all,
    replay,
    shortcut_applicable,
)
from .semantics import DEFAULT_NODE_LIMIT, Sound, reachability_graph
from .structure import (
    fragments,
    is_acyclic,
    negotiation_graph,
    select_synchronizer,
    split_negotiation,
    topological_order,
)

__all__ = [
    "Summary",
    "ReductionFailure",
    "SummaryResult",
    "IterationStats",
    "RunStats",
    "CyclicInput",
    "targets",
    "summarize_acyclic",
    "summarize",
    "check_sound_reduction",
    "stats",
]

Observer = Callable[[Negotiation, RuleApplication, Negotiation], None]
Target = frozenset  # frozenset of (agent, atom)


class CyclicInput(ValueError):
    pass


@dataclass(frozen=True)
class Summary:
    negotiation: Negotiation
    transcript: Transcript

    def __bool__(self) -> bool:
        return True

    def __str__(self) -> str:
        return f"Summary: atom {self.negotiation.initial} with outcomes {', '.join(self.negotiation.outcomes(self.negotiation.initial))}"


@dataclass(frozen=True)
class ReductionFailure:
    """Unsoundness evidence from the reduction: the negotiation at which it
    got stuck, the rules applied so far and what went wrong."""

    reason: str
    negotiation: Negotiation
    transcript: Transcript
    detail: str = ""

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"Unsound: {self.reason}" + (f" ({self.detail})" if self.detail else "")


Verdict = Union[Summary, ReductionFailure]


def targets(neg: Negotiation) -> frozenset[Target]:
    """Target set: one partial map agent -> atom per outcome."""
    return frozenset(
        frozenset((a, t) for a, ts in neg.targets(n, r).items() for t in ts) for n, r in neg.out()
    )


@dataclass
class IterationStats:
    index: int
    atoms: int
    outcomes: int
    atom_names: frozenset[str]
    targets: frozenset[Target]
    synchronizers: int
    merge_free: bool
    synchronizer: str = ""
    fragment_size: int = 0
    outcomes_after_iteration: int = 0
    nested: bool = False
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def applications(self) -> int:
        return sum(self.counts.values())

    @property
    def bound(self) -> int:
        return self.atoms ** 2 + self.outcomes + 1 + self.outcomes_after_iteration


@dataclass
class RunStats:
    initial_atoms: int
    initial_outcomes: int
    initial_merges: int = 0
    iterations: list[IterationStats] = field(default_factory=list)
    # the acyclic negotiation reached after the loop
    final_atoms: int = 0
    final_outcomes: int = 0
    final_atom_names: frozenset[str] = frozenset()
    final_targets: frozenset[Target] = frozenset()
    final_applications: int = 0
    completed: bool = False

    @property
    def total_applications(self) -> int:
        return self.initial_merges + sum(it.applications for it in self.iterations) + self.final_applications

    def flags(self) -> dict[str, bool]:
        its = self.iterations
        heads = [(it.atom_names, it.targets, it.synchronizers) for it in its]
        if self.completed:
            heads.append((self.final_atom_names, self.final_targets, 0))
        pairs = list(zip(heads, heads[1:]))
        n0 = self.initial_atoms
        out = {
            "iterations": len(its) <= n0,
            "per-iteration-bound": all(it.applications <= it.bound for it in its),
            "merge-free-heads": all(it.merge_free for it in its),
            "synchronizers-decrease": all(b[2] < a[2] for a, b in pairs),
            "atoms-shrink": all(b[0] <= a[0] for a, b in pairs),
            "targets-shrink": all(b[1] <= a[1] for a, b in pairs),
            "outcome-growth": all(it.outcomes_after_iteration <= it.outcomes * (1 + it.atoms) for it in its),
            "total-bound": self.total_applications <= n0 ** 4 * self.initial_outcomes,
        }
        if self.completed:
            out["acyclic-bound"] = self.final_applications <= self.final_atoms ** 2 + self.final_outcomes
        return out

    def report(self) -> str:
        lines = [
            f"initial atoms={self.initial_atoms} outcomes={self.initial_outcomes} merges={self.initial_merges}"
        ]
        for it in self.iterations:
            k = it.index
            lines += [
                f"iter {k} atoms={it.atoms}",
                f"iter {k} outcomes={it.outcomes}",
                f"iter {k} synchronizers={it.synchronizers}",
                f"iter {k} selected={it.synchronizer}",
                f"iter {k} fragment_atoms={it.fragment_size}",
                f"iter {k} nested={int(it.nested)}",
                f"iter {k} targets={len(it.targets)}",
                f"iter {k} outcomes_after_iteration={it.outcomes_after_iteration}",
                f"iter {k} merges={it.counts.get('merge', 0)}",
                f"iter {k} shortcuts={it.counts.get('shortcut', 0)}",
                f"iter {k} iterations={it.counts.get('iteration', 0)}",
                f"iter {k} applications={it.applications}",
                f"iter {k} bound={it.bound}",
            ]
        if self.completed:
            lines.append(f"acyclic atoms={self.final_atoms} outcomes={self.final_outcomes} "
                         f"applications={self.final_applications}")
        lines.append(f"total applications={self.total_applications} "
                     f"bound={self.initial_atoms ** 4 * self.initial_outcomes}")
        lines += [f"flag {k}={'ok' if v else 'FAIL'}" for k, v in self.flags().items()]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SummaryResult:
    verdict: Verdict
    stats: RunStats

    def __bool__(self) -> bool:
        return bool(self.verdict)

    @property
    def negotiation(self) -> Negotiation:
        return self.verdict.negotiation

    @property
    def transcript(self) -> Transcript:
        return self.verdict.transcript


def stats(result: SummaryResult) -> str:
    return result.stats.report()


# ---------------------------------------------------------------------------


class _Run:
    """Rule applications of one reduction, with the optional observer."""

    def __init__(self, observer: Optional[Observer]):
        self.observer = observer
        self.apps: list[RuleApplication] = []
        self.stuck: Optional[Negotiation] = None

    def record(self, before: Negotiation, app: RuleApplication, after: Negotiation) -> None:
        self.apps.append(app)
        if self.observer is not None:
            self.observer(before, app, after)

    def step(self, fn, neg: Negotiation, redex) -> Negotiation:
        after, app = fn(neg, redex)
        self.record(neg, app, after)
        return after

    def merge_all(self, neg: Negotiation, keep=None) -> Negotiation:
        return merge_all(neg, keep, self.record)[0]

    @property
    def transcript(self) -> Transcript:
        return Transcript(tuple(self.apps))


def _acyclic(neg: Negotiation, run: _Run) -> Optional[str]:
    """Reduce ``neg`` in place of ``run``; returns an error message or None."""
    neg = run.merge_all(neg)
    while len(neg.atoms) > 1:
        order = topological_order(negotiation_graph(neg))
        pos = {n: i for i, n in enumerate(order)}
        redexes = [x for x in find_shortcuts(neg) if shortcut_applicable(neg, x)]
        if not redexes:
            run.stuck = neg
            return f"no rule applies with {len(neg.atoms)} atoms left"
        redex = min(redexes, key=lambda x: (pos[x[2]], x[0], x[1]))
        neg = run.step(apply_shortcut, neg, redex)
        neg = run.merge_all(neg)
    run.stuck = neg
    return None


def summarize_acyclic(neg: Negotiation, observer: Optional[Observer] = None) -> SummaryResult:
    """Merge and shortcut until a single atom is left.

    Shortcuts are scheduled by the position of the enabled atom in the
    topological order, earliest first, so the final atom is only absorbed
    when it is the last atom besides the initial one.
    """
    require_deterministic(neg)
    if not is_acyclic(negotiation_graph(neg)):
        raise CyclicInput("negotiation graph has a cycle")
    st = RunStats(len(neg.atoms), neg.out_count(), final_atoms=len(neg.atoms),
                  final_outcomes=neg.out_count(), final_atom_names=frozenset(neg.atoms),
                  final_targets=targets(neg))
    run = _Run(observer)
    err = _acyclic(neg, run)
    st.final_applications = len(run.apps)
    st.completed = err is None
    if err:
        return SummaryResult(ReductionFailure("acyclic reduction stuck", run.stuck, run.transcript, err), st)
    return SummaryResult(Summary(run.stuck, run.transcript), st)


def _self_loop_pair(s: str):
    def keep(neg: Negotiation, redex) -> bool:
        n, r1, r2 = redex
        return n == s and all(neg.next[(n, a, r)] == {n} for a in neg.parties(n) for r in (r1, r2))
    return keep


def summarize(
    neg: Negotiation,
    node_limit: int = DEFAULT_NODE_LIMIT,
    observer: Optional[Observer] = None,
) -> SummaryResult:
    """Reduce a deterministic negotiation to its summary, or report it unsound.

    Loop body: pick a synchronizer whose s-negotiation is acyclic (fewest
    fragment atoms first), summarize that, replay all but its last rule on
    the negotiation, fold the resulting self-loop on the synchronizer with
    the iteration rule, and merge. Once the negotiation is acyclic it is
    summarized directly.

    If every s-negotiation is cyclic, which happens when synchronizers with
    equal parties sit on each other's loops, the one with the smallest
    fragment is summarized by this same procedure instead. Its initial atom
    has no incoming arcs, so nested s-negotiations strictly shrink.
    """
    require_deterministic(neg)
    st = RunStats(len(neg.atoms), neg.out_count())
    run = _Run(observer)

    def fail(reason: str, at: Negotiation, detail: str = "") -> SummaryResult:
        return SummaryResult(ReductionFailure(reason, at, run.transcript, detail), st)

    neg = run.merge_all(neg)
    st.initial_merges = len(run.apps)
    while not is_acyclic(negotiation_graph(neg)):
        if len(st.iterations) >= st.initial_atoms:
            return fail("iteration limit reached", neg)
        frags = fragments(neg, reachability_graph(neg, node_limit))
        syncs = sorted((s for s, f in frags.items() if f), key=lambda s: (len(frags[s]), s))
        it = IterationStats(len(st.iterations) + 1, len(neg.atoms), neg.out_count(), frozenset(neg.atoms),
                            targets(neg), len(syncs), not find_merges(neg))
        st.iterations.append(it)
        if not syncs:
            return fail("cyclic but no atom synchronizes a loop", neg)
        mark = len(run.apps)
        picked = select_synchronizer(neg, frags=frags)
        if picked is None:
            s = syncs[0]
            split = split_negotiation(neg, frags[s])
            it.nested = True
        else:
            s, _, split = picked
        it.synchronizer, it.fragment_size = s, len(frags[s])
        sub = summarize(split.negotiation, node_limit)
        if not sub:
            return fail(f"s-negotiation of {s} does not reduce", neg, str(sub.verdict))
        last = sub.transcript.applications[-1]
        if last.kind != SHORTCUT or last.target != split.split_final:
            return fail(f"s-negotiation of {s} does not end in its final atom", neg, last.to_line())
        try:
            neg, _ = replay(neg, sub.transcript.without_last(), split.back_map, run.record)
            neg = run.merge_all(neg, _self_loop_pair(s))
            loops = [x for x in find_iterations(neg) if x[0] == s]
            if not loops:
                return fail(f"no self-loop on {s} after replay", neg)
            for redex in loops:
                neg = run.step(apply_iteration, neg, redex)
        except GuardError as e:
            return fail("rule guard fails on the negotiation", neg, str(e))
        it.outcomes_after_iteration = neg.out_count()
        neg = run.merge_all(neg)
        it.counts = Transcript(tuple(run.apps[mark:])).counts()

    st.final_atoms, st.final_outcomes = len(neg.atoms), neg.out_count()
    st.final_atom_names, st.final_targets = frozenset(neg.atoms), targets(neg)
    mark = len(run.apps)
    err = _acyclic(neg, run)
    st.final_applications = len(run.apps) - mark
    if err:
        return fail("acyclic reduction stuck", run.stuck, err)
    st.completed = True
    return SummaryResult(Summary(run.stuck, run.transcript), st)


def check_sound_reduction(neg: Negotiation, node_limit: int = DEFAULT_NODE_LIMIT) -> Union[Sound, ReductionFailure]:
    result = summarize(neg, node_limit)
    return Sound() if result else result.verdict
