"""Line-oriented text format for negotiations, and DOT export.

Example::

    # Father and Daughter agree, then stop
    agents D F
    atom n0 parties D F initial
    atom nf parties D F final
    outcome n0 yes -> D:nf F:nf
    outcome nf end

``outcome`` lines list one ``agent:atom[,atom...]`` target per party and an
optional ``delta`` expression over ``id``, ``atom:outcome`` labels and the
forms ``(cat e...)``, ``(alt e...)``, ``(star e)``. With ``states`` lines the
negotiation is concrete: each outcome is the identity unless ``pairs`` lines
give its relation, as ``(q,..)->(q,..)`` tuples over the atom's parties
(sorted) or over all agents.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .model import Atom, Negotiation, validate
from .semantics import ReachabilityGraph
from .structure import negotiation_graph
from .transformers import IDENTITY, Expr, Label, Relation, StateSpace, compose, star, union

__all__ = ["Diagnostic", "ParseError", "parse", "serialize", "to_dot", "is_name"]

_NAME = re.compile(r"^[^\s:,()#]+$")
_PAIR = re.compile(r"^\(([^()]*)\)->\(([^()]*)\)$")


def is_name(s: str) -> bool:
    return bool(_NAME.match(s)) and "->" not in s


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        if self.line == 0:
            return f"validation: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class ParseError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


class _Syntax(Exception):
    def __init__(self, column: int, message: str):
        self.column = column
        self.message = message


# ---------------------------------------------------------------------------
# delta expressions


def _parse_expr(tokens: list[tuple[int, str]]) -> Expr:
    pos = 0

    def go() -> Expr:
        nonlocal pos
        if pos >= len(tokens):
            col = tokens[-1][0] if tokens else 1
            raise _Syntax(col, "unexpected end of delta expression")
        col, tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise _Syntax(col, "unexpected end of delta expression")
            ocol, op = tokens[pos]
            pos += 1
            args = []
            while pos < len(tokens) and tokens[pos][1] != ")":
                args.append(go())
            if pos >= len(tokens):
                raise _Syntax(col, "unbalanced parenthesis")
            pos += 1
            if op == "cat" and args:
                out = args[0]
                for a in args[1:]:
                    out = compose(out, a)
                return out
            if op == "alt" and args:
                out = args[0]
                for a in args[1:]:
                    out = union(out, a)
                return out
            if op == "star" and len(args) == 1:
                return star(args[0])
            raise _Syntax(ocol, f"bad form ({op} ...) with {len(args)} argument(s)")
        if tok == ")":
            raise _Syntax(col, "unexpected ')'")
        if tok == "id":
            return IDENTITY
        atom, sep, outcome = tok.partition(":")
        if not sep or not is_name(atom) or not is_name(outcome):
            raise _Syntax(col, f"bad label {tok!r}, expected atom:outcome")
        return Label(atom, outcome)

    expr = go()
    if pos != len(tokens):
        raise _Syntax(tokens[pos][0], "trailing tokens after delta expression")
    return expr


def _render_expr(e: Expr) -> str:
    # str() of the term classes already produces the file syntax
    return str(e)


# ---------------------------------------------------------------------------
# parsing


def _tokens(line: str) -> list[tuple[int, str]]:
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\(|\)|[^\s()]+", line)]


def _words(line: str) -> list[tuple[int, str]]:
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]


def parse(text: str) -> Negotiation:
    """Parse and validate a document. Raises :class:`ParseError` listing
    every syntax problem (with line and column) or validation violation."""
    diags: list[Diagnostic] = []
    agents: Optional[list[str]] = None
    states: dict[str, list[str]] = {}
    atoms: dict[str, tuple[list[str], int]] = {}
    initial: list[str] = []
    final: list[str] = []
    outcomes: dict[tuple[str, str], tuple[dict, Optional[Expr], int]] = {}
    pairs: dict[tuple[str, str], list] = {}

    def need_name(col: int, s: str, what: str) -> str:
        if not is_name(s):
            raise _Syntax(col, f"bad {what} name {s!r}")
        return s

    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        words = _words(line)
        if not words:
            continue
        kw = words[0][1]
        try:
            if kw == "agents":
                if agents is not None:
                    raise _Syntax(1, "duplicate agents line")
                if len(words) < 2:
                    raise _Syntax(words[0][0], "agents line lists no agents")
                agents = [need_name(c, w, "agent") for c, w in words[1:]]
            elif kw == "states":
                if len(words) < 3:
                    raise _Syntax(words[0][0], "expected: states <agent> <label>+")
                a = need_name(*words[1], "agent")
                if a in states:
                    raise _Syntax(words[1][0], f"duplicate states line for {a}")
                states[a] = [need_name(c, w, "state") for c, w in words[2:]]
            elif kw == "atom":
                if len(words) < 4 or words[2][1] != "parties":
                    raise _Syntax(words[0][0], "expected: atom <name> parties <agent>+ [initial] [final]")
                name = need_name(*words[1], "atom")
                if name in atoms:
                    raise _Syntax(words[1][0], f"duplicate atom {name}")
                rest = [w for _, w in words[3:]]
                flags = []
                while rest and rest[-1] in ("initial", "final"):
                    flags.append(rest.pop())
                if not rest:
                    raise _Syntax(words[2][0], f"atom {name} lists no parties")
                for (c, w) in words[3:3 + len(rest)]:
                    need_name(c, w, "agent")
                atoms[name] = (rest, ln)
                if "initial" in flags:
                    initial.append(name)
                if "final" in flags:
                    final.append(name)
            elif kw == "outcome":
                if len(words) < 3:
                    raise _Syntax(words[0][0], "expected: outcome <atom> <name> ...")
                n = need_name(*words[1], "atom")
                r = need_name(*words[2], "outcome")
                if (n, r) in outcomes:
                    raise _Syntax(words[2][0], f"duplicate outcome {n} {r}")
                tmap: dict[str, list[str]] = {}
                delta = None
                i = 3
                if i < len(words) and words[i][1] == "->":
                    i += 1
                    while i < len(words) and words[i][1] != "delta":
                        c, w = words[i]
                        a, sep, ts = w.partition(":")
                        if not sep or not is_name(a) or not ts:
                            raise _Syntax(c, f"bad target {w!r}, expected agent:atom[,atom]")
                        if a in tmap:
                            raise _Syntax(c, f"agent {a} has two targets")
                        tmap[a] = [need_name(c, t, "atom") for t in ts.split(",")]
                        i += 1
                if i < len(words):
                    c, w = words[i]
                    if w != "delta":
                        raise _Syntax(c, f"unexpected {w!r}")
                    start = c - 1 + len("delta")
                    toks = [(start + col, t) for col, t in _tokens(line[start:])]
                    if not toks:
                        raise _Syntax(c, "empty delta expression")
                    delta = _parse_expr(toks)
                outcomes[(n, r)] = (tmap, delta, ln)
            elif kw == "pairs":
                if len(words) < 4:
                    raise _Syntax(words[0][0], "expected: pairs <atom> <outcome> (q..)->(q..)+")
                n = need_name(*words[1], "atom")
                r = need_name(*words[2], "outcome")
                for c, w in words[3:]:
                    m = _PAIR.match(w)
                    if not m:
                        raise _Syntax(c, f"bad pair {w!r}, expected (q,..)->(q,..)")
                    q = tuple(m.group(1).split(","))
                    q2 = tuple(m.group(2).split(","))
                    pairs.setdefault((n, r), []).append((c, ln, q, q2))
            else:
                raise _Syntax(words[0][0], f"unknown keyword {kw!r}")
        except _Syntax as e:
            diags.append(Diagnostic(ln, e.column, e.message))

    if agents is None:
        diags.append(Diagnostic(1, 1, "missing agents line"))
    for what, found in (("initial", initial), ("final", final)):
        if len(found) != 1:
            diags.append(Diagnostic(1, 1, f"expected exactly one {what} atom, found {len(found)}"))
    for (n, r), (_, _, ln) in outcomes.items():
        if n not in atoms:
            diags.append(Diagnostic(ln, 1, f"outcome of undeclared atom {n}"))
    for (n, r), entries in pairs.items():
        if (n, r) not in outcomes:
            diags.append(Diagnostic(entries[0][1], 1, f"pairs for undeclared outcome {n} {r}"))
    if pairs and not states:
        ln = min(e[1] for es in pairs.values() for e in es)
        diags.append(Diagnostic(ln, 1, "pairs given without states"))
    if diags:
        raise ParseError(diags)

    space = None
    if states:
        if set(states) != set(agents):
            raise ParseError([Diagnostic(1, 1, "states must be given for exactly the declared agents")])
        space = StateSpace(states)

    built: dict[str, Atom] = {}
    nxt = {}
    for name, (parties, ln) in atoms.items():
        ts = {}
        for (n, r), (tmap, delta, oln) in outcomes.items():
            if n != name:
                continue
            for a in parties:
                nxt[(n, a, r)] = frozenset(tmap.get(a, ()))
            for a in tmap:
                if a not in parties:
                    diags.append(Diagnostic(oln, 1, f"target for {a}, who is not a party of {n}"))
            if space is None:
                ts[r] = Label(n, r) if delta is None else delta
                continue
            if delta is not None:
                diags.append(Diagnostic(oln, 1, "delta expressions are not allowed with states"))
                continue
            given = pairs.get((n, r))
            if not given:
                ts[r] = Relation.identity(space)
                continue
            try:
                lengths = {len(q) for _, _, q, _ in given} | {len(q2) for _, _, _, q2 in given}
                plain = [(q, q2) for _, _, q, q2 in given]
                if lengths == {len(parties)}:
                    ts[r] = Relation.from_local(space, parties, plain, check_total=False)
                elif lengths == {len(space.agents)}:
                    ts[r] = Relation.from_pairs(space, plain, check_total=False)
                else:
                    raise ValueError("tuples must list the parties or all agents")
            except (ValueError, KeyError) as e:
                diags.append(Diagnostic(given[0][1], given[0][0], f"pairs of {n} {r}: {e}"))
        built[name] = Atom(name, frozenset(parties), ts)
    if diags:
        raise ParseError(diags)
    neg = Negotiation(tuple(agents), built, initial[0], final[0], nxt, space)
    violations = validate(neg)
    if violations:
        raise ParseError([Diagnostic(0, 0, str(v)) for v in violations])
    return neg


# ---------------------------------------------------------------------------
# serialization


def _fmt_pairs(pairs) -> list[str]:
    return [f"({','.join(q)})->({','.join(q2)})" for q, q2 in sorted(pairs)]


def _relation_pairs(neg: Negotiation, n: str, rel: Relation) -> list[str]:
    space = rel.space
    parties = sorted(neg.parties(n))
    local = {(space.project(q, parties), space.project(q2, parties)) for q, q2 in rel.pairs()}
    try:
        if Relation.from_local(space, parties, local, check_total=False) == rel:
            return _fmt_pairs(local)
    except ValueError:
        pass
    return _fmt_pairs(rel.pairs())


def serialize(neg: Negotiation) -> str:
    """Canonical, byte-deterministic document for ``neg``."""
    out = [f"agents {' '.join(neg.agents)}"]
    space = neg.space
    if space is None and neg.backend == "concrete":
        space = neg.delta(*neg.out()[0]).space
    if space is not None:
        for a in space.agents:
            out.append(f"states {a} {' '.join(space.local[a])}")
    for n in sorted(neg.atoms):
        flags = [f for f, name in (("initial", neg.initial), ("final", neg.final)) if name == n]
        out.append(" ".join(["atom", n, "parties", *sorted(neg.parties(n)), *flags]))
    for n in sorted(neg.atoms):
        for r in neg.outcomes(n):
            line = f"outcome {n} {r}"
            tg = [f"{a}:{','.join(sorted(ts))}" for a, ts in neg.targets(n, r).items() if ts]
            if tg:
                line += " -> " + " ".join(tg)
            t = neg.delta(n, r)
            if isinstance(t, Relation):
                out.append(line)
                if t != Relation.identity(t.space):
                    out.append(f"pairs {n} {r} " + " ".join(_relation_pairs(neg, n, t)))
                continue
            if t != Label(n, r):
                line += f" delta {_render_expr(t)}"
            out.append(line)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# DOT


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(obj: Union[Negotiation, ReachabilityGraph], mode: str = "graph") -> str:
    """DOT digraph of a negotiation's graph (``mode="graph"``) or of a
    reachability graph (``mode="reachability"``, ``obj`` a ReachabilityGraph)."""
    lines = ["digraph {"]
    if mode == "graph":
        if not isinstance(obj, Negotiation):
            raise TypeError("graph mode needs a Negotiation")
        g = negotiation_graph(obj)
        for n in g.vertices:
            attrs = [f"label={_q(n + ' {' + ','.join(sorted(obj.parties(n))) + '}')}"]
            if n == obj.initial:
                attrs.append("shape=box")
            if n == obj.final:
                attrs.append("peripheries=2")
            lines.append(f"  {_q(n)} [{', '.join(attrs)}];")
        for a, b in sorted(g.edges):
            labels = sorted(r for r in obj.outcomes(a) if any(b in obj.next[(a, x, r)] for x in obj.parties(a)))
            lines.append(f"  {_q(a)} -> {_q(b)} [label={_q(','.join(labels))}];")
    elif mode == "reachability":
        if not isinstance(obj, ReachabilityGraph):
            raise TypeError("reachability mode needs a ReachabilityGraph")
        for i, m in enumerate(obj.nodes):
            attrs = [f"label={_q(str(m))}"]
            if m == obj.initial:
                attrs.append("shape=box")
            if m.is_final():
                attrs.append("peripheries=2")
            lines.append(f"  m{i} [{', '.join(attrs)}];")
        for i, n, r, j in obj.edge_triples():
            lines.append(f"  m{i} -> m{j} [label={_q(f'({n},{r})')}];")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    lines.append("}")
    return "\n".join(lines) + "\n"
