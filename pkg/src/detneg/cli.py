"""Command-line interface.

Exit codes: 0 success or Sound, 1 Unsound, 2 usage, parse or validation
error, 3 exploration limit exceeded, 4 the two soundness methods disagree.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .generate import generate_sound_sdn
from .model import Atom, NotDeterministic
from .semantics import DEFAULT_NODE_LIMIT, LimitExceeded, reachability_graph, soundness_oracle
from .summarize import check_sound_reduction, summarize
from .textio import ParseError, parse, serialize, to_dot
from .transformers import Label

EXIT_OK = 0
EXIT_UNSOUND = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3
EXIT_DISAGREE = 4

__all__ = ["main", "EXIT_OK", "EXIT_UNSOUND", "EXIT_USAGE", "EXIT_LIMIT", "EXIT_DISAGREE"]


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _Usage(f"{self.prog}: {message}")


def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e.strerror}") from e
    return parse(text)


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _symbolic(neg):
    atoms = {n: Atom(n, a.parties, {r: Label(n, r) for r in a.outcomes}) for n, a in neg.atoms.items()}
    return type(neg)(neg.agents, atoms, neg.initial, neg.final, dict(neg.next))


def _cmd_validate(args, out) -> int:
    neg = _load(args.file)
    out.write(f"valid: {len(neg.agents)} agents, {len(neg.atoms)} atoms, "
              f"{neg.out_count()} outcomes, {neg.backend} backend\n")
    return EXIT_OK


def _cmd_summarize(args, out) -> int:
    neg = _load(args.file)
    if args.backend == "symbolic" and neg.backend == "concrete":
        neg = _symbolic(neg)
    elif args.backend == "concrete" and neg.backend != "concrete":
        raise _Usage("concrete backend needs states and pairs in the input")
    result = summarize(neg, args.node_limit)
    if args.trace:
        _write(args.trace, result.transcript.dumps())
    if args.stats:
        _write(args.stats, result.stats.report())
    if not result:
        out.write(f"{result.verdict}\n")
        return EXIT_UNSOUND
    out.write(serialize(result.negotiation))
    return EXIT_OK


def _cmd_sound(args, out) -> int:
    neg = _load(args.file)
    verdicts = {}
    if args.method in ("oracle", "both"):
        verdicts["oracle"] = soundness_oracle(neg, args.node_limit)
    if args.method in ("reduction", "both"):
        verdicts["reduction"] = check_sound_reduction(neg, args.node_limit)
    values = {bool(v) for v in verdicts.values()}
    if len(values) > 1:
        for name, v in verdicts.items():
            out.write(f"{name}: {v}\n")
        out.write("disagreement\n")
        return EXIT_DISAGREE
    sound = values.pop()
    if args.method == "both":
        out.write(("Sound" if sound else "Unsound") + " (agree)\n")
        if not sound:
            for name, v in verdicts.items():
                out.write(f"{name}: {v}\n")
    else:
        out.write(f"{verdicts[args.method]}\n")
    return EXIT_OK if sound else EXIT_UNSOUND


def _cmd_graph(args, out) -> int:
    neg = _load(args.file)
    if args.reachability:
        text = to_dot(reachability_graph(neg, args.node_limit), "reachability")
    else:
        text = to_dot(neg, "graph")
    _write(args.dot, text)
    return EXIT_OK


def _cmd_gen(args, out) -> int:
    try:
        neg = generate_sound_sdn(args.seed, args.atoms, args.agents, args.loops)
    except ValueError as e:
        raise _Usage(str(e)) from e
    _write(args.output, serialize(neg))
    return EXIT_OK


def _cmd_stats(args, out) -> int:
    result = summarize(_load(args.file), args.node_limit)
    out.write(result.stats.report())
    return EXIT_OK if result else EXIT_UNSOUND


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="detneg", description="Summarize and check soundness of deterministic negotiations.")
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT,
                   help="maximum number of reachable markings to explore")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="parse and validate a negotiation file")
    s.add_argument("file")
    s.set_defaults(run=_cmd_validate)

    s = sub.add_parser("summarize", help="reduce a negotiation to its summary")
    s.add_argument("file")
    s.add_argument("--trace", metavar="PATH", help="write the rule transcript here")
    s.add_argument("--stats", metavar="PATH", help="write the statistics report here")
    s.add_argument("--backend", choices=("symbolic", "concrete"),
                   help="transformer backend (default: whatever the file uses)")
    s.set_defaults(run=_cmd_summarize)

    s = sub.add_parser("sound", help="decide soundness")
    s.add_argument("file")
    s.add_argument("--method", choices=("reduction", "oracle", "both"), default="reduction")
    s.set_defaults(run=_cmd_sound)

    s = sub.add_parser("graph", help="export the negotiation or reachability graph as DOT")
    s.add_argument("file")
    s.add_argument("--dot", metavar="PATH", required=True)
    s.add_argument("--reachability", action="store_true")
    s.set_defaults(run=_cmd_graph)

    s = sub.add_parser("gen", help="generate a sound deterministic negotiation")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--atoms", type=int, required=True)
    s.add_argument("--agents", type=int, required=True)
    s.add_argument("--loops", type=int, default=0)
    s.add_argument("-o", "--output", metavar="PATH", required=True)
    s.set_defaults(run=_cmd_gen)

    s = sub.add_parser("stats", help="print reduction statistics")
    s.add_argument("file")
    s.set_defaults(run=_cmd_stats)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        return args.run(args, out)
    except _Usage as e:
        err.write(f"{e}\n")
        return EXIT_USAGE
    except ParseError as e:
        err.write(f"{e}\n")
        return EXIT_USAGE
    except NotDeterministic as e:
        err.write(f"not deterministic: {e}\n")
        return EXIT_USAGE
    except LimitExceeded as e:
        err.write(f"limit exceeded: {e}\n")
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
