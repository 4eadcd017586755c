"""Command-line interface.

Every engine capability is exposed as a subcommand with stable exit codes:

* 0: affirmative / success
* 1: negative (not dominated, conditionally cyclic, infeasible, invalid)
* 2: unknown / budget exhausted
* 64: usage error
* 65: unparsable or invalid input file

``--json`` switches to a machine-readable envelope; identical invocations
produce byte-identical output (add ``--timing`` to include wall-clock
numbers, which naturally breaks that guarantee).
"""

import argparse
import json
import sys
import time
from pathlib import Path

from . import acyclicity, dominance, io, optimizer, semantics
from .model import TcpNetError, ValidationFailed, validate_net
from .acyclicity import AcyclicityPolicy, AcyclicityStatus
from .dominance import DominanceStatus
from .semantics import CpFlip

EX_OK = 0
EX_NEGATIVE = 1
EX_UNKNOWN = 2
EX_USAGE = 64
EX_DATA = 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="tcpnets", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("net", help="path to a .tcpnet file")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--timing", action="store_true", help="include wall-clock timing")
        return p

    add("validate", help="check every structural invariant of a net")

    p = add("check-acyclic", help="decide conditional acyclicity")
    p.add_argument("--method", choices=["auto", "brute", "cycles", "sat"], default="auto")
    p.add_argument("--budget", type=int, default=None,
                   help="max selector assignments for the exhaustive path")
    p.add_argument("--cycle-cap", type=int, default=None,
                   help="max semi-directed cycles to enumerate")

    p = add("optimize", help="most preferred completion via forward sweep")
    p.add_argument("--assign", action="append", default=None,
                   help="fixed values, e.g. J=b,P=w (repeatable)")

    p = add("dominates", help="search for an improving flipping sequence")
    p.add_argument("--better", required=True, help="purported better outcome, X=v,...")
    p.add_argument("--worse", required=True, help="purported worse outcome, X=v,...")
    p.add_argument("--budget", type=int, default=dominance.DEFAULT_BUDGET,
                   help="max outcomes to expand (0 = unbounded)")

    p = add("solve", help="non-dominated feasible outcomes under hard constraints")
    p.add_argument("--constraints", required=True, help="path to a constraints file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--first", action="store_true", help="stop at the first solution")
    group.add_argument("--all", action="store_true", help="emit the full set (default)")
    p.add_argument("--dominance-budget", type=int, default=None,
                   help="budget per internal dominance test")

    p = add("construct-order", help="build a satisfying total order over all outcomes")
    p.add_argument("--max-outcomes", type=int, default=semantics.DEFAULT_OUTCOME_CAP)

    oracle = sub.add_parser("oracle", help="desk-scale exhaustive oracles")
    osub = oracle.add_subparsers(dest="oracle_command", required=True)

    def add_oracle(name, **kwargs):
        p = osub.add_parser(name, **kwargs)
        p.add_argument("net", help="path to a .tcpnet file")
        p.add_argument("--json", action="store_true")
        p.add_argument("--timing", action="store_true")
        p.add_argument("--max-outcomes", type=int, default=semantics.DEFAULT_OUTCOME_CAP)
        return p

    p = add_oracle("entails", help="entailment by flip-graph reachability")
    p.add_argument("--better", required=True)
    p.add_argument("--worse", required=True)

    p = add_oracle("nondominated", help="exhaustive non-dominated set")
    p.add_argument("--constraints", default=None,
                   help="constraints file restricting the feasible set")

    add_oracle("flipgraph", help="dump the induced flip graph")

    return parser


def _parse_outcome(text: str) -> dict[str, str]:
    out = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise UsageError(f"expected X=v, got {piece!r}")
        name, value = piece.split("=", 1)
        out[name.strip()] = value.strip()
    if not out:
        raise UsageError("empty outcome")
    return out


def _format_outcome(net, outcome) -> str:
    return ",".join(f"{n}={outcome[n]}" for n in net.variable_names if n in outcome)


def _label_doc(label) -> dict:
    if isinstance(label, CpFlip):
        return {
            "kind": "cp",
            "variable": label.variable,
            "from": label.worse,
            "to": label.better,
        }
    return {
        "kind": "i",
        "improved": label.improved,
        "improved_from": label.improved_from,
        "improved_to": label.improved_to,
        "worsened": label.worsened,
        "worsened_from": label.worsened_from,
        "worsened_to": label.worsened_to,
        "arc": list(label.arc),
    }


def _label_text(label) -> str:
    if isinstance(label, CpFlip):
        return f"CP-flip {label.variable}: {label.worse}->{label.better}"
    kind, x, y = label.arc
    arc = f"{x}>{y}" if kind == "i" else f"{{{x},{y}}}"
    return (
        f"I-flip {label.improved}: {label.improved_from}->{label.improved_to} / "
        f"{label.worsened}: {label.worsened_from}->{label.worsened_to} via {kind}-arc {arc}"
    )


class _Reporter:
    def __init__(self, command: str, as_json: bool, with_timing: bool):
        self.command = command
        self.as_json = as_json
        self.with_timing = with_timing
        self.started = time.perf_counter()
        self.inputs: dict = {}
        self.lines: list[str] = []
        self.payload: dict = {}

    def emit(self, code: int) -> int:
        if self.as_json:
            envelope = {
                "command": self.command,
                "inputs": self.inputs,
                "verdict": self.payload,
            }
            certificate = self.payload.pop("certificate", None)
            if certificate is not None:
                envelope["certificate"] = certificate
            if self.with_timing:
                envelope["timing"] = {
                    "seconds": round(time.perf_counter() - self.started, 6)
                }
            print(json.dumps(envelope, indent=2, sort_keys=True))
        else:
            for line in self.lines:
                print(line)
            if self.with_timing:
                print(f"elapsed: {time.perf_counter() - self.started:.3f}s")
        return code


def run_cli(argv) -> int:
    """Dispatch one invocation; never raises on bad input."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE

    command = args.command if args.command != "oracle" else f"oracle {args.oracle_command}"
    report = _Reporter(command, args.json, args.timing)
    try:
        net_text = Path(args.net).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read {args.net}: {exc}", file=sys.stderr)
        return EX_DATA

    if command == "validate":
        return _cmd_validate(report, net_text, args)

    try:
        net = io.parse_net(net_text)
    except ValidationFailed as exc:
        print(f"invalid net: {exc}", file=sys.stderr)
        return EX_DATA
    except io.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EX_DATA

    try:
        handler = {
            "check-acyclic": _cmd_check_acyclic,
            "optimize": _cmd_optimize,
            "dominates": _cmd_dominates,
            "solve": _cmd_solve,
            "construct-order": _cmd_construct_order,
            "oracle entails": _cmd_oracle_entails,
            "oracle nondominated": _cmd_oracle_nondominated,
            "oracle flipgraph": _cmd_oracle_flipgraph,
        }[command]
        return handler(report, net, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except io.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EX_DATA
    except (TcpNetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_DATA


def _cmd_validate(report, net_text, args) -> int:
    try:
        net = io.parse_net(net_text)
        issues = validate_net(net).issues
        ok = True
    except ValidationFailed as exc:
        issues = exc.report.issues
        ok = False
    except io.ParseError as exc:
        report.payload = {"ok": False, "issues": [{"severity": "error", "code": "parse",
                                                   "location": "document", "message": str(exc)}]}
        report.lines = [f"parse error: {exc}"]
        return report.emit(EX_DATA)
    report.payload = {
        "ok": ok,
        "issues": [
            {"severity": i.severity, "code": i.code, "location": i.location, "message": i.message}
            for i in issues
        ],
    }
    report.lines = [f"valid: {'yes' if ok else 'no'}"]
    report.lines += [f"  {i.severity}: {i.location}: {i.message} [{i.code}]" for i in issues]
    return report.emit(EX_OK if ok else EX_DATA)


def _cmd_check_acyclic(report, net, args) -> int:
    knobs = {"method": args.method}
    if args.budget is not None:
        knobs["fallback_budget"] = args.budget
    if args.cycle_cap is not None:
        knobs["cycle_cap"] = args.cycle_cap
    verdict = acyclicity.check_conditional_acyclicity(net, AcyclicityPolicy(**knobs))
    report.inputs = {"method": args.method}
    report.payload = {"status": verdict.status.value, "decided_by": verdict.method}
    if verdict.note:
        report.payload["note"] = verdict.note
    report.lines = [f"conditional acyclicity: {verdict.status.value}",
                    f"method: {verdict.method}"]
    if verdict.witness is not None:
        cycle = " -> ".join([u for u, _ in verdict.witness.cycle] + [verdict.witness.cycle[0][0]])
        report.payload["witness"] = {
            "assignment": dict(sorted(verdict.witness.assignment.items())),
            "cycle": [list(e) for e in verdict.witness.cycle],
        }
        report.lines.append(f"witness assignment: {_format_assign(verdict.witness.assignment)}")
        report.lines.append(f"witness cycle: {cycle}")
    if verdict.status is AcyclicityStatus.CONDITIONALLY_ACYCLIC:
        return report.emit(EX_OK)
    if verdict.status is AcyclicityStatus.CONDITIONALLY_CYCLIC:
        return report.emit(EX_NEGATIVE)
    return report.emit(EX_UNKNOWN)


def _format_assign(assignment) -> str:
    return ",".join(f"{k}={v}" for k, v in sorted(assignment.items())) or "(empty)"


def _cmd_optimize(report, net, args) -> int:
    fixed = {}
    for chunk in args.assign or []:
        fixed.update(_parse_outcome(chunk))
    outcome = optimizer.forward_sweep(net, fixed)
    report.inputs = {"assign": dict(sorted(fixed.items()))}
    report.payload = {"outcome": outcome}
    report.lines = [_format_outcome(net, outcome)]
    return report.emit(EX_OK)


def _cmd_dominates(report, net, args) -> int:
    better = _parse_outcome(args.better)
    worse = _parse_outcome(args.worse)
    budget = None if args.budget == 0 else args.budget
    verdict = dominance.dominates(net, better, worse, budget)
    report.inputs = {"better": better, "worse": worse, "budget": args.budget}
    report.payload = {"status": verdict.status.value, "expanded": verdict.expanded}
    report.lines = [f"dominates: {verdict.status.value}"]
    if verdict.certificate is not None:
        seq = verdict.certificate
        report.payload["certificate"] = {
            "outcomes": [dict(sorted(o.items())) for o in seq.outcomes],
            "labels": [_label_doc(l) for l in seq.labels],
        }
        for o, label in zip(seq.outcomes, seq.labels):
            report.lines.append(f"  {_format_outcome(net, o)}")
            report.lines.append(f"    --{_label_text(label)}-->")
        report.lines.append(f"  {_format_outcome(net, seq.outcomes[-1])}")
    if verdict.status is DominanceStatus.DOMINATES:
        return report.emit(EX_OK)
    if verdict.status is DominanceStatus.NOT_DOMINATED:
        return report.emit(EX_NEGATIVE)
    return report.emit(EX_UNKNOWN)


def _read_constraints(net, path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise io.ParseError(f"cannot read {path}: {exc}") from None
    return io.parse_constraints(text, net)


def _cmd_solve(report, net, args) -> int:
    constraints = _read_constraints(net, args.constraints)
    mode = "first" if args.first else "all"
    try:
        result = optimizer.search_tcp(
            net, constraints, mode=mode, dominance_budget=args.dominance_budget
        )
    except optimizer.UnknownDominance as exc:
        report.payload = {"status": "unknown", "reason": str(exc)}
        report.lines = [f"unknown: {exc}"]
        return report.emit(EX_UNKNOWN)
    report.inputs = {"constraints": args.constraints, "mode": mode}
    report.payload = {
        "status": "feasible" if result.solutions else "infeasible",
        "solutions": [dict(sorted(o.items())) for o in result.solutions],
    }
    if result.solutions:
        report.lines = [_format_outcome(net, o) for o in result.solutions]
        return report.emit(EX_OK)
    report.lines = ["infeasible"]
    return report.emit(EX_NEGATIVE)


def _cmd_construct_order(report, net, args) -> int:
    order = optimizer.construct_satisfying_order(net, cap=args.max_outcomes)
    report.payload = {"order": [dict(sorted(o.items())) for o in order]}
    report.lines = [_format_outcome(net, o) for o in order]
    return report.emit(EX_OK)


def _cmd_oracle_entails(report, net, args) -> int:
    better = _parse_outcome(args.better)
    worse = _parse_outcome(args.worse)
    entailed = semantics.oracle_entails(net, better, worse, cap=args.max_outcomes)
    report.inputs = {"better": better, "worse": worse}
    report.payload = {"entails": entailed}
    report.lines = [f"entails: {'yes' if entailed else 'no'}"]
    return report.emit(EX_OK if entailed else EX_NEGATIVE)


def _cmd_oracle_nondominated(report, net, args) -> int:
    graph = semantics.build_flip_graph(net, cap=args.max_outcomes)
    if args.constraints:
        constraints = _read_constraints(net, args.constraints)
        feasible = [
            graph.outcome(node)
            for node in graph.nodes
            if all(
                tuple(graph.outcome(node)[v] for v in c.scope) in c.allowed
                for c in constraints
            )
        ]
    else:
        feasible = [graph.outcome(node) for node in graph.nodes]
    best = graph.nondominated(feasible)
    report.payload = {"nondominated": [dict(sorted(o.items())) for o in best]}
    report.lines = [_format_outcome(net, o) for o in best]
    if not best:
        report.lines = ["infeasible"]
    return report.emit(EX_OK if best else EX_NEGATIVE)


def _cmd_oracle_flipgraph(report, net, args) -> int:
    graph = semantics.build_flip_graph(net, cap=args.max_outcomes)
    edges = [
        {"from": dict(sorted(src.items())), "to": dict(sorted(dst.items())),
         "label": _label_doc(label)}
        for src, dst, label in graph.edges()
    ]
    report.payload = {"outcomes": len(graph.nodes), "edges": edges}
    report.lines = [f"{len(graph.nodes)} outcomes, {graph.edge_count} edges"]
    for src, dst, label in graph.edges():
        report.lines.append(
            f"  {_format_outcome(net, src)} -> {_format_outcome(net, dst)}  [{_label_text(label)}]"
        )
    return report.emit(EX_OK)


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
