"""Document formats: .tcpnet network files and .constraints.json files.

Both are JSON with a mandatory ``format_version`` (currently "1"; unknown
versions are rejected, never guessed). Parsing always validates: a
syntactically broken document raises ParseError with position info, a
well-formed document describing an invalid net raises ValidationFailed
carrying the full report. Serialization is canonical, so
``parse -> serialize -> parse`` is the identity on documents.

See the README for the full grammar; the shape in brief::

    {"format_version": "1",
     "variables": [{"name": "J", "domain": ["b", "w"]}, ...],
     "cp_arcs": [["J", "S"], ...],
     "i_arcs": [["J", "P"], ...],
     "ci_arcs": [{"endpoints": ["S", "C"], "selector": ["T", "A"],
                  "cit": [{"when": {"T": "m", "A": "ba"},
                           "more_important": "C"}, ...]}, ...],
     "cpts": [{"variable": "S",
               "rows": [{"when": {"J": "b", "P": "b"},
                         "prefer": [["r", "w"]]}, ...]}, ...]}

A CPT row may give ``"ranking": ["r", "w"]`` (a best-first total order)
instead of explicit ``"prefer"`` pairs; serialization always emits pairs.
"""

import json
from typing import Mapping

from .model import (
    CiTable,
    CpTable,
    TcpNet,
    TcpNetError,
    ValidationFailed,
    make_net,
    validate_net,
)
from .optimizer import HardConstraint, check_constraints

FORMAT_VERSION = "1"


class ParseError(TcpNetError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


def _load_json(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("document root must be a JSON object")
    return doc


def _check_version(doc: dict):
    version = doc.get("format_version")
    if version is None:
        raise ParseError("missing format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}")


def _expect(condition: bool, message: str):
    if not condition:
        raise ParseError(message)


def parse_net(text: str) -> TcpNet:
    """Parse and validate a .tcpnet document."""
    doc = _load_json(text)
    _check_version(doc)

    raw_vars = doc.get("variables")
    _expect(isinstance(raw_vars, list) and raw_vars, "variables must be a nonempty list")
    variables = []
    for entry in raw_vars:
        _expect(isinstance(entry, dict), "each variable must be an object")
        name, domain = entry.get("name"), entry.get("domain")
        _expect(isinstance(name, str), "variable name must be a string")
        _expect(
            isinstance(domain, list) and all(isinstance(v, str) for v in domain),
            f"domain of {name!r} must be a list of strings",
        )
        variables.append((name, tuple(domain)))

    def arc_list(key: str) -> list[tuple[str, str]]:
        raw = doc.get(key, [])
        _expect(isinstance(raw, list), f"{key} must be a list")
        arcs = []
        for arc in raw:
            _expect(
                isinstance(arc, list) and len(arc) == 2 and all(isinstance(e, str) for e in arc),
                f"each {key} entry must be a pair of variable names",
            )
            arcs.append((arc[0], arc[1]))
        return arcs

    cp_arcs = arc_list("cp_arcs")
    i_arcs = arc_list("i_arcs")

    ci_arcs = []
    for entry in doc.get("ci_arcs", []):
        _expect(isinstance(entry, dict), "each ci_arcs entry must be an object")
        endpoints = entry.get("endpoints")
        selector = entry.get("selector")
        _expect(
            isinstance(endpoints, list) and len(endpoints) == 2,
            "ci-arc endpoints must be a pair",
        )
        _expect(isinstance(selector, list), "ci-arc selector must be a list")
        rows = {}
        for row in entry.get("cit", []):
            _expect(isinstance(row, dict), "each cit row must be an object")
            when = row.get("when")
            winner = row.get("more_important")
            _expect(isinstance(when, Mapping), "cit row needs a 'when' object")
            _expect(isinstance(winner, str), "cit row needs a 'more_important' name")
            _expect(
                set(when) == set(selector),
                f"cit row keys {sorted(when)} must match the selector {selector}",
            )
            key = tuple(when[s] for s in selector)
            _expect(key not in rows, f"duplicate cit row for {when}")
            rows[key] = winner
        ci_arcs.append(CiTable(tuple(endpoints), tuple(selector), rows))

    cpts = {}
    order = [n for n, _ in variables]
    for entry in doc.get("cpts", []):
        _expect(isinstance(entry, dict), "each cpts entry must be an object")
        owner = entry.get("variable")
        _expect(isinstance(owner, str), "cpt needs a 'variable' name")
        _expect(owner not in cpts, f"duplicate cpt for {owner!r}")
        parents = entry.get("parents")
        if parents is None:
            parents = [p for p in order if (p, owner) in set(cp_arcs)]
        _expect(isinstance(parents, list), "cpt parents must be a list")
        rows = {}
        for row in entry.get("rows", []):
            _expect(isinstance(row, dict), "each cpt row must be an object")
            when = row.get("when", {})
            _expect(isinstance(when, Mapping), "cpt row 'when' must be an object")
            _expect(
                set(when) == set(parents),
                f"cpt row keys {sorted(when)} must match parents {parents} of {owner!r}",
            )
            key = tuple(when[p] for p in parents)
            _expect(key not in rows, f"duplicate cpt row for {owner!r} at {when}")
            if "ranking" in row:
                ranking = row["ranking"]
                _expect(
                    isinstance(ranking, list) and all(isinstance(v, str) for v in ranking),
                    "cpt 'ranking' must be a list of values",
                )
                rows[key] = list(ranking)
            else:
                prefer = row.get("prefer", [])
                _expect(
                    isinstance(prefer, list)
                    and all(isinstance(p, list) and len(p) == 2 for p in prefer),
                    "cpt 'prefer' must be a list of [better, worse] pairs",
                )
                rows[key] = [tuple(p) for p in prefer]
        cpts[owner] = CpTable.make(owner, parents, rows)

    net = make_net(variables, cp_arcs, i_arcs, ci_arcs, cpts, check=False)
    report = validate_net(net)
    if not report.ok:
        raise ValidationFailed(report)
    return net


def net_to_document(net: TcpNet) -> dict:
    """Canonical document form of a net (deterministic field order)."""
    order = {n: i for i, n in enumerate(net.variable_names)}
    doc = {
        "format_version": FORMAT_VERSION,
        "variables": [{"name": v.name, "domain": list(v.domain)} for v in net.variables],
        "cp_arcs": [list(a) for a in sorted(net.cp_arcs, key=lambda a: (order[a[0]], order[a[1]]))],
        "i_arcs": [list(a) for a in sorted(net.i_arcs, key=lambda a: (order[a[0]], order[a[1]]))],
        "ci_arcs": [],
        "cpts": [],
    }
    for ci in sorted(net.ci_arcs, key=lambda c: (order[c.endpoints[0]], order[c.endpoints[1]])):
        doc["ci_arcs"].append(
            {
                "endpoints": list(ci.endpoints),
                "selector": list(ci.selector),
                "cit": [
                    {
                        "when": dict(zip(ci.selector, key)),
                        "more_important": ci.rows[key],
                    }
                    for key in sorted(ci.rows)
                ],
            }
        )
    for name in net.variable_names:
        table = net.cpts[name]
        doc["cpts"].append(
            {
                "variable": name,
                "parents": list(table.parents),
                "rows": [
                    {
                        "when": dict(zip(table.parents, key)),
                        "prefer": [list(p) for p in sorted(table.rows[key])],
                    }
                    for key in sorted(table.rows)
                ],
            }
        )
    return doc


def serialize_net(net: TcpNet) -> str:
    return json.dumps(net_to_document(net), indent=2) + "\n"


def parse_constraints(text: str, net: TcpNet) -> list[HardConstraint]:
    """Parse a constraints document against the net it accompanies."""
    doc = _load_json(text)
    _check_version(doc)
    raw = doc.get("constraints")
    _expect(isinstance(raw, list), "constraints must be a list")
    out = []
    for entry in raw:
        _expect(isinstance(entry, dict), "each constraint must be an object")
        scope = entry.get("scope")
        allowed = entry.get("allowed")
        _expect(
            isinstance(scope, list) and all(isinstance(v, str) for v in scope),
            "constraint scope must be a list of variable names",
        )
        _expect(isinstance(allowed, list), "constraint 'allowed' must be a list of tuples")
        tuples = []
        for t in allowed:
            _expect(
                isinstance(t, list) and all(isinstance(v, str) for v in t),
                "each allowed entry must be a list of values",
            )
            tuples.append(tuple(t))
        out.append(HardConstraint(tuple(scope), frozenset(tuples)))
    try:
        check_constraints(net, out)
    except (TcpNetError, ValueError) as exc:
        raise ParseError(f"constraints do not fit the net: {exc}") from None
    return out


def constraints_to_document(constraints: list[HardConstraint]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "constraints": [
            {"scope": list(c.scope), "allowed": [list(t) for t in sorted(c.allowed)]}
            for c in constraints
        ],
    }


def serialize_constraints(constraints: list[HardConstraint]) -> str:
    return json.dumps(constraints_to_document(constraints), indent=2) + "\n"
