"""Core TCP-net data model: variables, preference tables, importance tables,
structural validation, and network restriction.

A TCP-net couples a CP-net (conditional preference tables attached to
variables, cp-arcs for preferential dependence) with relative-importance
information: directed i-arcs (X unconditionally more important than Y) and
undirected ci-arcs whose direction is decided per assignment to a selector
set, via a conditional importance table (CIT).

All model objects are immutable after construction. Operations that "modify"
a net (:func:`reduce_net`) return a new net and never touch their input, so
nets are safe to share across threads.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence


class TcpNetError(Exception):
    """Base class for all engine errors."""


class UnknownVariable(TcpNetError):
    pass


class IncompleteOutcome(TcpNetError):
    pass


class IncompleteOrder(TcpNetError):
    pass


class IncompleteSelectorAssignment(TcpNetError):
    pass


class TooLarge(TcpNetError):
    pass


class NoRoot(TcpNetError):
    pass


class WidthExceeded(TcpNetError):
    pass


class NonBinarySelector(TcpNetError):
    pass


class ValidationFailed(TcpNetError):
    """Raised when an operation requires a valid net but validation found errors."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        first = next((i for i in report.issues if i.severity == "error"), None)
        detail = f": {first.location}: {first.message}" if first else ""
        super().__init__(f"net validation failed{detail}")


# An assignment maps variable names to values; an outcome binds every
# variable of the net.
Assignment = Mapping[str, str]


def transitive_closure(pairs: Iterable[tuple[str, str]]) -> frozenset[tuple[str, str]]:
    """Transitive closure of a binary relation given as (better, worse) pairs."""
    closed = set(pairs)
    changed = True
    while changed:
        changed = False
        for a, b in list(closed):
            for c, d in list(closed):
                if b == c and (a, d) not in closed:
                    closed.add((a, d))
                    changed = True
    return frozenset(closed)


@dataclass(frozen=True, eq=False)
class VariableSpec:
    """A problem variable with an ordered finite domain.

    Declaration order of domain values doubles as the deterministic
    tie-break order used throughout the engine.
    """

    name: str
    domain: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))


@dataclass(frozen=True, eq=False)
class CpTable:
    """Conditional preference table of one variable.

    ``rows`` maps each total assignment to ``parents`` (a tuple of values
    aligned with the ``parents`` tuple) to a strict partial order over the
    owner's domain, stored as the transitive closure of its (better, worse)
    pairs. A missing row means the empty order: no preference is expressed
    for that parent context.
    """

    owner: str
    parents: tuple[str, ...]
    rows: Mapping[tuple[str, ...], frozenset[tuple[str, str]]]

    @staticmethod
    def make(
        owner: str,
        parents: Sequence[str],
        rows: Mapping,
    ) -> "CpTable":
        """Build a table from loosely-typed rows.

        Row keys may be value tuples (aligned with ``parents``) or mappings
        from parent name to value. Row bodies may be an iterable of
        (better, worse) pairs or a best-first ranking of values. Orders are
        transitively closed here; closure is cheap because domains are small.
        """
        parents = tuple(parents)
        built: dict[tuple[str, ...], frozenset[tuple[str, str]]] = {}
        for key, order in rows.items():
            if isinstance(key, Mapping):
                key = tuple(key[p] for p in parents)
            elif isinstance(key, str):
                key = (key,)
            else:
                key = tuple(key)
            built[key] = transitive_closure(_as_pairs(order))
        return CpTable(owner, parents, built)

    def row_for(self, context: Assignment) -> frozenset[tuple[str, str]]:
        """The value order under the parent values found in ``context``.

        Absent rows are the empty order.
        """
        key = tuple(context[p] for p in self.parents)
        return self.rows.get(key, frozenset())


def _as_pairs(order) -> list[tuple[str, str]]:
    order = list(order)
    if order and isinstance(order[0], str):
        # best-first ranking shorthand
        return [(order[i], order[j]) for i in range(len(order)) for j in range(i + 1, len(order))]
    return [(a, b) for a, b in order]


@dataclass(frozen=True, eq=False)
class CiTable:
    """A ci-arc with its conditional importance table.

    The arc joins the unordered pair ``endpoints``; ``selector`` is the
    nonempty tuple of conditioning variables. ``rows`` maps assignments to
    the selector (value tuples aligned with ``selector``) to the name of
    the endpoint that is more important under that assignment. The map may
    be partial: an absent row expresses no importance relation.
    """

    endpoints: tuple[str, str]
    selector: tuple[str, ...]
    rows: Mapping[tuple[str, ...], str]

    @staticmethod
    def make(endpoints: Sequence[str], selector: Sequence[str], rows: Mapping) -> "CiTable":
        selector = tuple(selector)
        built: dict[tuple[str, ...], str] = {}
        for key, winner in rows.items():
            if isinstance(key, Mapping):
                key = tuple(key[s] for s in selector)
            elif isinstance(key, str):
                key = (key,)
            else:
                key = tuple(key)
            built[key] = winner
        x, y = endpoints
        return CiTable((x, y), selector, built)

    @property
    def pair(self) -> frozenset[str]:
        return frozenset(self.endpoints)

    def orientation_for(self, context: Assignment) -> str | None:
        """Name of the more-important endpoint under ``context``, or None
        when the table has no row for the selector values."""
        key = tuple(context[s] for s in self.selector)
        return self.rows.get(key)

    def other(self, endpoint: str) -> str:
        x, y = self.endpoints
        return y if endpoint == x else x


@dataclass(frozen=True, eq=False)
class TcpNet:
    """An immutable TCP-net.

    Fields mirror the defining tuple: variables, cp-arcs, i-arcs, ci-arcs
    (each carrying its CIT), and one CP-table per variable. Instances are
    hashable by identity; use :func:`tcpnets.io.net_to_document` for
    structural comparison.
    """

    variables: tuple[VariableSpec, ...]
    cp_arcs: frozenset[tuple[str, str]]
    i_arcs: frozenset[tuple[str, str]]
    ci_arcs: tuple[CiTable, ...]
    cpts: Mapping[str, CpTable]

    @cached_property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def _by_name(self) -> dict[str, VariableSpec]:
        return {v.name: v for v in self.variables}

    @cached_property
    def _indices(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def has_variable(self, name: str) -> bool:
        return name in self._by_name

    def domain(self, name: str) -> tuple[str, ...]:
        try:
            return self._by_name[name].domain
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}") from None

    def index_of(self, name: str) -> int:
        try:
            return self._indices[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}") from None

    def cpt(self, name: str) -> CpTable:
        return self.cpts[name]

    def parents_of(self, name: str) -> tuple[str, ...]:
        return self.cpts[name].parents

    @cached_property
    def selector_union(self) -> tuple[str, ...]:
        """Union of all ci-arc selector sets, in declaration order."""
        names = {s for ci in self.ci_arcs for s in ci.selector}
        return tuple(n for n in self.variable_names if n in names)

    def ci_for(self, x: str, y: str) -> CiTable | None:
        pair = frozenset((x, y))
        for ci in self.ci_arcs:
            if ci.pair == pair:
                return ci
        return None

    def outcome_count(self) -> int:
        count = 1
        for v in self.variables:
            count *= len(v.domain)
        return count


def make_net(
    variables: Sequence[tuple[str, Sequence[str]]],
    cp_arcs: Iterable[tuple[str, str]] = (),
    i_arcs: Iterable[tuple[str, str]] = (),
    ci_arcs: Iterable = (),
    cpts: Mapping | None = None,
    check: bool = True,
) -> TcpNet:
    """Assemble a net from plain data.

    ``ci_arcs`` entries are either CiTable instances or
    ``(endpoints, selector, rows)`` triples. ``cpts`` maps variable name to
    its row mapping (see :meth:`CpTable.make`); variables without an entry
    get an empty table. CPT parents are the cp-arc sources of the owner in
    variable declaration order.

    With ``check=True`` the result is validated and a ValidationFailed is
    raised on any error-severity issue.
    """
    specs = tuple(VariableSpec(n, tuple(d)) for n, d in variables)
    order = [s.name for s in specs]
    cp = frozenset((str(a), str(b)) for a, b in cp_arcs)
    i = frozenset((str(a), str(b)) for a, b in i_arcs)

    tables: list[CiTable] = []
    for entry in ci_arcs:
        if isinstance(entry, CiTable):
            tables.append(entry)
        else:
            endpoints, selector, rows = entry
            tables.append(CiTable.make(tuple(endpoints), tuple(selector), rows))

    cpts = dict(cpts or {})
    built_cpts: dict[str, CpTable] = {}
    for name in order:
        parents = tuple(p for p in order if (p, name) in cp)
        spec = cpts.get(name)
        if isinstance(spec, CpTable):
            built_cpts[name] = spec
        else:
            built_cpts[name] = CpTable.make(name, parents, spec or {})

    net = TcpNet(specs, cp, i, tuple(tables), built_cpts)
    if check:
        report = validate_net(net)
        if not report.ok:
            raise ValidationFailed(report)
    return net


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    code: str
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]


def validate_net(net: TcpNet) -> ValidationReport:
    """Check every structural and semantic invariant of a net.

    All problems are reported in the result, never raised; ``ok`` is true
    iff no issue has error severity. Warnings cover benign-but-suspicious
    shapes such as CPT rows left unspecified (treated as the empty order)
    and ci-arcs whose CIT has no rows at all.
    """
    issues: list[Issue] = []

    def err(code, location, message):
        issues.append(Issue("error", code, location, message))

    def warn(code, location, message):
        issues.append(Issue("warning", code, location, message))

    seen = set()
    for v in net.variables:
        loc = f"variable {v.name}"
        if v.name in seen:
            err("duplicate-variable", loc, "variable name declared twice")
        seen.add(v.name)
        if len(v.domain) < 2:
            err("bad-domain", loc, "domain must contain at least two values")
        if len(set(v.domain)) != len(v.domain):
            err("bad-domain", loc, "domain values must be unique")

    names = set(net.variable_names)

    def known(name, loc) -> bool:
        if name not in names:
            err("unknown-variable", loc, f"references undeclared variable {name!r}")
            return False
        return True

    for x, y in sorted(net.cp_arcs):
        loc = f"cp-arc {x}->{y}"
        known(x, loc)
        known(y, loc)
        if x == y:
            err("self-loop", loc, "cp-arc endpoints must differ")

    for x, y in sorted(net.i_arcs):
        loc = f"i-arc {x}>{y}"
        known(x, loc)
        known(y, loc)
        if x == y:
            err("self-loop", loc, "i-arc endpoints must differ")
        if (y, x) in net.i_arcs and x < y:
            err("i-arc-symmetric", loc, f"both {x}>{y} and {y}>{x} are declared")
        if (y, x) in net.cp_arcs:
            # An importance statement against the direction of preferential
            # dependence has no evaluable semantics: the more-important
            # variable's value order would be conditioned on the less
            # important one.
            err("cp-i-opposed", loc, f"i-arc opposes cp-arc {y}->{x}")

    seen_pairs: set[frozenset[str]] = set()
    for ci in net.ci_arcs:
        x, y = ci.endpoints
        loc = f"ci-arc {{{x},{y}}}"
        ok_names = known(x, loc) and known(y, loc)
        if x == y:
            err("self-loop", loc, "ci-arc endpoints must differ")
            continue
        if ci.pair in seen_pairs:
            err("duplicate-ci", loc, "pair already joined by another ci-arc")
        seen_pairs.add(ci.pair)
        if (x, y) in net.cp_arcs or (y, x) in net.cp_arcs:
            err("pair-conflict", loc, "pair also joined by a cp-arc")
        if (x, y) in net.i_arcs or (y, x) in net.i_arcs:
            err("pair-conflict", loc, "pair also joined by an i-arc")
        if not ci.selector:
            err("empty-selector", loc, "selector set must be nonempty")
        if len(set(ci.selector)) != len(ci.selector):
            err("bad-selector", loc, "selector lists a variable twice")
        for s in ci.selector:
            if not known(s, loc):
                continue
            if s in (x, y):
                err("selector-endpoint", loc, f"selector contains endpoint {s!r}")
        if ok_names and all(s in names for s in ci.selector):
            _validate_cit_rows(net, ci, loc, err, warn)

    for name in net.variable_names:
        if name not in net.cpts:
            err("missing-cpt", f"cpt {name}", "no preference table attached")
            continue
        _validate_cpt(net, net.cpts[name], err, warn)
    for owner in net.cpts:
        if owner not in names:
            err("unknown-variable", f"cpt {owner}", "table owner is not a declared variable")

    return ValidationReport(tuple(issues))


def _validate_cpt(net: TcpNet, table: CpTable, err, warn):
    loc = f"cpt {table.owner}"
    if table.owner not in set(net.variable_names):
        return
    expected = {x for x, y in net.cp_arcs if y == table.owner}
    if set(table.parents) != expected:
        err(
            "cpt-parents-mismatch",
            loc,
            f"parents {sorted(table.parents)} do not match incoming cp-arc sources {sorted(expected)}",
        )
        return
    if len(set(table.parents)) != len(table.parents):
        err("cpt-parents-mismatch", loc, "parent listed twice")
        return
    domain = net.domain(table.owner)
    parent_domains = []
    for p in table.parents:
        if not net.has_variable(p):
            return
        parent_domains.append(net.domain(p))

    expected_rows = 1
    for d in parent_domains:
        expected_rows *= len(d)

    for key, order in table.rows.items():
        row_loc = f"{loc} row {key!r}"
        if len(key) != len(table.parents):
            err("bad-row-key", row_loc, "row key arity differs from parent count")
            continue
        if any(val not in parent_domains[i] for i, val in enumerate(key)):
            err("bad-row-key", row_loc, "row key value outside parent domain")
            continue
        bad_value = False
        for a, b in order:
            if a not in domain or b not in domain:
                err("bad-value", row_loc, f"ordered pair ({a},{b}) uses value outside domain")
                bad_value = True
        if bad_value:
            continue
        if any(a == b for a, b in order):
            err("cyclic-value-order", row_loc, "value order is not irreflexive")

    valid_keys = sum(
        1
        for key in table.rows
        if len(key) == len(table.parents)
        and all(val in parent_domains[i] for i, val in enumerate(key))
    )
    if valid_keys < expected_rows:
        warn(
            "missing-rows",
            loc,
            f"only {valid_keys} of {expected_rows} parent contexts have a row; "
            "missing rows express no preference",
        )


def _validate_cit_rows(net: TcpNet, ci: CiTable, loc: str, err, warn):
    x, y = ci.endpoints
    selector_domains = [net.domain(s) for s in ci.selector]
    for key, winner in ci.rows.items():
        row_loc = f"{loc} row {key!r}"
        if len(key) != len(ci.selector):
            err("bad-row-key", row_loc, "row key arity differs from selector size")
            continue
        if any(val not in selector_domains[i] for i, val in enumerate(key)):
            err("bad-row-key", row_loc, "row key value outside selector domain")
        if winner not in (x, y):
            err("bad-value", row_loc, f"more-important endpoint {winner!r} is not on the arc")
    if not ci.rows:
        warn("empty-cit", loc, "importance table has no rows; the arc never orients")


# ---------------------------------------------------------------------------
# Assignments and outcomes
# ---------------------------------------------------------------------------


def check_assignment(net: TcpNet, assignment: Assignment) -> None:
    """Raise UnknownVariable/ValueError unless every binding is legal."""
    for name, value in assignment.items():
        domain = net.domain(name)  # raises UnknownVariable
        if value not in domain:
            raise ValueError(f"value {value!r} not in domain of {name!r}")


def require_outcome(net: TcpNet, assignment: Assignment) -> dict[str, str]:
    """Validate that ``assignment`` binds every variable; returns a copy."""
    check_assignment(net, assignment)
    missing = [n for n in net.variable_names if n not in assignment]
    if missing:
        raise IncompleteOutcome(f"outcome leaves {missing} unassigned")
    return {n: assignment[n] for n in net.variable_names}


# ---------------------------------------------------------------------------
# Network restriction
# ---------------------------------------------------------------------------


def reduce_net(net: TcpNet, binding: Assignment) -> TcpNet:
    """Restrict a net to the variables left unassigned by ``binding``.

    For each bound variable X: CPTs of X's cp-children lose the rows
    inconsistent with X's value (and X leaves their parent lists); CITs
    with X in the selector are restricted the same way, and the arc is
    replaced by an i-arc when the restricted table is total over the
    remaining selector and expresses a single orientation, or dropped
    entirely when the restricted table is empty. All arcs touching X are
    removed along with X.

    Reducing by the empty assignment returns an identical net. Reductions
    by disjoint bindings commute and compose.
    """
    if not binding:
        return net
    bound = dict(binding)
    check_assignment(net, bound)

    keep = tuple(v for v in net.variables if v.name not in bound)
    kept_names = {v.name for v in keep}
    cp = frozenset((a, b) for a, b in net.cp_arcs if a in kept_names and b in kept_names)
    i_arcs = {(a, b) for a, b in net.i_arcs if a in kept_names and b in kept_names}

    cpts: dict[str, CpTable] = {}
    for v in keep:
        table = net.cpts[v.name]
        if not any(p in bound for p in table.parents):
            cpts[v.name] = table
            continue
        new_parents = tuple(p for p in table.parents if p not in bound)
        rows: dict[tuple[str, ...], frozenset[tuple[str, str]]] = {}
        for key, order in table.rows.items():
            ctx = dict(zip(table.parents, key))
            if all(ctx[p] == bound[p] for p in table.parents if p in bound):
                rows[tuple(ctx[p] for p in new_parents)] = order
        cpts[v.name] = CpTable(v.name, new_parents, rows)

    ci_arcs: list[CiTable] = []
    for ci in net.ci_arcs:
        x, y = ci.endpoints
        if x in bound or y in bound:
            continue
        if not any(s in bound for s in ci.selector):
            ci_arcs.append(ci)
            continue
        new_selector = tuple(s for s in ci.selector if s not in bound)
        rows: dict[tuple[str, ...], str] = {}
        for key, winner in ci.rows.items():
            ctx = dict(zip(ci.selector, key))
            if all(ctx[s] == bound[s] for s in ci.selector if s in bound):
                rows[tuple(ctx[s] for s in new_selector)] = winner
        if not rows:
            continue
        winners = set(rows.values())
        full_cover = 1
        for s in new_selector:
            full_cover *= len(net.domain(s))
        if len(winners) == 1 and len(rows) == full_cover:
            # Importance no longer depends on the remaining selector values,
            # so the conditional arc degenerates to an unconditional one.
            # Partial restricted tables stay conditional: a missing row is
            # "unspecified", which an i-arc would silently strengthen.
            winner = winners.pop()
            i_arcs.add((winner, ci.other(winner)))
        else:
            ci_arcs.append(CiTable(ci.endpoints, new_selector, rows))

    return TcpNet(keep, cp, frozenset(i_arcs), tuple(ci_arcs), cpts)


def restrict_net(net: TcpNet, names: Iterable[str]) -> TcpNet:
    """Project a net onto a subset of its variables.

    The subset must be closed under cp-parents and ci selectors (as the
    connected components produced by the optimizer are); arcs with any
    endpoint outside the subset are dropped.
    """
    wanted = set(names)
    keep = tuple(v for v in net.variables if v.name in wanted)
    cp = frozenset((a, b) for a, b in net.cp_arcs if a in wanted and b in wanted)
    i_arcs = frozenset((a, b) for a, b in net.i_arcs if a in wanted and b in wanted)
    ci_arcs = tuple(ci for ci in net.ci_arcs if ci.pair <= wanted)
    cpts = {v.name: net.cpts[v.name] for v in keep}
    return TcpNet(keep, cp, i_arcs, ci_arcs, cpts)
