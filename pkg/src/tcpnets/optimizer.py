"""Outcome optimization for conditionally acyclic nets.

Unconstrained optimization is a forward sweep: walk the cp-arc DAG top
down and give every variable its most preferred value under its parents'
values. Under hard constraints the problem turns into branch-and-bound:
the search assigns a root variable's values best-first, propagates the
constraints, restricts the net, recurses over connected components, and
keeps exactly the feasible outcomes no earlier solution dominates. The
emitted set is anytime: a solution, once emitted, is never beaten by a
later one, so the first feasible outcome is already non-dominated.

Constraints are extensional (scope + allowed tuples) and propagation is
generalized arc consistency to a fixpoint.
"""

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .model import (
    Assignment,
    NoRoot,
    TcpNet,
    TcpNetError,
    TooLarge,
    UnknownVariable,
    check_assignment,
    reduce_net,
    restrict_net,
)
from . import dominance as _dominance
from .dominance import DominanceStatus


class UnknownDominance(TcpNetError):
    """A dominance test inside the search hit its budget."""


@dataclass(frozen=True)
class HardConstraint:
    """Extensional constraint: the scope variables must jointly take one of
    the allowed value tuples."""

    scope: tuple[str, ...]
    allowed: frozenset[tuple[str, ...]]

    @staticmethod
    def make(scope: Sequence[str], allowed: Iterable[Sequence[str]]) -> "HardConstraint":
        return HardConstraint(tuple(scope), frozenset(tuple(t) for t in allowed))


def check_constraints(net: TcpNet, constraints: Iterable[HardConstraint]) -> None:
    for c in constraints:
        if not c.scope:
            raise ValueError("constraint scope must be nonempty")
        if len(set(c.scope)) != len(c.scope):
            raise ValueError(f"constraint scope {c.scope} lists a variable twice")
        domains = []
        for name in c.scope:
            if not net.has_variable(name):
                raise UnknownVariable(f"constraint references unknown variable {name!r}")
            domains.append(net.domain(name))
        for t in c.allowed:
            if len(t) != len(c.scope):
                raise ValueError(f"tuple {t} does not match scope arity {len(c.scope)}")
            for i, value in enumerate(t):
                if value not in domains[i]:
                    raise ValueError(f"tuple value {value!r} outside domain of {c.scope[i]!r}")


@dataclass(frozen=True, eq=False)
class ConstraintStore:
    """Immutable propagation state: current domains plus the assignment
    committed so far. ``strengthen`` returns a new store."""

    constraints: tuple[HardConstraint, ...]
    domains: Mapping[str, tuple[str, ...]]
    committed: Mapping[str, str]

    @staticmethod
    def initial(net: TcpNet, constraints: Iterable[HardConstraint]) -> "ConstraintStore":
        constraints = tuple(constraints)
        check_constraints(net, constraints)
        return ConstraintStore(
            constraints, {n: net.domain(n) for n in net.variable_names}, {}
        )

    def solution_space(self) -> int:
        size = 1
        for d in self.domains.values():
            size *= len(d)
        return size

    def solutions(self) -> Iterable[dict[str, str]]:
        names = list(self.domains)
        for combo in itertools.product(*(self.domains[n] for n in names)):
            candidate = dict(zip(names, combo))
            if all(_satisfied(c, candidate) for c in self.constraints):
                yield candidate

    def admits(self, outcome: Mapping[str, str]) -> bool:
        return all(outcome[n] in d for n, d in self.domains.items()) and all(
            _satisfied(c, outcome) for c in self.constraints
        )


def _satisfied(constraint: HardConstraint, outcome: Mapping[str, str]) -> bool:
    return tuple(outcome[v] for v in constraint.scope) in constraint.allowed


def strengthen(
    store: ConstraintStore, variable: str, value: str
) -> tuple[ConstraintStore, dict[str, str]] | None:
    """Commit ``variable=value`` and propagate to a fixpoint.

    Propagation is generalized arc consistency: repeatedly drop any domain
    value with no supporting tuple in some constraint. Returns the new
    store plus the newly induced assignment (every variable whose domain
    collapsed to a single value and was not committed before, including
    ``variable`` itself), or None when a domain wipes out.
    """
    if value not in store.domains[variable]:
        return None
    domains = {n: list(d) for n, d in store.domains.items()}
    domains[variable] = [value]

    dirty = True
    while dirty:
        dirty = False
        for constraint in store.constraints:
            live = [
                t
                for t in constraint.allowed
                if all(t[i] in domains[v] for i, v in enumerate(constraint.scope))
            ]
            for i, v in enumerate(constraint.scope):
                supported = {t[i] for t in live}
                kept = [val for val in domains[v] if val in supported]
                if len(kept) != len(domains[v]):
                    if not kept:
                        return None
                    domains[v] = kept
                    dirty = True

    committed = dict(store.committed)
    induced: dict[str, str] = {}
    for name, dom in domains.items():
        if len(dom) == 1 and name not in committed:
            committed[name] = dom[0]
            induced[name] = dom[0]
    new_store = ConstraintStore(
        store.constraints, {n: tuple(d) for n, d in domains.items()}, committed
    )
    return new_store, induced


class Entailment(Enum):
    YES = "yes"
    NO = "no"
    UNDECIDED = "undecided"


def store_entailed_by(
    inner: ConstraintStore, outer: ConstraintStore, budget: int = 100_000
) -> Entailment:
    """Is every solution of ``inner`` also a solution of ``outer``?

    Decided exactly by enumeration while the inner search space stays
    within ``budget``; otherwise by a conservative test (outer committed a
    subset of inner's commitments and outer's domains contain inner's
    pointwise), which can only answer Yes or Undecided. Pruning callers
    must act only on Yes.
    """
    if inner.solution_space() <= budget:
        for solution in inner.solutions():
            if not outer.admits(solution):
                return Entailment.NO
        return Entailment.YES
    outer_committed = all(
        inner.committed.get(n) == v for n, v in outer.committed.items()
    )
    pointwise = all(
        set(inner.domains[n]) <= set(outer.domains[n]) for n in inner.domains
    )
    if outer_committed and pointwise:
        return Entailment.YES
    return Entailment.UNDECIDED


# ---------------------------------------------------------------------------
# Structure helpers
# ---------------------------------------------------------------------------


def find_root(net: TcpNet) -> str:
    """First variable in declaration order with no incoming cp-arc, no
    incoming i-arc, and no incident ci-arc. Conditionally acyclic nets
    always have one; NoRoot therefore signals a net outside that class."""
    ci_endpoints = {e for ci in net.ci_arcs for e in ci.endpoints}
    for name in net.variable_names:
        if name in ci_endpoints:
            continue
        if any(y == name for _, y in net.cp_arcs):
            continue
        if any(y == name for _, y in net.i_arcs):
            continue
        return name
    raise NoRoot("every variable has an incoming cp/i-arc or an incident ci-arc")


def _cp_topological_order(net: TcpNet) -> list[str]:
    indegree = {n: 0 for n in net.variable_names}
    children: dict[str, list[str]] = {n: [] for n in net.variable_names}
    for x, y in net.cp_arcs:
        indegree[y] += 1
        children[x].append(y)
    ready = [n for n in net.variable_names if indegree[n] == 0]
    order: list[str] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in sorted(children[node], key=net.index_of):
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
        ready.sort(key=net.index_of)
    if len(order) != len(net.variable_names):
        raise NoRoot("cp-arcs form a directed cycle")
    return order


def linear_extension(domain: Sequence[str], order_pairs) -> list[str]:
    """Total order consistent with a strict partial order over ``domain``,
    best value first, declaration order breaking ties."""
    remaining = list(domain)
    out: list[str] = []
    while remaining:
        for v in remaining:
            if not any((u, v) in order_pairs for u in remaining):
                out.append(v)
                remaining.remove(v)
                break
        else:  # cyclic order: cannot happen on validated tables
            raise ValueError("value order admits no maximal element")
    return out


def forward_sweep(net: TcpNet, assignment: Assignment | None = None) -> dict[str, str]:
    """Most preferred completion of ``assignment``.

    Variables are visited in a topological order of the cp-arc subgraph;
    each unassigned variable takes a maximal value of its CPT row under
    the already-fixed parent values (first such value in domain order).
    """
    fixed = dict(assignment or {})
    check_assignment(net, fixed)
    outcome: dict[str, str] = {}
    for name in _cp_topological_order(net):
        if name in fixed:
            outcome[name] = fixed[name]
            continue
        row = net.cpts[name].row_for(outcome)
        domain = net.domain(name)
        outcome[name] = next(
            v for v in domain if not any((u, v) in row for u in domain)
        )
    return {n: outcome[n] for n in net.variable_names}


def components(net: TcpNet, store: ConstraintStore) -> list[tuple[str, ...]]:
    """Connected components of the interaction graph over the net's
    uncommitted variables.

    Edges come from the net's arcs (cp, i, ci endpoints, and selector to
    ci-endpoint links, so every component is closed under the structure
    the recursion needs) plus a clique over each still-active constraint
    scope. A constraint whose scope is fully committed is inactive.
    """
    remaining = [n for n in net.variable_names if n not in store.committed]
    alive = set(remaining)
    neighbors: dict[str, set[str]] = {n: set() for n in remaining}

    def link(a: str, b: str):
        if a in alive and b in alive and a != b:
            neighbors[a].add(b)
            neighbors[b].add(a)

    for x, y in net.cp_arcs:
        link(x, y)
    for x, y in net.i_arcs:
        link(x, y)
    for ci in net.ci_arcs:
        x, y = ci.endpoints
        link(x, y)
        for s in ci.selector:
            link(s, x)
            link(s, y)
    for constraint in store.constraints:
        scope_alive = [v for v in constraint.scope if v in alive]
        for a, b in itertools.combinations(scope_alive, 2):
            link(a, b)

    seen: set[str] = set()
    out: list[tuple[str, ...]] = []
    for start in remaining:
        if start in seen:
            continue
        frontier = [start]
        seen.add(start)
        component = {start}
        while frontier:
            here = frontier.pop()
            for other in neighbors[here]:
                if other not in seen:
                    seen.add(other)
                    component.add(other)
                    frontier.append(other)
        out.append(tuple(n for n in net.variable_names if n in component))
    return out


# ---------------------------------------------------------------------------
# Constrained search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolutionSet:
    """Solutions in emission order; no later element is entailed-better
    than an earlier one."""

    solutions: tuple[dict, ...]

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)


def search_tcp(
    net: TcpNet,
    constraints: Iterable[HardConstraint],
    mode: str = "all",
    dominance_budget: int | None = None,
    prune: bool = True,
) -> SolutionSet:
    """Branch-and-bound over feasible outcomes, best-first.

    mode="all" returns every feasible outcome not dominated by another
    feasible outcome; mode="first" stops at the first feasible outcome,
    which the anytime property already guarantees to be non-dominated (no
    dominance tests run in that mode). ``dominance_budget`` bounds each
    internal dominance query; hitting it raises UnknownDominance rather
    than returning a possibly-wrong set. ``prune`` toggles the containment
    pruning of strictly-more-restricted sibling branches; disabling it
    only costs time, never changes the result.

    Requires a conditionally acyclic net (NoRoot surfaces a violation).
    """
    if mode not in ("all", "first"):
        raise ValueError(f"unknown mode {mode!r}")
    if not net.variables:
        return SolutionSet(({},))
    store = ConstraintStore.initial(net, constraints)
    first_only = mode == "first"
    partials = _search(net, store, first_only, dominance_budget, prune)
    return SolutionSet(tuple({n: s[n] for n in net.variable_names} for s in partials))


def _search(
    sub: TcpNet,
    store: ConstraintStore,
    first_only: bool,
    budget: int | None,
    prune: bool,
) -> list[dict[str, str]]:
    root = find_root(sub)
    values = linear_extension(sub.domain(root), sub.cpts[root].row_for({}))

    results: list[dict[str, str]] = []
    earlier_stores: list[ConstraintStore] = []
    for value in values:
        outcome = strengthen(store, root, value)
        if outcome is None:
            continue
        branch_store, induced = outcome
        if prune and any(
            store_entailed_by(branch_store, earlier) is Entailment.YES
            for earlier in earlier_stores
        ):
            earlier_stores.append(branch_store)
            continue
        earlier_stores.append(branch_store)

        reduced = reduce_net(sub, induced)
        parts = components(reduced, branch_store)
        part_results: list[list[dict[str, str]]] = []
        feasible = True
        for part in parts:
            sub_results = _search(
                restrict_net(reduced, part), branch_store, first_only, budget, prune
            )
            if not sub_results:
                feasible = False
                break
            part_results.append(sub_results)
        if not feasible:
            continue

        for combo in itertools.product(*part_results):
            candidate = dict(induced)
            for piece in combo:
                candidate.update(piece)
            # Non-dominance is tested against this level's net between this
            # level's (complete) sub-outcomes; incomparability lifts to the
            # parent because the eliminated variables are preferentially
            # independent of the rest.
            if _dominated_by_any(sub, candidate, results, budget):
                continue
            results.append(candidate)
            if first_only:
                return results
    return results


def _dominated_by_any(sub, candidate, results, budget) -> bool:
    for earlier in results:
        verdict = _dominance.dominates(sub, earlier, candidate, budget)
        if verdict.status is DominanceStatus.UNKNOWN:
            raise UnknownDominance(
                f"dominance budget exhausted comparing {earlier} against {candidate}"
            )
        if verdict.status is DominanceStatus.DOMINATES:
            return True
    return False


# ---------------------------------------------------------------------------
# Constructive satisfying orders
# ---------------------------------------------------------------------------


def construct_satisfying_order(net: TcpNet, cap: int = 2**20) -> list[dict[str, str]]:
    """A total order over all outcomes (best first) that satisfies the net.

    Recursive construction: pick a root, linearize its domain consistently
    with its CPT, build an order for each value's reduced net, and
    concatenate the blocks best value first. Existence of a root at every
    step is exactly conditional acyclicity, so NoRoot signals a net outside
    the supported class. TooLarge above ``cap`` outcomes.
    """
    count = net.outcome_count()
    if count > cap:
        raise TooLarge(f"outcome space of size {count} exceeds cap {cap}")

    def build(sub: TcpNet) -> list[dict[str, str]]:
        if not sub.variables:
            return [{}]
        root = find_root(sub)
        values = linear_extension(sub.domain(root), sub.cpts[root].row_for({}))
        out: list[dict[str, str]] = []
        for value in values:
            for tail in build(reduce_net(sub, {root: value})):
                tail[root] = value
                out.append(tail)
        return out

    return [{n: o[n] for n in net.variable_names} for o in build(net)]
