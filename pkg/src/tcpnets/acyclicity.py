"""Conditional acyclicity of TCP-nets.

The dependency graph of a net keeps every arc and adds a directed edge from
each selector variable to both endpoints of its ci-arc. Fixing values for
all selector variables orients every ci-arc that has a CIT row for those
values, producing a w-directed graph. A net is conditionally acyclic when
every such w-directed graph is a DAG; conditionally acyclic nets are always
satisfiable, which is why this check is the gatekeeper for the optimizer.

Deciding the property is NP-hard in general (the CNF gadget builders at the
bottom of this module reproduce the hardness constructions as test-case
factories), so :func:`check_conditional_acyclicity` runs a layered strategy:

1. a directed cycle among the unconditional edges settles the question
   immediately (such a cycle survives in every w-directed graph);
2. nets without ci-arcs, and nets whose underlying undirected graph is a
   forest, are trivially acyclic;
3. otherwise the problem decomposes over the semi-directed cycles of the
   dependency graph, each decided by a ladder of tests: a structural
   necessary condition, a pairwise sufficient condition, a SAT encoding
   over binary selectors (2-SAT solved by the implication-graph method),
   and exact enumeration over the shared selector variables;
4. anything still open falls back to exhaustive enumeration of selector
   assignments, within a budget, or an honest Unknown.
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .model import (
    Assignment,
    CiTable,
    CpTable,
    IncompleteSelectorAssignment,
    NonBinarySelector,
    TcpNet,
    TcpNetError,
    VariableSpec,
    WidthExceeded,
    check_assignment,
    make_net,
)


class BudgetExceeded(TcpNetError):
    pass


# ---------------------------------------------------------------------------
# Dependency graph and w-directed graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DependencyGraph:
    nodes: tuple[str, ...]
    directed_edges: frozenset[tuple[str, str]]
    undirected_edges: frozenset[tuple[str, str]]  # canonical: lower index first
    selector_index: Mapping[tuple[str, str], tuple[str, ...]]


def dependency_graph(net: TcpNet) -> DependencyGraph:
    """The net's arcs plus a directed edge from every selector variable to
    both endpoints of its ci-arc. Edge sets are deduplicated."""
    directed = set(net.cp_arcs) | set(net.i_arcs)
    undirected = set()
    selector_index = {}
    for ci in net.ci_arcs:
        x, y = ci.endpoints
        if net.index_of(x) > net.index_of(y):
            x, y = y, x
        undirected.add((x, y))
        selector_index[(x, y)] = ci.selector
        for z in ci.selector:
            directed.add((z, x))
            directed.add((z, y))
    return DependencyGraph(
        net.variable_names, frozenset(directed), frozenset(undirected), selector_index
    )


@dataclass(frozen=True, eq=False)
class WDirectedGraph:
    nodes: tuple[str, ...]
    directed_edges: frozenset[tuple[str, str]]


def w_directed_graph(net: TcpNet, w: Assignment) -> WDirectedGraph:
    """Orient the dependency graph under a total assignment to the selector
    union. A ci-arc whose CIT has no row for ``w`` contributes no edge."""
    missing = [s for s in net.selector_union if s not in w]
    if missing:
        raise IncompleteSelectorAssignment(f"selector variables {missing} unassigned")
    check_assignment(net, w)
    dep = dependency_graph(net)
    edges = set(dep.directed_edges)
    for ci in net.ci_arcs:
        winner = ci.orientation_for(w)
        if winner is not None:
            edges.add((winner, ci.other(winner)))
    return WDirectedGraph(net.variable_names, frozenset(edges))


def _find_directed_cycle(
    nodes: Sequence[str], edges: Iterable[tuple[str, str]], order: Mapping[str, int]
) -> list[str] | None:
    """First directed cycle in deterministic DFS order, as a vertex list."""
    adjacency: dict[str, list[str]] = {n: [] for n in nodes}
    for u, v in edges:
        adjacency[u].append(v)
    for u in adjacency:
        adjacency[u].sort(key=order.__getitem__)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = dict.fromkeys(nodes, WHITE)
    for start in nodes:
        if color[start] != WHITE:
            continue
        path: list[str] = [start]
        cursors = [0]
        color[start] = GRAY
        while path:
            node = path[-1]
            succs = adjacency[node]
            if cursors[-1] < len(succs):
                nxt = succs[cursors[-1]]
                cursors[-1] += 1
                if color[nxt] == GRAY:
                    return path[path.index(nxt) :]
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    path.append(nxt)
                    cursors.append(0)
            else:
                color[node] = BLACK
                path.pop()
                cursors.pop()
    return None


# ---------------------------------------------------------------------------
# Semi-directed cycles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixedEdge:
    eid: int
    u: str
    v: str
    directed: bool
    ci: CiTable | None = None


@dataclass(frozen=True, eq=False)
class SemiDirectedCycle:
    """A simple cycle of the dependency multigraph that is not fully
    directed and whose directed edges all point the same way around.

    ``edges[i]`` joins ``vertices[i]`` and ``vertices[(i+1) % k]``; the
    stored traversal is normalized so every directed edge points forward.
    An all-undirected cycle can orient either way; its stored traversal is
    just the canonical one.
    """

    vertices: tuple[str, ...]
    edges: tuple[MixedEdge, ...]
    has_directed: bool

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def ci_members(self) -> tuple[tuple[int, CiTable], ...]:
        return tuple((i, e.ci) for i, e in enumerate(self.edges) if not e.directed)

    def tail(self, position: int) -> str:
        return self.vertices[position]

    def directed_cycle(self, forward: bool = True) -> tuple[tuple[str, str], ...]:
        k = len(self.vertices)
        if forward:
            return tuple((self.vertices[i], self.vertices[(i + 1) % k]) for i in range(k))
        return tuple((self.vertices[(i + 1) % k], self.vertices[i]) for i in reversed(range(k)))


@dataclass(frozen=True)
class CapExceeded:
    """Returned when cycle enumeration would exceed its caps."""

    reason: str


def _mixed_edges(net: TcpNet, dep: DependencyGraph) -> list[MixedEdge]:
    order = {n: i for i, n in enumerate(net.variable_names)}
    edges = []
    for u, v in sorted(dep.directed_edges, key=lambda e: (order[e[0]], order[e[1]])):
        edges.append(MixedEdge(len(edges), u, v, True))
    ci_by_pair = {ci.pair: ci for ci in net.ci_arcs}
    for u, v in sorted(dep.undirected_edges, key=lambda e: (order[e[0]], order[e[1]])):
        edges.append(MixedEdge(len(edges), u, v, False, ci_by_pair[frozenset((u, v))]))
    return edges


def enumerate_semi_directed_cycles(
    net: TcpNet, cap: int = 10_000, work_cap: int = 2_000_000
) -> list[SemiDirectedCycle] | CapExceeded:
    """All semi-directed cycles of the dependency graph.

    Simple cycles of the underlying undirected multigraph are enumerated
    (parallel directed/undirected edges between one pair form length-2
    cycles) and filtered by the three defining clauses. Returns CapExceeded
    instead of a list when more than ``cap`` semi-directed cycles exist or
    the raw search walks more than ``work_cap`` steps; the caller decides
    how to proceed.
    """
    dep = dependency_graph(net)
    names = net.variable_names
    order = {n: i for i, n in enumerate(names)}
    edges = _mixed_edges(net, dep)
    incident: dict[str, list[tuple[MixedEdge, str]]] = {n: [] for n in names}
    in_nbrs: dict[str, set[str]] = {n: set() for n in names}
    out_nbrs: dict[str, set[str]] = {n: set() for n in names}
    und_nbrs: dict[str, set[str]] = {n: set() for n in names}
    for e in edges:
        incident[e.u].append((e, e.v))
        incident[e.v].append((e, e.u))
        if e.directed:
            out_nbrs[e.u].add(e.v)
            in_nbrs[e.v].add(e.u)
        else:
            und_nbrs[e.u].add(e.v)
            und_nbrs[e.v].add(e.u)
    for n in incident:
        incident[n].sort(key=lambda pair: (order[pair[1]], pair[0].eid))

    found: list[SemiDirectedCycle] = []
    state = {"steps": 0}

    class _WorkCap(Exception):
        pass

    class _CountCap(Exception):
        pass

    def accept(path: list[str], used: list[MixedEdge]) -> SemiDirectedCycle | None:
        # Canonical chirality: traverse toward the lower-indexed neighbor
        # first; parallel-edge 2-cycles tie-break on edge ids.
        if len(path) > 2:
            if order[path[1]] > order[path[-1]]:
                return None
        elif used[0].eid > used[-1].eid:
            return None
        directions = []
        for i, e in enumerate(used):
            if e.directed:
                directions.append(e.u == path[i])
        if directions and len(directions) == len(used):
            return None  # fully directed: not semi-directed
        if any(directions) and not all(directions):
            return None  # directed edges oppose each other
        vertices, chain = tuple(path), tuple(used)
        if directions and not directions[0]:
            # normalize so directed edges point forward along the traversal
            vertices = (path[0],) + tuple(reversed(path[1:]))
            chain = (used[-1],) + tuple(reversed(chain[:-1]))
        return SemiDirectedCycle(vertices, chain, bool(directions))

    def back_reachable(root: str, step_nbrs) -> set[str]:
        # Vertices (index >= root's) with a direction-respecting walk to root.
        rmin = order[root]
        allowed = {root}
        frontier = [root]
        while frontier:
            a = frontier.pop()
            for b in step_nbrs(a):
                if order[b] >= rmin and b not in allowed:
                    allowed.add(b)
                    frontier.append(b)
        return allowed

    FWD, BWD = 1, -1
    for root in names:
        # A path whose directed edges all point forward can only close if
        # every vertex it visits still has an all-forward continuation back
        # to the root (and symmetrically for backward); precomputing those
        # sets prunes the walk to near the useful paths.
        reach_fwd = back_reachable(root, lambda a: in_nbrs[a] | und_nbrs[a])
        reach_bwd = back_reachable(root, lambda a: out_nbrs[a] | und_nbrs[a])
        reach_any = reach_fwd | reach_bwd
        path = [root]
        used: list[MixedEdge] = []
        used_ids: set[int] = set()
        on_path = {root}

        def extend(direction: int | None):
            state["steps"] += 1
            if state["steps"] > work_cap:
                raise _WorkCap
            here = path[-1]
            for edge, other in incident[here]:
                if edge.eid in used_ids:
                    continue
                if edge.directed:
                    orientation = FWD if edge.u == here else BWD
                    if direction is not None and orientation != direction:
                        continue
                    extended = orientation
                else:
                    extended = direction
                if other == root:
                    if used:
                        cycle = accept(path, used + [edge])
                        if cycle is not None:
                            found.append(cycle)
                            if len(found) > cap:
                                raise _CountCap
                    continue
                if other in on_path or order[other] <= order[root]:
                    continue
                if extended == FWD:
                    if other not in reach_fwd:
                        continue
                elif extended == BWD:
                    if other not in reach_bwd:
                        continue
                elif other not in reach_any:
                    continue
                path.append(other)
                on_path.add(other)
                used.append(edge)
                used_ids.add(edge.eid)
                extend(extended)
                path.pop()
                on_path.discard(other)
                used.pop()
                used_ids.discard(edge.eid)

        try:
            extend(None)
        except _WorkCap:
            return CapExceeded(f"cycle search exceeded {work_cap} steps")
        except _CountCap:
            return CapExceeded(f"more than {cap} semi-directed cycles")

    found.sort(key=lambda c: (len(c), tuple(order[v] for v in c.vertices)))
    return found


# ---------------------------------------------------------------------------
# Per-cycle tests
# ---------------------------------------------------------------------------


class CycleCheck(Enum):
    CONDITIONALLY_DIRECTED = "conditionally-directed"
    MAYBE_ACYCLIC = "maybe-acyclic"
    ACYCLIC = "acyclic"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CycleVerdict:
    status: CycleCheck
    witness: dict[str, str] | None = None  # over the cycle's selector union
    forward: bool = True  # orientation of the witnessed directed cycle


def _achievable(cycle: SemiDirectedCycle, position: int, ci: CiTable, partial: Mapping[str, str]) -> set[bool]:
    """Which traversal directions the ci-arc at ``position`` can take under
    some extension of ``partial``: True = forward along the stored
    traversal. Empty when no CIT row is consistent (the arc stays unoriented
    and can never close the cycle)."""
    tail = cycle.tail(position)
    out: set[bool] = set()
    for key, winner in ci.rows.items():
        if all(partial.get(s, val) == val for s, val in zip(ci.selector, key)):
            out.add(winner == tail)
            if len(out) == 2:
                break
    return out


def cycle_check_necessary(cycle: SemiDirectedCycle) -> CycleCheck:
    """Structural screen: pairwise-disjoint selector sets mean the arcs can
    be oriented independently, so the cycle is conditionally directed
    (assuming the tables can orient each arc both ways). Overlapping
    selectors leave the question open."""
    selectors = [set(ci.selector) for _, ci in cycle.ci_members]
    for a, b in itertools.combinations(selectors, 2):
        if a & b:
            return CycleCheck.MAYBE_ACYCLIC
    return CycleCheck.CONDITIONALLY_DIRECTED


def cycle_check_sufficient(
    cycle: SemiDirectedCycle, net: TcpNet, pair_budget: int = 65_536
) -> CycleCheck:
    """Pairwise sufficient condition for conditional acyclicity.

    The cycle is acyclic if some pair of its ci-arcs with intersecting
    selectors can never be jointly oriented along one traversal direction:
    under every assignment to the intersection, at least one of the two is
    blocked from (a) the cycle direction, for cycles with directed edges,
    or (b) from agreeing with the other, for all-undirected cycles. A
    ci-arc with no consistent CIT row is blocked outright.
    """
    members = cycle.ci_members
    for (p1, g1), (p2, g2) in itertools.combinations(members, 2):
        inter = [s for s in g1.selector if s in set(g2.selector)]
        if not inter:
            continue
        domains = [net.domain(s) for s in inter]
        count = 1
        for d in domains:
            count *= len(d)
        if count > pair_budget:
            continue
        qualifies = True
        for combo in itertools.product(*domains):
            u = dict(zip(inter, combo))
            a1 = _achievable(cycle, p1, g1, u)
            a2 = _achievable(cycle, p2, g2, u)
            if cycle.has_directed:
                if True in a1 and True in a2:
                    qualifies = False
                    break
            else:
                if (True in a1 and True in a2) or (False in a1 and False in a2):
                    qualifies = False
                    break
        if qualifies:
            return CycleCheck.ACYCLIC
    return CycleCheck.INCONCLUSIVE


def _shared_variables(cycle: SemiDirectedCycle, net: TcpNet) -> list[str]:
    shared: set[str] = set()
    members = cycle.ci_members
    for (_, g1), (_, g2) in itertools.combinations(members, 2):
        shared |= set(g1.selector) & set(g2.selector)
    return [n for n in net.variable_names if n in shared]


def cycle_check_shared_exact(
    cycle: SemiDirectedCycle, net: TcpNet, budget: int = 65_536
) -> CycleVerdict:
    """Exact decision by enumerating assignments over the union of pairwise
    selector intersections.

    Outside those shared variables the selector sets are pairwise disjoint,
    so each arc's orientation can be fixed independently; the cycle closes
    under some full assignment iff for some shared assignment every arc can
    reach the cycle direction. Returns a witness assignment (covering the
    cycle's whole selector union) when conditionally directed.

    Raises BudgetExceeded when the shared space is larger than ``budget``.
    """
    shared = _shared_variables(cycle, net)
    domains = [net.domain(s) for s in shared]
    count = 1
    for d in domains:
        count *= len(d)
    if count > budget:
        raise BudgetExceeded(f"{count} shared-selector assignments exceed budget {budget}")

    members = cycle.ci_members
    directions = (True,) if cycle.has_directed else (True, False)
    for combo in itertools.product(*domains):
        u = dict(zip(shared, combo))
        for forward in directions:
            picks: list[dict[str, str]] = []
            for position, ci in members:
                row = _orienting_row(cycle, position, ci, u, forward)
                if row is None:
                    break
                picks.append(row)
            else:
                witness = dict(u)
                for row in picks:
                    witness.update(row)
                return CycleVerdict(CycleCheck.CONDITIONALLY_DIRECTED, witness, forward)
    return CycleVerdict(CycleCheck.ACYCLIC)


def _orienting_row(cycle, position, ci: CiTable, partial, forward: bool) -> dict[str, str] | None:
    tail = cycle.tail(position)
    for key in sorted(ci.rows):
        winner = ci.rows[key]
        if (winner == tail) != forward:
            continue
        if all(partial.get(s, val) == val for s, val in zip(ci.selector, key)):
            return dict(zip(ci.selector, key))
    return None


def cycle_check_sat(cycle: SemiDirectedCycle, net: TcpNet) -> CycleVerdict:
    """Exact decision by reduction to CNF satisfiability.

    Requires every selector variable on the cycle to be binary. One boolean
    per selector variable (true = first domain value); for each ci-arc,
    every selector assignment that fails to orient the arc along the target
    direction (wrong row or no row) contributes one clause forbidding that
    assignment. The formula is satisfiable iff some selector assignment
    closes the cycle. Width <= 2 instances go to the linear-time 2-SAT
    procedure, wider ones to a complete backtracking search. All-undirected
    cycles are tried in both orientations.
    """
    members = cycle.ci_members
    selector_vars = []
    seen = set()
    for _, ci in members:
        for s in ci.selector:
            if s not in seen:
                seen.add(s)
                selector_vars.append(s)
    selector_vars.sort(key=net.index_of)
    for s in selector_vars:
        if len(net.domain(s)) != 2:
            raise NonBinarySelector(f"selector variable {s!r} is not binary-valued")
    var_id = {s: i + 1 for i, s in enumerate(selector_vars)}

    def formula_for(forward: bool) -> "CnfFormula":
        clauses = []
        for position, ci in members:
            tail = cycle.tail(position)
            domains = [net.domain(s) for s in ci.selector]
            for key in itertools.product(*domains):
                winner = ci.rows.get(key)
                if winner is not None and (winner == tail) == forward:
                    continue
                clause = []
                for s, val in zip(ci.selector, key):
                    positive = val == net.domain(s)[0]
                    clause.append(-var_id[s] if positive else var_id[s])
                clauses.append(tuple(clause))
        return CnfFormula(len(selector_vars), tuple(clauses))

    directions = (True,) if cycle.has_directed else (True, False)
    for forward in directions:
        formula = formula_for(forward)
        model = two_sat_solve(formula) if formula.width <= 2 else solve_cnf(formula)
        if model is not None:
            witness = {
                s: net.domain(s)[0] if model[var_id[s]] else net.domain(s)[1]
                for s in selector_vars
            }
            return CycleVerdict(CycleCheck.CONDITIONALLY_DIRECTED, witness, forward)
    return CycleVerdict(CycleCheck.ACYCLIC)


# ---------------------------------------------------------------------------
# CNF machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range for {self.num_vars} variables")

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def evaluate(self, model: Mapping[int, bool]) -> bool:
        return all(
            any(model[abs(lit)] == (lit > 0) for lit in clause) for clause in self.clauses
        )


def two_sat_solve(formula: CnfFormula) -> dict[int, bool] | None:
    """Solve a clause-width <= 2 formula via the implication graph.

    Returns None when unsatisfiable, otherwise the deterministic model that
    assigns variables in index order preferring false: each variable is
    pinned to the first value that keeps the implication graph free of a
    literal sharing a strongly connected component with its negation.
    """
    if formula.width > 2:
        raise WidthExceeded(f"clause width {formula.width} exceeds 2")
    if any(not clause for clause in formula.clauses):
        return None
    clauses = list(formula.clauses)
    if not _two_sat_consistent(formula.num_vars, clauses):
        return None
    model: dict[int, bool] = {}
    for var in range(1, formula.num_vars + 1):
        for value in (False, True):
            trial = clauses + [(var if value else -var,)]
            if _two_sat_consistent(formula.num_vars, trial):
                clauses = trial
                model[var] = value
                break
    return model


def _two_sat_consistent(num_vars: int, clauses: list[tuple[int, ...]]) -> bool:
    # Literal l -> node 2*(|l|-1) (+1 when negated).
    def node(lit: int) -> int:
        return 2 * (abs(lit) - 1) + (1 if lit < 0 else 0)

    n = 2 * num_vars
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for clause in clauses:
        if len(clause) == 1:
            (a,) = clause
            adjacency[node(-a)].append(node(a))
        else:
            a, b = clause
            adjacency[node(-a)].append(node(b))
            adjacency[node(-b)].append(node(a))

    component = _tarjan_scc(n, adjacency)
    return all(component[2 * v] != component[2 * v + 1] for v in range(num_vars))


def _tarjan_scc(n: int, adjacency: list[list[int]]) -> list[int]:
    """Iterative Tarjan; returns a component id per node."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    comp_count = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, cursor = work[-1]
            if cursor == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            for i in range(cursor, len(adjacency[node])):
                succ = adjacency[node][i]
                if index[succ] == -1:
                    work[-1] = (node, i + 1)
                    work.append((succ, 0))
                    advanced = True
                    break
                if on_stack[succ]:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                while True:
                    member = stack.pop()
                    on_stack[member] = False
                    comp[member] = comp_count
                    if member == node:
                        break
                comp_count += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return comp


def solve_cnf(formula: CnfFormula) -> dict[int, bool] | None:
    """Complete backtracking search (unit propagation, lowest variable
    first, false before true). Intended for the small wide-clause formulas
    produced by cycle encodings."""

    def search(clauses: list[tuple[int, ...]], assignment: dict[int, bool]) -> dict[int, bool] | None:
        while True:
            unit = None
            remaining = []
            for clause in clauses:
                live = []
                satisfied = False
                for lit in clause:
                    value = assignment.get(abs(lit))
                    if value is None:
                        live.append(lit)
                    elif value == (lit > 0):
                        satisfied = True
                        break
                if satisfied:
                    continue
                if not live:
                    return None
                if len(live) == 1 and unit is None:
                    unit = live[0]
                remaining.append(tuple(live))
            if unit is None:
                clauses = remaining
                break
            assignment[abs(unit)] = unit > 0
        if not clauses:
            for var in range(1, formula.num_vars + 1):
                assignment.setdefault(var, False)
            return assignment
        var = min(abs(lit) for clause in clauses for lit in clause)
        for value in (False, True):
            child = dict(assignment)
            child[var] = value
            result = search(clauses, child)
            if result is not None:
                return result
        return None

    return search(list(formula.clauses), {})


# ---------------------------------------------------------------------------
# Layered decision procedure
# ---------------------------------------------------------------------------


class AcyclicityStatus(Enum):
    CONDITIONALLY_ACYCLIC = "conditionally-acyclic"
    CONDITIONALLY_CYCLIC = "conditionally-cyclic"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CyclicityWitness:
    """A selector assignment plus the directed cycle it induces."""

    assignment: Mapping[str, str]
    cycle: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class AcyclicityVerdict:
    status: AcyclicityStatus
    method: str
    witness: CyclicityWitness | None = None
    note: str = ""


@dataclass(frozen=True)
class AcyclicityPolicy:
    """Strategy knobs for :func:`check_conditional_acyclicity`.

    ``method`` selects the pipeline: "auto" runs everything with fallback,
    "brute" only exhausts selector assignments, "cycles" decides each
    semi-directed cycle without the exhaustive fallback, and "sat" forces
    the CNF route per cycle (Unknown on non-binary selectors).
    """

    method: str = "auto"
    cycle_cap: int = 10_000
    work_cap: int = 2_000_000
    shared_budget: int = 65_536
    fallback_budget: int = 65_536  # max selector assignments to enumerate
    pair_budget: int = 65_536


def verify_witness(net: TcpNet, witness: CyclicityWitness) -> bool:
    """Re-check a cyclicity witness from scratch: its assignment's
    w-directed graph must contain the reported cycle."""
    try:
        graph = w_directed_graph(net, witness.assignment)
    except TcpNetError:
        return False
    cycle = witness.cycle
    if not cycle:
        return False
    vertices = [u for u, _ in cycle]
    if len(set(vertices)) != len(vertices):
        return False
    for i, (u, v) in enumerate(cycle):
        if (u, v) not in graph.directed_edges:
            return False
        if v != cycle[(i + 1) % len(cycle)][0]:
            return False
    return True


def _canonical_selector_assignment(net: TcpNet) -> dict[str, str]:
    return {s: net.domain(s)[0] for s in net.selector_union}


def check_conditional_acyclicity(
    net: TcpNet, policy: AcyclicityPolicy | None = None
) -> AcyclicityVerdict:
    """Layered decision of conditional acyclicity. Never raises on valid
    nets; Unknown is an honest outcome when budgets run out. Every
    ConditionallyCyclic verdict carries a witness that re-verifies."""
    policy = policy or AcyclicityPolicy()
    if policy.method not in ("auto", "brute", "cycles", "sat"):
        raise ValueError(f"unknown method {policy.method!r}")
    dep = dependency_graph(net)
    order = {n: i for i, n in enumerate(net.variable_names)}

    hard_cycle = _find_directed_cycle(net.variable_names, dep.directed_edges, order)
    if hard_cycle is not None:
        k = len(hard_cycle)
        witness = CyclicityWitness(
            _canonical_selector_assignment(net),
            tuple((hard_cycle[i], hard_cycle[(i + 1) % k]) for i in range(k)),
        )
        return _cyclic(net, witness, "directed-cycle")

    if policy.method == "brute":
        return _exhaustive(net, policy, "brute")

    if not net.ci_arcs:
        return AcyclicityVerdict(AcyclicityStatus.CONDITIONALLY_ACYCLIC, "no-ci-arcs")
    if _underlying_is_forest(dep):
        return AcyclicityVerdict(AcyclicityStatus.CONDITIONALLY_ACYCLIC, "forest")

    cycles = enumerate_semi_directed_cycles(net, policy.cycle_cap, policy.work_cap)
    if isinstance(cycles, CapExceeded):
        if policy.method == "auto":
            return _exhaustive(net, policy, "exhaustive", note=cycles.reason)
        return AcyclicityVerdict(AcyclicityStatus.UNKNOWN, policy.method, note=cycles.reason)
    if not cycles:
        return AcyclicityVerdict(
            AcyclicityStatus.CONDITIONALLY_ACYCLIC, "no-semi-directed-cycles"
        )

    undecided_note = ""
    for cycle in cycles:
        verdict, how = _decide_cycle(cycle, net, policy)
        if verdict is None:
            undecided_note = how
            break
        if verdict.status is CycleCheck.CONDITIONALLY_DIRECTED:
            assignment = _canonical_selector_assignment(net)
            assignment.update(verdict.witness or {})
            witness = CyclicityWitness(assignment, cycle.directed_cycle(verdict.forward))
            return _cyclic(net, witness, f"cycles/{how}")
    else:
        return AcyclicityVerdict(AcyclicityStatus.CONDITIONALLY_ACYCLIC, "cycles")

    if policy.method == "auto":
        return _exhaustive(net, policy, "exhaustive", note=undecided_note)
    return AcyclicityVerdict(AcyclicityStatus.UNKNOWN, policy.method, note=undecided_note)


def _decide_cycle(
    cycle: SemiDirectedCycle, net: TcpNet, policy: AcyclicityPolicy
) -> tuple[CycleVerdict | None, str]:
    screen = cycle_check_necessary(cycle)
    if screen is CycleCheck.MAYBE_ACYCLIC:
        if cycle_check_sufficient(cycle, net, policy.pair_budget) is CycleCheck.ACYCLIC:
            return CycleVerdict(CycleCheck.ACYCLIC), "sufficient"
    binary = all(
        len(net.domain(s)) == 2 for _, ci in cycle.ci_members for s in ci.selector
    )
    if binary:
        return cycle_check_sat(cycle, net), "sat"
    if policy.method == "sat":
        return None, "non-binary selector on cycle"
    try:
        return cycle_check_shared_exact(cycle, net, policy.shared_budget), "shared-exact"
    except BudgetExceeded as exc:
        return None, str(exc)


def _cyclic(net: TcpNet, witness: CyclicityWitness, method: str) -> AcyclicityVerdict:
    if not verify_witness(net, witness):
        raise AssertionError(f"internal error: {method} produced a non-verifying witness")
    return AcyclicityVerdict(AcyclicityStatus.CONDITIONALLY_CYCLIC, method, witness)


def _underlying_is_forest(dep: DependencyGraph) -> bool:
    # Multigraph forest test: a parallel directed/undirected pair already
    # forms a cycle, so count edges rather than neighbor pairs.
    edge_count = len(dep.directed_edges) + len(dep.undirected_edges)
    neighbors: dict[str, set[str]] = {n: set() for n in dep.nodes}
    for u, v in dep.directed_edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    for u, v in dep.undirected_edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    seen: set[str] = set()
    components = 0
    for start in dep.nodes:
        if start in seen:
            continue
        components += 1
        frontier = [start]
        seen.add(start)
        while frontier:
            here = frontier.pop()
            for other in neighbors[here]:
                if other not in seen:
                    seen.add(other)
                    frontier.append(other)
    return edge_count == len(dep.nodes) - components


def _exhaustive(
    net: TcpNet, policy: AcyclicityPolicy, method: str, note: str = ""
) -> AcyclicityVerdict:
    selectors = net.selector_union
    domains = [net.domain(s) for s in selectors]
    total = 1
    for d in domains:
        total *= len(d)
    if total > policy.fallback_budget:
        return AcyclicityVerdict(
            AcyclicityStatus.UNKNOWN,
            method,
            note=f"{total} selector assignments exceed budget {policy.fallback_budget}",
        )
    order = {n: i for i, n in enumerate(net.variable_names)}
    for combo in itertools.product(*domains):
        w = dict(zip(selectors, combo))
        graph = w_directed_graph(net, w)
        cycle = _find_directed_cycle(net.variable_names, graph.directed_edges, order)
        if cycle is not None:
            k = len(cycle)
            witness = CyclicityWitness(
                w, tuple((cycle[i], cycle[(i + 1) % k]) for i in range(k))
            )
            return _cyclic(net, witness, method)
    return AcyclicityVerdict(AcyclicityStatus.CONDITIONALLY_ACYCLIC, method, note=note)


# ---------------------------------------------------------------------------
# CNF-to-net gadget factories
# ---------------------------------------------------------------------------


def gadget_from_cnf(formula: CnfFormula, variant: str = "multi-cycle") -> TcpNet:
    """Build a TCP-net whose dependency graph has a conditionally directed
    cycle iff ``formula`` is satisfiable.

    Two constructions are available as adversarial test factories:

    * "multi-cycle": one subnet per clause (clauses padded to width 3);
      every choice of one literal per clause yields a semi-directed cycle,
      so the count grows as 3^clauses.
    * "one-cycle": a single ring of clause variables whose ci-arcs are
      conditioned on the clause's variables (width <= 3), oriented along
      the ring exactly when the clause is satisfied.

    Single-clause formulas are padded with a duplicate clause: the ring
    needs at least two links to avoid a doubled edge on one pair.
    """
    if variant not in ("multi-cycle", "one-cycle"):
        raise ValueError(f"unknown gadget variant {variant!r}")
    if formula.width > 3:
        raise WidthExceeded(f"clause width {formula.width} exceeds 3")
    if any(not clause for clause in formula.clauses):
        raise ValueError("empty clauses cannot be encoded")
    clauses = list(formula.clauses)
    if len(clauses) == 1:
        clauses.append(clauses[0])

    binary = ("t", "f")
    variables: list[tuple[str, tuple[str, str]]] = [
        (f"x{i}", binary) for i in range(1, formula.num_vars + 1)
    ]
    n = len(clauses)

    if variant == "multi-cycle":
        for j in range(1, n + 1):
            variables.append((f"c{j}", binary))
            for k in (1, 2, 3):
                variables.append((f"l{j}_{k}", binary))
        i_arcs = []
        ci_arcs = []
        for j, clause in enumerate(clauses, start=1):
            padded = list(clause) + [clause[-1]] * (3 - len(clause))
            succ = f"c{(j % n) + 1}"
            for k, lit in enumerate(padded, start=1):
                lname = f"l{j}_{k}"
                i_arcs.append((f"c{j}", lname))
                if lit > 0:
                    rows = {("t",): lname, ("f",): succ}
                else:
                    rows = {("t",): succ, ("f",): lname}
                ci_arcs.append(((lname, succ), (f"x{abs(lit)}",), rows))
        cpts = {name: {(): [("t", "f")]} for name, _ in variables}
        return make_net(variables, i_arcs=i_arcs, ci_arcs=ci_arcs, cpts=cpts)

    variables.append(("c0", binary))
    for j in range(1, n + 1):
        variables.append((f"c{j}", binary))
    ci_arcs = []
    for j, clause in enumerate(clauses, start=1):
        succ = f"c{j + 1}" if j < n else "c0"
        selector_vars = sorted({abs(lit) for lit in clause})
        selector = tuple(f"x{v}" for v in selector_vars)
        rows = {}
        for combo in itertools.product(binary, repeat=len(selector_vars)):
            truth = dict(zip(selector_vars, (v == "t" for v in combo)))
            satisfied = any(truth[abs(lit)] == (lit > 0) for lit in clause)
            rows[combo] = f"c{j}" if satisfied else succ
        ci_arcs.append(((f"c{j}", succ), selector, rows))
    cpts = {name: {(): [("t", "f")]} for name, _ in variables}
    return make_net(variables, i_arcs=[("c0", "c1")], ci_arcs=ci_arcs, cpts=cpts)
