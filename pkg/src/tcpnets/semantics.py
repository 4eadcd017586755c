"""Ground-truth satisfaction semantics over the full outcome space.

Everything here enumerates outcomes, so it only scales to desk-size nets
(the default cap is 2**20 outcomes). That is deliberate: this module is the
oracle the rest of the engine is checked against, and dominance testing is
NP-hard in general, so the exhaustive route is the trustworthy one.

The induced flip graph has one node per outcome and an edge from each
outcome to every outcome reachable by a single sanctioned improvement:

* CP-flip: exactly one variable changes, to a value strictly better in its
  CPT row under the (unchanged) parent values.
* I-flip: exactly two variables change; one strictly improves, the other
  strictly worsens, their parents keep their values, and the improving
  variable is more important, either via an i-arc or via the CIT row of a
  ci-arc selected by the outcome.

Edges run worse -> better, so directed reachability is exactly preferential
entailment of the better outcome over the worse one.
"""

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence
from weakref import WeakKeyDictionary

from .model import (
    Assignment,
    IncompleteOrder,
    TcpNet,
    TooLarge,
    require_outcome,
)

DEFAULT_OUTCOME_CAP = 2**20

Node = tuple[str, ...]


@dataclass(frozen=True)
class CpFlip:
    variable: str
    worse: str
    better: str


@dataclass(frozen=True)
class IFlip:
    improved: str
    improved_from: str
    improved_to: str
    worsened: str
    worsened_from: str
    worsened_to: str
    arc: tuple[str, ...]  # ("i", x, y) or ("ci", x, y)


FlipLabel = CpFlip | IFlip


class _NetIndex:
    """Per-net lookup structures for fast flip generation."""

    def __init__(self, net: TcpNet):
        self.net = net
        self.names = net.variable_names
        self.positions = {n: i for i, n in enumerate(self.names)}
        self.domains = [net.domain(n) for n in self.names]

        # Per variable: parent positions plus, per CPT row, maps from a value
        # to the tuples of strictly better / strictly worse values.
        self.parent_pos: list[tuple[int, ...]] = []
        self.row_maps: list[dict[tuple[str, ...], tuple[dict, dict]]] = []
        for i, name in enumerate(self.names):
            table = net.cpts[name]
            self.parent_pos.append(tuple(self.positions[p] for p in table.parents))
            rows = {}
            for key, order in table.rows.items():
                better = {v: tuple(a for a in self.domains[i] if (a, v) in order) for v in self.domains[i]}
                worse = {v: tuple(b for b in self.domains[i] if (v, b) in order) for v in self.domains[i]}
                rows[key] = (better, worse)
            self.row_maps.append(rows)

        cp_pairs = {frozenset(arc) for arc in net.cp_arcs}
        # Unconditional importance pairs, minus those whose endpoints are
        # linked by a cp-arc: changing a parent changes the child's context,
        # so no flip can hold both parents fixed.
        self.i_pairs = [
            (self.positions[x], self.positions[y], ("i", x, y))
            for x, y in sorted(net.i_arcs, key=lambda a: (net.index_of(a[0]), net.index_of(a[1])))
            if frozenset((x, y)) not in cp_pairs
        ]
        self.ci_entries = []
        for ci in net.ci_arcs:
            x, y = ci.endpoints
            selector_pos = tuple(self.positions[s] for s in ci.selector)
            self.ci_entries.append(
                (self.positions[x], self.positions[y], ("ci", x, y), selector_pos, ci.rows)
            )

    def node(self, outcome: Assignment) -> Node:
        return tuple(outcome[n] for n in self.names)

    def outcome(self, node: Node) -> dict[str, str]:
        return dict(zip(self.names, node))

    def row(self, var: int, node: Node) -> tuple[dict, dict]:
        key = tuple(node[p] for p in self.parent_pos[var])
        return self.row_maps[var].get(key, (_EMPTY, _EMPTY))

    def successors(self, node: Node) -> list[tuple[Node, FlipLabel]]:
        out: list[tuple[Node, FlipLabel]] = []
        for i, name in enumerate(self.names):
            better, _ = self.row(i, node)
            current = node[i]
            for v in better.get(current, ()):
                succ = node[:i] + (v,) + node[i + 1 :]
                out.append((succ, CpFlip(name, current, v)))

        directed: list[tuple[int, int, tuple[str, ...]]] = list(self.i_pairs)
        for xi, yi, arc, selector_pos, rows in self.ci_entries:
            winner = rows.get(tuple(node[p] for p in selector_pos))
            if winner is None:
                continue
            if winner == arc[1]:
                directed.append((xi, yi, arc))
            else:
                directed.append((yi, xi, arc))

        directed.sort(key=lambda entry: (entry[0], entry[1]))
        for up, down, arc in directed:
            up_better, _ = self.row(up, node)
            _, down_worse = self.row(down, node)
            gains = up_better.get(node[up], ())
            losses = down_worse.get(node[down], ())
            for gain in gains:
                for loss in losses:
                    succ = list(node)
                    succ[up] = gain
                    succ[down] = loss
                    out.append(
                        (
                            tuple(succ),
                            IFlip(
                                self.names[up], node[up], gain,
                                self.names[down], node[down], loss,
                                arc,
                            ),
                        )
                    )
        return out


_EMPTY: dict = {}
_INDEX_CACHE: "WeakKeyDictionary[TcpNet, _NetIndex]" = WeakKeyDictionary()


def _index(net: TcpNet) -> _NetIndex:
    idx = _INDEX_CACHE.get(net)
    if idx is None:
        idx = _NetIndex(net)
        _INDEX_CACHE[net] = idx
    return idx


def improving_successors(net: TcpNet, outcome: Assignment) -> list[tuple[dict[str, str], FlipLabel]]:
    """All outcomes one sanctioned improving flip away from ``outcome``.

    Raises IncompleteOutcome when ``outcome`` leaves variables unbound.
    The result is deterministic: CP-flips in variable declaration order,
    then I-flips ordered by (improved, worsened) variable positions.
    """
    idx = _index(net)
    node = idx.node(require_outcome(net, outcome))
    return [(idx.outcome(succ), label) for succ, label in idx.successors(node)]


class FlipGraph:
    """The complete improvement graph over a net's outcome space.

    Nodes are outcomes (value tuples in variable declaration order); edges
    point from the less preferred outcome to the more preferred one.
    """

    def __init__(self, net: TcpNet, cap: int = DEFAULT_OUTCOME_CAP):
        count = net.outcome_count()
        if count > cap:
            raise TooLarge(f"outcome space of size {count} exceeds cap {cap}")
        self._idx = _index(net)
        self.net = net
        self.nodes: tuple[Node, ...] = tuple(itertools.product(*self._idx.domains))
        self.adjacency: dict[Node, tuple[tuple[Node, FlipLabel], ...]] = {
            node: tuple(self._idx.successors(node)) for node in self.nodes
        }
        self._reach_cache: dict[Node, frozenset[Node]] = {}

    @property
    def edge_count(self) -> int:
        return sum(len(v) for v in self.adjacency.values())

    def node(self, outcome: Assignment) -> Node:
        return self._idx.node(require_outcome(self.net, outcome))

    def outcome(self, node: Node) -> dict[str, str]:
        return self._idx.outcome(node)

    def edges(self) -> Iterable[tuple[dict, dict, FlipLabel]]:
        for src in self.nodes:
            for dst, label in self.adjacency[src]:
                yield self.outcome(src), self.outcome(dst), label

    def reachable(self, source: Node) -> frozenset[Node]:
        cached = self._reach_cache.get(source)
        if cached is not None:
            return cached
        seen = {source}
        frontier = [source]
        while frontier:
            here = frontier.pop()
            for nxt, _ in self.adjacency[here]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        seen.discard(source)
        result = frozenset(seen)
        self._reach_cache[source] = result
        return result

    def entails(self, better: Assignment, worse: Assignment) -> bool:
        return self.node(better) in self.reachable(self.node(worse))

    def has_cycle(self) -> bool:
        # Iterative three-color DFS over the whole graph.
        WHITE, GRAY, BLACK = 0, 1, 2
        color = dict.fromkeys(self.nodes, WHITE)
        for start in self.nodes:
            if color[start] != WHITE:
                continue
            stack: list[tuple[Node, int]] = [(start, 0)]
            color[start] = GRAY
            while stack:
                node, cursor = stack[-1]
                succs = self.adjacency[node]
                if cursor < len(succs):
                    stack[-1] = (node, cursor + 1)
                    nxt = succs[cursor][0]
                    if color[nxt] == GRAY:
                        return True
                    if color[nxt] == WHITE:
                        color[nxt] = GRAY
                        stack.append((nxt, 0))
                else:
                    color[node] = BLACK
                    stack.pop()
        return False

    def nondominated(self, feasible: Iterable[Assignment]) -> list[dict[str, str]]:
        members = [self.node(o) for o in feasible]
        member_set = set(members)
        kept = []
        for node in members:
            others = member_set - {node}
            if not (self.reachable(node) & others):
                kept.append(node)
        kept.sort()
        return [self.outcome(n) for n in kept]


_GRAPH_CACHE: "WeakKeyDictionary[TcpNet, FlipGraph]" = WeakKeyDictionary()


def build_flip_graph(net: TcpNet, cap: int = DEFAULT_OUTCOME_CAP) -> FlipGraph:
    """Materialize the flip graph; raises TooLarge above ``cap`` outcomes."""
    cached = _GRAPH_CACHE.get(net)
    if cached is not None and len(cached.nodes) <= cap:
        return cached
    graph = FlipGraph(net, cap)
    _GRAPH_CACHE[net] = graph
    return graph


def oracle_entails(
    net: TcpNet, better: Assignment, worse: Assignment, cap: int = DEFAULT_OUTCOME_CAP
) -> bool:
    """Exhaustive entailment: is ``better`` reachable from ``worse`` by
    improving flips? The reference answer for dominance queries."""
    return build_flip_graph(net, cap).entails(better, worse)


def flip_graph_has_cycle(net: TcpNet, cap: int = DEFAULT_OUTCOME_CAP) -> bool:
    """True iff the flip graph contains a directed cycle.

    A cycle means no strict partial order can satisfy the net, i.e. the
    net is unsatisfiable.
    """
    return build_flip_graph(net, cap).has_cycle()


def oracle_nondominated(
    net: TcpNet, feasible: Iterable[Assignment], cap: int = DEFAULT_OUTCOME_CAP
) -> list[dict[str, str]]:
    """Members of ``feasible`` that no other feasible outcome is entailed
    to beat. Dominance is judged against the whole net's entailment; only
    membership is restricted to the feasible set."""
    return build_flip_graph(net, cap).nondominated(feasible)


def order_satisfies(net: TcpNet, order: Sequence[Assignment], cap: int = DEFAULT_OUTCOME_CAP) -> bool:
    """Check a best-first total order over all outcomes against the net.

    The order must rank every outcome exactly once (IncompleteOrder
    otherwise). It satisfies the net when it respects every CPT row, every
    i-arc, and every CIT row:

    * CPT: flipping one variable to a row-better value moves up the order.
    * i-arc X>Y: with everything but X and Y fixed, any row-improvement in
      X outranks any change in Y whatsoever.
    * CIT row z -> X: same as an i-arc, restricted to contexts where the
      selector carries z.
    """
    count = net.outcome_count()
    if count > cap:
        raise TooLarge(f"outcome space of size {count} exceeds cap {cap}")
    idx = _index(net)
    rank: dict[Node, int] = {}
    for position, outcome in enumerate(order):
        node = idx.node(require_outcome(net, outcome))
        if node in rank:
            raise IncompleteOrder(f"outcome ranked twice: {outcome}")
        rank[node] = position
    if len(rank) != count:
        raise IncompleteOrder(f"order ranks {len(rank)} of {count} outcomes")

    # CPT rows: every single-variable improvement must move up.
    for node in rank:
        for i in range(len(idx.names)):
            better, _ = idx.row(i, node)
            for v in better.get(node[i], ()):
                succ = node[:i] + (v,) + node[i + 1 :]
                if rank[succ] >= rank[node]:
                    return False

    for x, y in net.i_arcs:
        if not _importance_respected(net, idx, rank, x, y, fixed={}):
            return False
    for ci in net.ci_arcs:
        for key, winner in ci.rows.items():
            fixed = dict(zip(ci.selector, key))
            loser = ci.other(winner)
            if not _importance_respected(net, idx, rank, winner, loser, fixed=fixed):
                return False
    return True


def _importance_respected(net, idx, rank, x: str, y: str, fixed: Mapping[str, str]) -> bool:
    """Does the ranked order satisfy "x more important than y" on every
    context extending ``fixed``? Contexts where x's CPT row is empty
    constrain nothing."""
    xi, yi = idx.positions[x], idx.positions[y]
    free = [i for i, n in enumerate(idx.names) if n not in (x, y) and n not in fixed]
    fixed_vals = {idx.positions[n]: v for n, v in fixed.items()}
    x_domain, y_domain = idx.domains[xi], idx.domains[yi]

    template: list[str | None] = [None] * len(idx.names)
    for pos, val in fixed_vals.items():
        template[pos] = val

    for combo in itertools.product(*(idx.domains[i] for i in free)):
        ctx = list(template)
        for pos, val in zip(free, combo):
            ctx[pos] = val
        probe = list(ctx)
        probe[xi] = x_domain[0]
        probe[yi] = y_domain[0]
        better, _ = idx.row(xi, tuple(probe))
        for x_lo in x_domain:
            for x_hi in better.get(x_lo, ()):
                for y_a in y_domain:
                    for y_b in y_domain:
                        hi = list(ctx)
                        hi[xi], hi[yi] = x_hi, y_a
                        lo = list(ctx)
                        lo[xi], lo[yi] = x_lo, y_b
                        if rank[tuple(hi)] >= rank[tuple(lo)]:
                            return False
    return True
