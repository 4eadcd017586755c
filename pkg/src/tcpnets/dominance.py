"""Dominance queries: does the net entail one outcome over another?

Entailment holds exactly when an improving flipping sequence leads from the
worse outcome to the better one, so the query is a reachability search over
improving flips. The search is breadth-first with a visited set: complete
on finite outcome spaces, and the certificate it returns is a shortest
sequence, which doubles as a human-readable explanation. Dominance testing
is NP-hard in general, so a node budget caps the search; hitting it yields
an explicit Unknown, never a guess.
"""

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .model import Assignment, TcpNet, require_outcome
from .semantics import FlipLabel, _index


@dataclass(frozen=True)
class FlippingSequence:
    """Chain of outcomes from purported-worse to purported-better, each
    step a single sanctioned improving flip."""

    outcomes: tuple[dict, ...]
    labels: tuple[FlipLabel, ...]

    def __len__(self) -> int:
        return len(self.labels)


class DominanceStatus(Enum):
    DOMINATES = "dominates"
    NOT_DOMINATED = "not-dominated"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class DominanceVerdict:
    status: DominanceStatus
    certificate: FlippingSequence | None = None
    expanded: int = 0


DEFAULT_BUDGET = 1_000_000


def dominates(
    net: TcpNet,
    better: Assignment,
    worse: Assignment,
    budget: int | None = DEFAULT_BUDGET,
) -> DominanceVerdict:
    """Search for an improving flipping sequence from ``worse`` to ``better``.

    Returns Dominates with a shortest certificate, NotDominated when the
    reachable set is exhausted first, or Unknown when more than ``budget``
    outcomes were expanded (budget=None searches without limit). Equal
    outcomes short-circuit to NotDominated: entailment is irreflexive.
    """
    idx = _index(net)
    target = idx.node(require_outcome(net, better))
    source = idx.node(require_outcome(net, worse))
    if target == source:
        return DominanceVerdict(DominanceStatus.NOT_DOMINATED)

    parent: dict[tuple, tuple] = {source: None}
    via: dict[tuple, FlipLabel] = {}
    queue = deque([source])
    expanded = 0
    while queue:
        if budget is not None and expanded >= budget:
            return DominanceVerdict(DominanceStatus.UNKNOWN, expanded=expanded)
        node = queue.popleft()
        expanded += 1
        for succ, label in idx.successors(node):
            if succ in parent:
                continue
            parent[succ] = node
            via[succ] = label
            if succ == target:
                return DominanceVerdict(
                    DominanceStatus.DOMINATES,
                    _extract(idx, parent, via, succ),
                    expanded,
                )
            queue.append(succ)
    return DominanceVerdict(DominanceStatus.NOT_DOMINATED, expanded=expanded)


def _extract(idx, parent, via, end) -> FlippingSequence:
    nodes = [end]
    labels = []
    while parent[nodes[-1]] is not None:
        labels.append(via[nodes[-1]])
        nodes.append(parent[nodes[-1]])
    nodes.reverse()
    labels.reverse()
    return FlippingSequence(tuple(idx.outcome(n) for n in nodes), tuple(labels))


def verify_sequence(net: TcpNet, sequence: FlippingSequence) -> bool:
    """Re-check a certificate step by step: every (outcome, label) pair
    must be produced by the predecessor's improving successors."""
    if not sequence.outcomes:
        return False
    if len(sequence.labels) != len(sequence.outcomes) - 1:
        return False
    idx = _index(net)
    try:
        nodes = [idx.node(require_outcome(net, o)) for o in sequence.outcomes]
    except Exception:
        return False
    for here, nxt, label in zip(nodes, nodes[1:], sequence.labels):
        if (nxt, label) not in idx.successors(here):
            return False
    return True
