import itertools
import random

import pytest

from tcpnets import (
    ConstraintStore,
    Entailment,
    HardConstraint,
    NoRoot,
    TooLarge,
    build_flip_graph,
    components,
    construct_satisfying_order,
    find_root,
    forward_sweep,
    linear_extension,
    make_net,
    oracle_entails,
    oracle_nondominated,
    order_satisfies,
    search_tcp,
    store_entailed_by,
    strengthen,
)

import generators
from conftest import ed

NO_BLACK_JACKET = [HardConstraint.make(["J"], [["w"]])]
MATCHING_FABRIC = [HardConstraint.make(["J", "P"], [["b", "w"], ["w", "b"]])]


def outcomes_equal(solutions, expected):
    as_sets = {tuple(sorted(o.items())) for o in solutions}
    return as_sets == {tuple(sorted(o.items())) for o in expected}


# ---------------------------------------------------------------------------
# roots and sweeps
# ---------------------------------------------------------------------------


def test_find_root_examples(evening_net, flight_net, abc_net):
    assert find_root(flight_net) == "D"
    assert find_root(evening_net) == "J"
    with pytest.raises(NoRoot):
        find_root(abc_net)


def test_forward_sweep_examples(evening_net, flight_net):
    assert forward_sweep(evening_net) == ed("b", "b", "r")
    assert forward_sweep(evening_net, {"J": "w"}) == ed("w", "b", "w")
    assert forward_sweep(flight_net) == {
        "D": "1d", "T": "m", "A": "ba", "S": "1s", "C": "b",
    }


def test_forward_sweep_requires_cp_dag():
    net = make_net(
        [("A", ["0", "1"]), ("B", ["0", "1"])],
        cp_arcs=[("A", "B"), ("B", "A")],
        cpts={
            "A": {"0": ["0", "1"], "1": ["1", "0"]},
            "B": {"0": ["0", "1"], "1": ["1", "0"]},
        },
    )
    with pytest.raises(NoRoot):
        forward_sweep(net)


def test_forward_sweep_never_dominated_within_completions():
    rng = random.Random(61)
    for _ in range(12):
        net = generators.random_conditionally_acyclic_net(rng, 5)
        fixed_vars = rng.sample(net.variable_names, rng.randint(0, 2))
        fixed = {n: rng.choice(net.domain(n)) for n in fixed_vars}
        best = forward_sweep(net, fixed)
        free = [n for n in net.variable_names if n not in fixed]
        for combo in itertools.product(*(net.domain(n) for n in free)):
            other = {**fixed, **dict(zip(free, combo))}
            assert not oracle_entails(net, other, best) or other == best


def test_linear_extension_tie_break():
    assert linear_extension(("a", "b", "c"), frozenset({("c", "b")})) == ["a", "c", "b"]
    assert linear_extension(("a", "b"), frozenset()) == ["a", "b"]


# ---------------------------------------------------------------------------
# constraint store
# ---------------------------------------------------------------------------


def test_strengthen_propagates_to_singleton(evening_net):
    store = ConstraintStore.initial(evening_net, MATCHING_FABRIC)
    result = strengthen(store, "J", "b")
    assert result is not None
    new_store, induced = result
    assert induced == {"J": "b", "P": "w"}
    assert new_store.domains["P"] == ("w",)


def test_strengthen_with_empty_constraint_is_inconsistent(evening_net):
    store = ConstraintStore.initial(
        evening_net, [HardConstraint.make(["J", "P"], [])]
    )
    assert strengthen(store, "J", "b") is None


def test_strengthen_without_constraints(evening_net):
    store = ConstraintStore.initial(evening_net, [])
    new_store, induced = strengthen(store, "J", "b")
    assert induced == {"J": "b"}
    assert new_store.domains["P"] == ("b", "w")


def test_strengthen_chained_propagation():
    net = make_net(
        [("A", ["0", "1"]), ("B", ["0", "1"]), ("C", ["0", "1"])],
        cpts={n: {(): ["0", "1"]} for n in "ABC"},
    )
    constraints = [
        HardConstraint.make(["A", "B"], [["0", "0"], ["1", "1"]]),
        HardConstraint.make(["B", "C"], [["0", "1"], ["1", "0"]]),
    ]
    store = ConstraintStore.initial(net, constraints)
    _, induced = strengthen(store, "A", "0")
    assert induced == {"A": "0", "B": "0", "C": "1"}


def test_store_entailment_examples(evening_net):
    store = ConstraintStore.initial(evening_net, [])
    after_w, _ = strengthen(store, "J", "w")
    after_w_b, _ = strengthen(after_w, "P", "b")
    after_b, _ = strengthen(store, "J", "b")

    assert store_entailed_by(after_w_b, after_w) is Entailment.YES
    assert store_entailed_by(after_b, after_w) is Entailment.NO
    # conservative path: tiny budget forces the domain test, which cannot
    # decide incomparable stores
    assert store_entailed_by(after_b, after_w, budget=0) is Entailment.UNDECIDED


def test_store_entailment_resolved_by_enumeration_only():
    net = make_net(
        [("J", ["b", "w"]), ("P", ["b", "w"])],
        cpts={"J": {(): ["b", "w"]}, "P": {(): ["b", "w"]}},
    )
    pair = [HardConstraint.make(["J", "P"], [["b", "w"]])]
    inner = ConstraintStore(tuple(pair), {"J": ("b", "w"), "P": ("w",)}, {"P": "w"})
    outer = ConstraintStore(tuple(pair), {"J": ("b",), "P": ("b", "w")}, {"J": "b"})
    assert store_entailed_by(inner, outer) is Entailment.YES
    assert store_entailed_by(inner, outer, budget=0) is Entailment.UNDECIDED


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------


def test_components_after_commitment(evening_net):
    store = ConstraintStore.initial(evening_net, [])
    store, _ = strengthen(store, "J", "b")
    store, _ = strengthen(store, "P", "b")
    assert components(evening_net, store) == [("S",)]


def test_components_split_without_links():
    net = make_net(
        [("A", ["0", "1"]), ("B", ["0", "1"]), ("C", ["0", "1"]), ("D", ["0", "1"])],
        cp_arcs=[("A", "B"), ("C", "D")],
        cpts={
            "A": {(): ["0", "1"]},
            "B": {"0": ["0", "1"], "1": ["1", "0"]},
            "C": {(): ["0", "1"]},
            "D": {"0": ["0", "1"], "1": ["1", "0"]},
        },
    )
    store = ConstraintStore.initial(net, [])
    assert components(net, store) == [("A", "B"), ("C", "D")]


def test_components_joined_by_constraint():
    net = make_net(
        [("A", ["0", "1"]), ("B", ["0", "1"])],
        cpts={"A": {(): ["0", "1"]}, "B": {(): ["0", "1"]}},
    )
    store = ConstraintStore.initial(net, [HardConstraint.make(["A", "B"], [["0", "1"]])])
    assert components(net, store) == [("A", "B")]


def test_components_keep_selector_with_endpoints():
    net = make_net(
        [("Z", ["0", "1"]), ("X", ["0", "1"]), ("Y", ["0", "1"])],
        ci_arcs=[(("X", "Y"), ("Z",), {("0",): "X", ("1",): "Y"})],
        cpts={n: {(): ["0", "1"]} for n in "ZXY"},
    )
    store = ConstraintStore.initial(net, [])
    assert components(net, store) == [("Z", "X", "Y")]


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


def test_solve_no_black_jacket(evening_net):
    result = search_tcp(evening_net, NO_BLACK_JACKET, mode="all")
    assert list(result) == [ed("w", "b", "w")]


def test_solve_matching_fabric(evening_net):
    first = search_tcp(evening_net, MATCHING_FABRIC, mode="first")
    assert list(first) == [ed("b", "w", "w")]
    everything = search_tcp(evening_net, MATCHING_FABRIC, mode="all")
    assert list(everything) == [ed("b", "w", "w")]


def test_solve_unconstrained(evening_net):
    result = search_tcp(evening_net, [], mode="all")
    assert list(result) == [ed("b", "b", "r")]
    assert list(result)[0] == forward_sweep(evening_net)


def test_solve_infeasible(evening_net):
    result = search_tcp(evening_net, [HardConstraint.make(["J"], [])], mode="all")
    assert list(result) == []


def test_search_agrees_with_oracle_on_random_instances():
    rng = random.Random(67)
    for _ in range(20):
        net = generators.random_conditionally_acyclic_net(rng, rng.randint(3, 6))
        constraints = generators.random_constraints(rng, net)
        graph = build_flip_graph(net)
        feasible = [
            graph.outcome(node)
            for node in graph.nodes
            if all(
                tuple(graph.outcome(node)[v] for v in c.scope) in c.allowed
                for c in constraints
            )
        ]
        expected = oracle_nondominated(net, feasible)
        got = search_tcp(net, constraints, mode="all")
        assert outcomes_equal(got, expected)
        if feasible:
            first = list(search_tcp(net, constraints, mode="first"))[0]
            assert any(first == e for e in expected)


def test_search_emission_order_is_anytime():
    rng = random.Random(71)
    for _ in range(15):
        net = generators.random_conditionally_acyclic_net(rng, rng.randint(3, 6))
        constraints = generators.random_constraints(rng, net)
        emitted = list(search_tcp(net, constraints, mode="all"))
        for i, earlier in enumerate(emitted):
            for later in emitted[i + 1 :]:
                assert not oracle_entails(net, later, earlier)


def test_search_pruning_does_not_change_solutions():
    rng = random.Random(73)
    for _ in range(15):
        net = generators.random_conditionally_acyclic_net(rng, rng.randint(3, 6))
        constraints = generators.random_constraints(rng, net)
        with_pruning = list(search_tcp(net, constraints, mode="all", prune=True))
        without = list(search_tcp(net, constraints, mode="all", prune=False))
        assert with_pruning == without


def test_search_rejects_cyclic_nets(abc_net):
    with pytest.raises(NoRoot):
        search_tcp(abc_net, [], mode="all")


def test_search_surfaces_exhausted_dominance_budget(evening_net):
    from tcpnets import UnknownDominance

    with pytest.raises(UnknownDominance):
        search_tcp(evening_net, MATCHING_FABRIC, mode="all", dominance_budget=0)
    # mode=first never compares outcomes, so the budget is irrelevant
    first = search_tcp(evening_net, MATCHING_FABRIC, mode="first", dominance_budget=0)
    assert list(first) == [ed("b", "w", "w")]


# ---------------------------------------------------------------------------
# satisfying orders
# ---------------------------------------------------------------------------


def test_construct_order_single_variable():
    net = make_net([("X", ["a", "b"])], cpts={"X": {(): ["a", "b"]}})
    assert construct_satisfying_order(net) == [{"X": "a"}, {"X": "b"}]


def test_construct_order_evening(evening_net):
    order = construct_satisfying_order(evening_net)
    assert len(order) == 8
    assert [o["J"] for o in order] == ["b"] * 4 + ["w"] * 4
    assert order_satisfies(evening_net, order)


def test_construct_order_flight(flight_net):
    order = construct_satisfying_order(flight_net)
    assert len(order) == 32
    assert order_satisfies(flight_net, order)


def test_construct_order_respects_entailment(evening_net):
    order = construct_satisfying_order(evening_net)
    rank = {tuple(sorted(o.items())): i for i, o in enumerate(order)}
    for a in order:
        for b in order:
            if a != b and oracle_entails(evening_net, a, b):
                assert rank[tuple(sorted(a.items()))] < rank[tuple(sorted(b.items()))]


def test_construct_order_cap(evening_net):
    with pytest.raises(TooLarge):
        construct_satisfying_order(evening_net, cap=7)


def test_construct_order_rejects_cyclic(abc_net):
    with pytest.raises(NoRoot):
        construct_satisfying_order(abc_net)
