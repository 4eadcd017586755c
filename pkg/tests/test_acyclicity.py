import itertools
import random

import pytest

from tcpnets import (
    AcyclicityPolicy,
    AcyclicityStatus,
    CapExceeded,
    CnfFormula,
    CycleCheck,
    IncompleteSelectorAssignment,
    NonBinarySelector,
    WidthExceeded,
    check_conditional_acyclicity,
    cycle_check_necessary,
    cycle_check_sat,
    cycle_check_shared_exact,
    cycle_check_sufficient,
    dependency_graph,
    enumerate_semi_directed_cycles,
    find_root,
    gadget_from_cnf,
    make_net,
    two_sat_solve,
    verify_witness,
    w_directed_graph,
)
from tcpnets.acyclicity import solve_cnf

import generators
import oracles


def binary(*names, ci_arcs=(), i_arcs=(), cp_arcs=(), cpts=None):
    variables = [(n, ("0", "1")) for n in names]
    tables = cpts or {}
    filled = {}
    for n in names:
        parents = tuple(p for p, c in cp_arcs if c == n)
        if n in tables:
            filled[n] = tables[n]
        elif not parents:
            filled[n] = {(): ["0", "1"]}
        else:
            filled[n] = {
                key: ["0", "1"] for key in itertools.product("01", repeat=len(parents))
            }
    return make_net(variables, cp_arcs, i_arcs, ci_arcs, filled)


# ---------------------------------------------------------------------------
# dependency / w-directed graphs
# ---------------------------------------------------------------------------


def test_flight_dependency_graph(flight_net):
    dep = dependency_graph(flight_net)
    assert dep.directed_edges == frozenset(
        {("D", "T"), ("T", "S"), ("T", "C"), ("T", "A"), ("A", "S"), ("A", "C")}
    )
    assert dep.undirected_edges == frozenset({("S", "C")})
    assert dep.selector_index[("S", "C")] == ("T", "A")


def test_counterexample_dependency_graph(abc_net):
    dep = dependency_graph(abc_net)
    assert dep.directed_edges == frozenset({("A", "C"), ("C", "A"), ("C", "B")})
    assert dep.undirected_edges == frozenset({("A", "B")})


def test_dependency_graph_without_ci_arcs(evening_net):
    dep = dependency_graph(evening_net)
    assert dep.directed_edges == frozenset({("J", "S"), ("P", "S"), ("J", "P")})
    assert dep.undirected_edges == frozenset()


def test_flight_w_directed_graphs(flight_net):
    base = dependency_graph(flight_net).directed_edges
    cases = {
        ("m", "klm"): {("S", "C")},
        ("n", "klm"): set(),
        ("m", "ba"): {("C", "S")},
        ("n", "ba"): {("S", "C")},
    }
    for (t, a), extra in cases.items():
        graph = w_directed_graph(flight_net, {"T": t, "A": a, "D": "1d"})
        assert graph.directed_edges == base | extra


def test_w_directed_graph_requires_full_selector(flight_net):
    with pytest.raises(IncompleteSelectorAssignment):
        w_directed_graph(flight_net, {"T": "m"})


def test_w_directed_graph_without_ci_arcs_is_dependency_graph(evening_net):
    graph = w_directed_graph(evening_net, {})
    assert graph.directed_edges == dependency_graph(evening_net).directed_edges


# ---------------------------------------------------------------------------
# semi-directed cycle enumeration
# ---------------------------------------------------------------------------


def test_ring_has_single_semi_directed_cycle(ring_directed_net):
    cycles = enumerate_semi_directed_cycles(ring_directed_net)
    assert len(cycles) == 1
    assert len(cycles[0]) == 4
    assert cycles[0].has_directed


def test_flight_has_no_semi_directed_cycles(flight_net):
    assert enumerate_semi_directed_cycles(flight_net) == []


def test_tree_net_has_no_cycles():
    net = binary("A", "B", "C", cp_arcs=[("A", "B"), ("A", "C")])
    assert enumerate_semi_directed_cycles(net) == []


def test_parallel_directed_and_ci_edge_is_a_two_cycle():
    # Z is in the selector of {Z, X}'s partner arc... construct directly:
    # ci-arc {X, Y} with selector {Z}, plus ci-arc {Z, X}: the dependency
    # graph then holds both a directed Z->X selector edge and the
    # undirected Z-X arc, a semi-directed cycle of length 2.
    net = binary(
        "Z", "X", "Y", "W",
        ci_arcs=[
            (("X", "Y"), ("Z",), {("0",): "X"}),
            (("Z", "X"), ("W",), {("0",): "X", ("1",): "Z"}),
        ],
    )
    cycles = enumerate_semi_directed_cycles(net)
    twos = [c for c in cycles if len(c) == 2]
    assert len(twos) == 1
    verdict = cycle_check_shared_exact(twos[0], net)
    assert verdict.status is CycleCheck.CONDITIONALLY_DIRECTED
    # the directed selector edge runs Z->X, so the ci-arc must orient X->Z
    assert verdict.witness == {"W": "0"}


def test_cap_exceeded_is_a_value():
    f = CnfFormula(4, generators.random_cnf(random.Random(3), 4, 6, 3))
    net = gadget_from_cnf(f, "multi-cycle")
    result = enumerate_semi_directed_cycles(net, cap=3)
    assert isinstance(result, CapExceeded)


# ---------------------------------------------------------------------------
# per-cycle checks
# ---------------------------------------------------------------------------


def ring_cycle(net):
    cycles = enumerate_semi_directed_cycles(net)
    assert len(cycles) == 1
    return cycles[0]


def test_necessary_condition_cases(ring_directed_net):
    # both selectors are {D}: overlapping, so the screen cannot conclude
    assert cycle_check_necessary(ring_cycle(ring_directed_net)) is CycleCheck.MAYBE_ACYCLIC

    disjoint = binary(
        "D", "E", "T", "A", "S", "C",
        i_arcs=[("T", "S"), ("C", "A")],
        ci_arcs=[
            (("T", "A"), ("D",), {("0",): "A", ("1",): "T"}),
            (("S", "C"), ("E",), {("0",): "S", ("1",): "C"}),
        ],
    )
    cycle = ring_cycle(disjoint)
    assert cycle_check_necessary(cycle) is CycleCheck.CONDITIONALLY_DIRECTED
    confirmed = cycle_check_shared_exact(cycle, disjoint)
    assert confirmed.status is CycleCheck.CONDITIONALLY_DIRECTED


def test_single_ci_cycle_is_conditionally_directed_by_screen():
    net = binary(
        "Z", "T", "A", "S",
        i_arcs=[("T", "A"), ("A", "S")],
        ci_arcs=[(("T", "S"), ("Z",), {("0",): "S", ("1",): "T"})],
    )
    cycle = ring_cycle(net)
    assert len(cycle.ci_members) == 1
    assert cycle_check_necessary(cycle) is CycleCheck.CONDITIONALLY_DIRECTED
    assert cycle_check_shared_exact(cycle, net).status is CycleCheck.CONDITIONALLY_DIRECTED


def test_sufficient_condition_cases(ring_directed_net, ring_acyclic_net):
    assert cycle_check_sufficient(ring_cycle(ring_acyclic_net), ring_acyclic_net) is CycleCheck.ACYCLIC
    # conditionally directed configuration: the test cannot fire
    assert cycle_check_sufficient(ring_cycle(ring_directed_net), ring_directed_net) is CycleCheck.INCONCLUSIVE


def test_sufficient_needs_intersecting_selectors():
    net = binary(
        "D", "E", "T", "A", "S", "C",
        i_arcs=[("T", "S"), ("C", "A")],
        ci_arcs=[
            (("T", "A"), ("D",), {("0",): "T"}),
            (("S", "C"), ("E",), {("0",): "C"}),
        ],
    )
    assert cycle_check_sufficient(ring_cycle(net), net) is CycleCheck.INCONCLUSIVE


def test_shared_exact_on_ring(ring_directed_net, ring_acyclic_net):
    verdict = cycle_check_shared_exact(ring_cycle(ring_directed_net), ring_directed_net)
    assert verdict.status is CycleCheck.CONDITIONALLY_DIRECTED
    assert verdict.witness == {"D": "1d"}
    assert (
        cycle_check_shared_exact(ring_cycle(ring_acyclic_net), ring_acyclic_net).status
        is CycleCheck.ACYCLIC
    )


def test_sat_on_ring(ring_directed_net, ring_acyclic_net):
    verdict = cycle_check_sat(ring_cycle(ring_directed_net), ring_directed_net)
    assert verdict.status is CycleCheck.CONDITIONALLY_DIRECTED
    assert verdict.witness == {"D": "1d"}
    assert cycle_check_sat(ring_cycle(ring_acyclic_net), ring_acyclic_net).status is CycleCheck.ACYCLIC


def test_sat_on_empty_cits_is_acyclic():
    net = binary(
        "Z", "T", "A", "S", "C",
        i_arcs=[("T", "S"), ("C", "A")],
        ci_arcs=[(("T", "A"), ("Z",), {}), (("S", "C"), ("Z",), {})],
    )
    cycle = ring_cycle(net)
    assert cycle_check_sat(cycle, net).status is CycleCheck.ACYCLIC
    assert cycle_check_shared_exact(cycle, net).status is CycleCheck.ACYCLIC


def test_sat_rejects_non_binary_selectors():
    net = make_net(
        [("Z", ["0", "1", "2"]), ("T", ["0", "1"]), ("A", ["0", "1"]), ("S", ["0", "1"]), ("C", ["0", "1"])],
        i_arcs=[("T", "S"), ("C", "A")],
        ci_arcs=[
            (("T", "A"), ("Z",), {("0",): "A"}),
            (("S", "C"), ("Z",), {("0",): "S"}),
        ],
        cpts={
            "Z": {(): ["0", "1", "2"]},
            "T": {(): ["0", "1"]},
            "A": {(): ["0", "1"]},
            "S": {(): ["0", "1"]},
            "C": {(): ["0", "1"]},
        },
    )
    cycle = ring_cycle(net)
    with pytest.raises(NonBinarySelector):
        cycle_check_sat(cycle, net)
    # shared-exact handles the ternary selector
    verdict = cycle_check_shared_exact(cycle, net)
    assert verdict.status is CycleCheck.CONDITIONALLY_DIRECTED
    assert verdict.witness == {"Z": "0"}


def test_shared_exact_agrees_with_sat_on_random_binary_cycles():
    rng = random.Random(19)
    checked = 0
    while checked < 60:
        net = generators.random_general_net(rng, max_vars=7)
        cycles = enumerate_semi_directed_cycles(net, cap=200)
        if isinstance(cycles, CapExceeded):
            continue
        for cycle in cycles:
            if not cycle.ci_members:
                continue
            sat = cycle_check_sat(cycle, net)
            exact = cycle_check_shared_exact(cycle, net)
            assert sat.status is exact.status
            checked += 1


def test_screens_confirmed_by_shared_exact():
    # necessary fires only when CITs can realize both orientations, the
    # assumption under which the structural screen is exact
    rng = random.Random(23)
    confirmed_directed = confirmed_acyclic = 0
    while confirmed_directed < 20 or confirmed_acyclic < 10:
        net = generators.random_general_net(rng, max_vars=7)
        rich = all(len(set(ci.rows.values())) == 2 for ci in net.ci_arcs)
        cycles = enumerate_semi_directed_cycles(net, cap=200)
        if isinstance(cycles, CapExceeded):
            continue
        for cycle in cycles:
            if not cycle.ci_members:
                continue
            exact = cycle_check_shared_exact(cycle, net)
            if rich and cycle_check_necessary(cycle) is CycleCheck.CONDITIONALLY_DIRECTED:
                assert exact.status is CycleCheck.CONDITIONALLY_DIRECTED
                confirmed_directed += 1
            if cycle_check_sufficient(cycle, net) is CycleCheck.ACYCLIC:
                assert exact.status is CycleCheck.ACYCLIC
                confirmed_acyclic += 1


# ---------------------------------------------------------------------------
# 2-SAT
# ---------------------------------------------------------------------------


def test_two_sat_examples():
    model = two_sat_solve(CnfFormula(2, [(1, 2), (-1, 2)]))
    assert model is not None and model[2] is True
    assert two_sat_solve(CnfFormula(1, [(1,), (-1,)])) is None


def test_two_sat_rejects_wide_clauses():
    with pytest.raises(WidthExceeded):
        two_sat_solve(CnfFormula(3, [(1, 2, 3)]))


def test_two_sat_model_is_false_first():
    model = two_sat_solve(CnfFormula(3, [(1, 2)]))
    assert model == {1: False, 2: True, 3: False}


def test_two_sat_agrees_with_brute_force():
    rng = random.Random(29)
    for _ in range(150):
        n = rng.randint(1, 12)
        formula = CnfFormula(n, generators.random_cnf(rng, n, rng.randint(1, 3 * n), 2))
        model = two_sat_solve(formula)
        expected = oracles.brute_sat(n, formula.clauses)
        assert (model is not None) == expected
        if model is not None:
            assert formula.evaluate(model)


def test_two_sat_agrees_with_dpll_on_wide_instances():
    rng = random.Random(31)
    for _ in range(60):
        n = rng.randint(20, 60)
        formula = CnfFormula(n, generators.random_cnf(rng, n, rng.randint(n, 2 * n), 2))
        model = two_sat_solve(formula)
        assert (model is not None) == oracles.dpll_sat(n, formula.clauses)
        if model is not None:
            assert formula.evaluate(model)


def test_backtracking_solver_agrees_with_brute_force():
    rng = random.Random(37)
    for _ in range(80):
        n = rng.randint(1, 10)
        formula = CnfFormula(n, generators.random_cnf(rng, n, rng.randint(1, 2 * n), 3))
        model = solve_cnf(formula)
        assert (model is not None) == oracles.brute_sat(n, formula.clauses)
        if model is not None:
            assert formula.evaluate(model)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def test_pipeline_on_fixtures(evening_net, flight_net, abc_net, ring_directed_net, ring_acyclic_net):
    assert check_conditional_acyclicity(evening_net).status is AcyclicityStatus.CONDITIONALLY_ACYCLIC
    assert check_conditional_acyclicity(flight_net).status is AcyclicityStatus.CONDITIONALLY_ACYCLIC
    assert check_conditional_acyclicity(ring_acyclic_net).status is AcyclicityStatus.CONDITIONALLY_ACYCLIC

    verdict = check_conditional_acyclicity(abc_net)
    assert verdict.status is AcyclicityStatus.CONDITIONALLY_CYCLIC
    assert verdict.witness.cycle == (("A", "C"), ("C", "A"))
    assert verify_witness(abc_net, verdict.witness)

    verdict = check_conditional_acyclicity(ring_directed_net)
    assert verdict.status is AcyclicityStatus.CONDITIONALLY_CYCLIC
    assert verdict.witness.assignment["D"] == "1d"
    assert verify_witness(ring_directed_net, verdict.witness)


def test_pipeline_methods_agree_on_fixtures(abc_net, ring_directed_net, ring_acyclic_net, flight_net):
    for net in (abc_net, ring_directed_net, ring_acyclic_net, flight_net):
        expected = oracles.conditionally_acyclic_by_definition(net)
        for method in ("auto", "brute", "cycles", "sat"):
            verdict = check_conditional_acyclicity(net, AcyclicityPolicy(method=method))
            assert verdict.status is not AcyclicityStatus.UNKNOWN
            got = verdict.status is AcyclicityStatus.CONDITIONALLY_ACYCLIC
            assert got == expected, (method, net.variable_names)


def test_pipeline_agrees_with_definition_on_random_nets():
    rng = random.Random(41)
    for i in range(60):
        net = generators.random_general_net(rng, max_vars=8, allow_ternary=(i % 3 == 0))
        verdict = check_conditional_acyclicity(net)
        assert verdict.status is not AcyclicityStatus.UNKNOWN
        expected = oracles.conditionally_acyclic_by_definition(net)
        got = verdict.status is AcyclicityStatus.CONDITIONALLY_ACYCLIC
        assert got == expected
        if verdict.witness is not None:
            assert verify_witness(net, verdict.witness)


def test_conditionally_acyclic_nets_have_roots():
    rng = random.Random(43)
    for _ in range(40):
        net = generators.random_general_net(rng, max_vars=7)
        verdict = check_conditional_acyclicity(net)
        if verdict.status is AcyclicityStatus.CONDITIONALLY_ACYCLIC:
            find_root(net)  # must not raise


def test_unknown_is_reported_honestly():
    f = CnfFormula(4, generators.random_cnf(random.Random(3), 4, 6, 3))
    net = gadget_from_cnf(f, "multi-cycle")
    policy = AcyclicityPolicy(method="cycles", cycle_cap=2)
    verdict = check_conditional_acyclicity(net, policy)
    assert verdict.status is AcyclicityStatus.UNKNOWN
    # auto falls through to the exhaustive sweep instead
    policy = AcyclicityPolicy(method="auto", cycle_cap=2)
    assert check_conditional_acyclicity(net, policy).status is not AcyclicityStatus.UNKNOWN


# ---------------------------------------------------------------------------
# gadgets
# ---------------------------------------------------------------------------


def test_multi_cycle_gadget_structure():
    f = CnfFormula(3, [(1, 2, -3)])
    net = gadget_from_cnf(f, "multi-cycle")
    # duplicate clause padding: 2 clause nodes, 6 literal nodes, 3 formula vars
    assert len(net.variables) == 3 + 2 + 6
    assert len(net.ci_arcs) == 6
    assert len(net.i_arcs) == 6
    assert not net.cp_arcs
    verdict = check_conditional_acyclicity(net)
    assert verdict.status is AcyclicityStatus.CONDITIONALLY_CYCLIC


def test_one_cycle_gadget_on_unsatisfiable_formula():
    f = CnfFormula(1, [(1, 1, 1), (-1, -1, -1)])
    net = gadget_from_cnf(f, "one-cycle")
    cycles = enumerate_semi_directed_cycles(net)
    assert len(cycles) == 1
    verdict = check_conditional_acyclicity(net)
    assert verdict.status is AcyclicityStatus.CONDITIONALLY_ACYCLIC


def test_gadget_rejects_wide_clauses():
    with pytest.raises(WidthExceeded):
        gadget_from_cnf(CnfFormula(4, [(1, 2, 3, 4)]), "multi-cycle")


def test_gadget_equivalence_small():
    rng = random.Random(47)
    for _ in range(30):
        n = rng.randint(2, 8)
        formula = CnfFormula(n, generators.random_cnf(rng, n, rng.randint(2, 5), 3))
        expected = oracles.brute_sat(n, formula.clauses)
        for variant in ("multi-cycle", "one-cycle"):
            verdict = check_conditional_acyclicity(gadget_from_cnf(formula, variant))
            got = verdict.status is AcyclicityStatus.CONDITIONALLY_CYCLIC
            assert got == expected, (variant, formula)
