"""tcpnets: a reasoning engine for TCP-nets.

TCP-nets extend CP-nets with statements of relative importance between
variables, both unconditional (i-arcs) and conditioned on selector
variables (ci-arcs with conditional importance tables). This package
provides the data model with validation, exhaustive satisfaction
semantics usable as an oracle, conditional-acyclicity checking, dominance
queries with checkable certificates, constrained outcome optimization,
and JSON file formats with a CLI.
"""

from .model import (
    Assignment,
    CiTable,
    CpTable,
    IncompleteOrder,
    IncompleteOutcome,
    IncompleteSelectorAssignment,
    Issue,
    NoRoot,
    NonBinarySelector,
    TcpNet,
    TcpNetError,
    TooLarge,
    UnknownVariable,
    ValidationFailed,
    ValidationReport,
    VariableSpec,
    WidthExceeded,
    make_net,
    reduce_net,
    validate_net,
)
from .semantics import (
    CpFlip,
    FlipGraph,
    IFlip,
    build_flip_graph,
    flip_graph_has_cycle,
    improving_successors,
    oracle_entails,
    oracle_nondominated,
    order_satisfies,
)
from .acyclicity import (
    AcyclicityPolicy,
    AcyclicityStatus,
    AcyclicityVerdict,
    CapExceeded,
    CnfFormula,
    CycleCheck,
    CycleVerdict,
    CyclicityWitness,
    DependencyGraph,
    SemiDirectedCycle,
    WDirectedGraph,
    check_conditional_acyclicity,
    cycle_check_necessary,
    cycle_check_sat,
    cycle_check_shared_exact,
    cycle_check_sufficient,
    dependency_graph,
    enumerate_semi_directed_cycles,
    gadget_from_cnf,
    two_sat_solve,
    verify_witness,
    w_directed_graph,
)
from .dominance import (
    DominanceStatus,
    DominanceVerdict,
    FlippingSequence,
    dominates,
    verify_sequence,
)
from .optimizer import (
    ConstraintStore,
    Entailment,
    HardConstraint,
    SolutionSet,
    UnknownDominance,
    components,
    construct_satisfying_order,
    find_root,
    forward_sweep,
    linear_extension,
    search_tcp,
    store_entailed_by,
    strengthen,
)
from .io import (
    ParseError,
    net_to_document,
    parse_constraints,
    parse_net,
    serialize_constraints,
    serialize_net,
)

__version__ = "0.1.0"
