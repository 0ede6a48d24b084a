"""Audit aggregate object allocations for Pareto efficiency and individual
rationality when preferences are unobserved.

The library decides rationalizability from the allocation graph, constructs
and verifies witness preference profiles, solves the minimal-removal
restoration problems exactly or greedily, and reports the Critical Exchange
Index as a goodness-of-fit measure. The ``pi-audit`` console script wraps
everything for the command line.
"""
from .cei import (
    CeiResult,
    ExchangeOutcome,
    RevealedPartialOrder,
    compute_cei,
    exchange_maximize,
    revealed_orders,
)
from .graphs import (
    Condensation,
    CycleWitness,
    Digraph,
    TypeMoveGraph,
    build_allocation_graph,
    build_type_move_graph,
    condense_and_reach,
    detect_cycle,
    export_adjacency_json,
    export_dot,
    linear_extension,
    make_digraph,
    topological_order,
)
from .model import (
    BudgetExceededError,
    Instance,
    ParseError,
    ReductionMode,
    SchemaError,
    TypedPreferenceProfile,
    Violation,
    dump_instance_csv,
    dump_instance_json,
    dump_profile,
    ensure_profile_matches,
    load_instance,
    load_profile,
    make_instance,
    reduce_instance,
    serialize_instance,
    validate_instance,
)
from .rationalize import (
    RationalizabilityVerdict,
    brute_force_pi_oracle,
    build_envy_graph,
    check_ir,
    check_pe,
    check_pi,
    construct_witness_profile,
    enumerate_pi_allocations,
    enumerate_strict_core,
    find_blocking_coalition,
    test_pi_rationalizable,
    test_strict_core_rationalizable,
)
from .restore import (
    RemovalCertificate,
    SimpleGraph,
    brute_force_mis,
    decide_removal,
    generate_mhr_mtr_gadget,
    generate_mir_gadget,
    greedy_removal,
    load_simple_graph,
    make_simple_graph,
    solve_removal_exact,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "CeiResult",
    "Condensation",
    "CycleWitness",
    "Digraph",
    "ExchangeOutcome",
    "Instance",
    "ParseError",
    "RationalizabilityVerdict",
    "ReductionMode",
    "RemovalCertificate",
    "RevealedPartialOrder",
    "SchemaError",
    "SimpleGraph",
    "TypeMoveGraph",
    "TypedPreferenceProfile",
    "Violation",
    "brute_force_mis",
    "brute_force_pi_oracle",
    "build_allocation_graph",
    "build_envy_graph",
    "build_type_move_graph",
    "check_ir",
    "check_pe",
    "check_pi",
    "compute_cei",
    "condense_and_reach",
    "construct_witness_profile",
    "decide_removal",
    "detect_cycle",
    "dump_instance_csv",
    "dump_instance_json",
    "dump_profile",
    "ensure_profile_matches",
    "enumerate_pi_allocations",
    "enumerate_strict_core",
    "exchange_maximize",
    "export_adjacency_json",
    "export_dot",
    "find_blocking_coalition",
    "generate_mhr_mtr_gadget",
    "generate_mir_gadget",
    "greedy_removal",
    "linear_extension",
    "load_instance",
    "load_profile",
    "load_simple_graph",
    "make_digraph",
    "make_instance",
    "make_simple_graph",
    "reduce_instance",
    "revealed_orders",
    "serialize_instance",
    "solve_removal_exact",
    "test_pi_rationalizable",
    "test_strict_core_rationalizable",
    "topological_order",
    "validate_instance",
]
