from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import helpers
import pi_audit as pa
from pi_audit import rationalize as rz


def test_verdict_one_way_flow_is_rationalizable(one_way_flow):
    verdict = rz.test_pi_rationalizable(one_way_flow)
    assert verdict.rationalizable
    assert verdict.counterexample is None
    assert pa.check_pi(one_way_flow, verdict.witness)


def test_verdict_swap_cycle_is_not(swap_cycle):
    verdict = rz.test_pi_rationalizable(swap_cycle)
    assert not verdict.rationalizable
    assert verdict.witness is None
    assert verdict.counterexample.vertices == ("h1", "h2")


def test_verdict_stayers_always_rationalizable():
    inst = pa.make_instance(
        [("a", "t1", "h1", "h1"), ("b", "t1", "h2", "h2"), ("c", "t2", "h2", "h2")],
        objects=["h1", "h2"],
    )
    assert rz.test_pi_rationalizable(inst).rationalizable


def test_witness_ranks_assigned_block_first(one_way_flow):
    witness = rz.construct_witness_profile(one_way_flow)
    assert witness.orders["t1"][0] == "h2"
    assert pa.check_pi(one_way_flow, witness)


def test_witness_single_type_stayers_unconstrained():
    inst = pa.make_instance(
        [("a", "t", "h1", "h1"), ("b", "t", "h2", "h2")], objects=["h1", "h2"]
    )
    witness = rz.construct_witness_profile(inst)
    assert sorted(witness.orders["t"]) == ["h1", "h2"]
    assert pa.check_pi(inst, witness)


def test_witness_chain_orders_downstream_first():
    # One type, movers h1->h2 and h2->h3, plus a holder of h1. Endowments are
    # deliberately unbalanced (graph routines never read capacities).
    inst = pa.make_instance(
        [("a", "t", "h1", "h2"), ("b", "t", "h2", "h3"), ("c", "t", "h1", "h1")],
        objects=["h1", "h2", "h3"],
    )
    ag = pa.build_allocation_graph(inst)
    assert set(ag.edges) == {("h1", "h2"), ("h2", "h3")}
    witness = rz.construct_witness_profile(inst)
    assert witness.orders["t"] == ("h3", "h2", "h1")


def test_witness_requires_acyclic_graph(swap_cycle):
    with pytest.raises(ValueError):
        rz.construct_witness_profile(swap_cycle)


def test_check_ir_fixture_profile(one_way_flow):
    ok, violators = pa.check_ir(one_way_flow, helpers.one_way_flow_profile())
    assert ok and violators == ()


def test_check_ir_trivial_when_nobody_moves(empty_core):
    for orders in itertools.product(itertools.permutations(("h1", "h2")), repeat=3):
        prof = pa.TypedPreferenceProfile(dict(zip(("t1", "t2", "t3"), orders)))
        assert pa.check_ir(empty_core, prof)[0]


def test_check_ir_names_violators(swap_cycle):
    prof = pa.TypedPreferenceProfile({"t1": ("h1", "h2"), "t2": ("h2", "h1")})
    ok, violators = pa.check_ir(swap_cycle, prof)
    assert not ok
    assert violators == ("i1", "i3")


def test_check_pe_fixture_profile(one_way_flow):
    prof = helpers.one_way_flow_profile()
    envy = pa.build_envy_graph(one_way_flow, prof)
    assert set(envy.edges) == {("h1", "h2"), ("h1", "h3")}
    ok, cycle = pa.check_pe(one_way_flow, prof)
    assert ok and cycle is None


def test_check_pe_swap_cycle_envy(swap_cycle):
    prof = pa.TypedPreferenceProfile({"t1": ("h2", "h1"), "t2": ("h1", "h2")})
    ok, cycle = pa.check_pe(swap_cycle, prof)
    assert not ok
    assert cycle.vertices == ("h1", "h2")


def test_check_pe_everyone_on_top():
    inst = pa.make_instance(
        [("a", "t1", "h2", "h1"), ("b", "t2", "h1", "h2")], objects=["h1", "h2"]
    )
    prof = pa.TypedPreferenceProfile({"t1": ("h1", "h2"), "t2": ("h2", "h1")})
    assert pa.check_pe(inst, prof) == (True, None)


def test_check_pi_fixture(one_way_flow):
    assert pa.check_pi(one_way_flow, helpers.one_way_flow_profile())


def test_check_pi_swap_cycle_fails_all_four_profiles(swap_cycle):
    for o1 in itertools.permutations(("h1", "h2")):
        for o2 in itertools.permutations(("h1", "h2")):
            prof = pa.TypedPreferenceProfile({"t1": o1, "t2": o2})
            assert not pa.check_pi(swap_cycle, prof)


def test_check_pi_stayers_with_top_choice():
    inst = pa.make_instance(
        [("a", "t1", "h1", "h1"), ("b", "t2", "h2", "h2")], objects=["h1", "h2"]
    )
    prof = pa.TypedPreferenceProfile({"t1": ("h1", "h2"), "t2": ("h2", "h1")})
    assert pa.check_pi(inst, prof)


def test_profile_mismatch_raises(one_way_flow):
    with pytest.raises(pa.SchemaError):
        pa.check_ir(one_way_flow, pa.TypedPreferenceProfile({"t1": ("h1", "h2", "h3")}))


# --- oracles -------------------------------------------------------------------


def test_oracle_on_fixtures(swap_cycle, one_way_flow):
    assert not rz.brute_force_pi_oracle(swap_cycle)
    assert rz.brute_force_pi_oracle(one_way_flow)


def test_oracle_single_individual():
    inst = pa.make_instance([("a", "t", "h", "h")], objects=["h"])
    assert rz.brute_force_pi_oracle(inst)


def test_oracle_budget_guard():
    inst = helpers.random_instance(random.Random(1), 8, 4, 3)
    with pytest.raises(pa.BudgetExceededError):
        rz.brute_force_pi_oracle(inst, budget=10)


@settings(max_examples=120, deadline=None)
@given(
    seed=st.integers(0, 10**9),
    n_ind=st.integers(1, 6),
    n_obj=st.integers(1, 3),
    n_types=st.integers(1, 2),
)
def test_graph_test_agrees_with_oracle(seed, n_ind, n_obj, n_types):
    inst = helpers.random_instance(random.Random(seed), n_ind, n_obj, n_types)
    assert rz.test_pi_rationalizable(inst).rationalizable == rz.brute_force_pi_oracle(inst)


@settings(max_examples=80, deadline=None)
@given(
    seed=st.integers(0, 10**9),
    n_ind=st.integers(1, 6),
    n_obj=st.integers(1, 3),
    n_types=st.integers(1, 2),
)
def test_witness_is_sound_whenever_graph_is_acyclic(seed, n_ind, n_obj, n_types):
    inst = helpers.random_instance(random.Random(seed), n_ind, n_obj, n_types)
    if pa.detect_cycle(pa.build_allocation_graph(inst)) is None:
        witness = rz.construct_witness_profile(inst)
        assert pa.check_pi(inst, witness)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10**9),
    n_ind=st.integers(1, 5),
    n_obj=st.integers(1, 3),
    n_types=st.integers(1, 2),
)
def test_graph_edges_are_envy_edges_under_ir_profiles(seed, n_ind, n_obj, n_types):
    """Under any profile that keeps the data individually rational, every
    allocation-graph edge is also a strict-envy edge."""
    inst = helpers.random_instance(random.Random(seed), n_ind, n_obj, n_types)
    ag_edges = set(pa.build_allocation_graph(inst).edges)
    perms = list(itertools.permutations(inst.objects))
    for combo in itertools.product(perms, repeat=len(inst.types)):
        prof = pa.TypedPreferenceProfile(dict(zip(inst.types, combo)))
        if pa.check_ir(inst, prof)[0]:
            envy_edges = set(pa.build_envy_graph(inst, prof).edges)
            assert ag_edges <= envy_edges


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10**9),
    n_ind=st.integers(1, 6),
    n_obj=st.integers(1, 3),
    n_types=st.integers(1, 2),
)
def test_per_type_move_relation_acyclic_when_graph_is(seed, n_ind, n_obj, n_types):
    inst = helpers.random_instance(random.Random(seed), n_ind, n_obj, n_types)
    if pa.detect_cycle(pa.build_allocation_graph(inst)) is not None:
        return
    for t in inst.types:
        pairs = {
            (inst.assignment[i], inst.endowment[i])
            for i in inst.members_of_type[t]
            if inst.assignment[i] != inst.endowment[i]
        }
        pa.linear_extension(inst.objects, pairs)  # raises on a cycle


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10**9),
    n_ind=st.integers(1, 5),
    n_obj=st.integers(1, 3),
    n_types=st.integers(1, 2),
)
def test_envy_graph_criterion_matches_dominance_search(seed, n_ind, n_obj, n_types):
    inst = helpers.random_instance(random.Random(seed), n_ind, n_obj, n_types)
    perms = list(itertools.permutations(inst.objects))
    for combo in itertools.product(perms, repeat=len(inst.types)):
        prof = pa.TypedPreferenceProfile(dict(zip(inst.types, combo)))
        assert pa.check_pe(inst, prof)[0] == helpers.oracle_is_pe(inst, prof)


# --- strict core ----------------------------------------------------------------


def test_strict_core_test_one_way_flow(one_way_flow):
    ok, comp = rz.test_strict_core_rationalizable(one_way_flow)
    assert not ok
    assert comp == ("i1", "i2", "i3", "i4", "i5")
    assert {"i1", "i5"} <= set(comp)  # same type, different objects


def test_strict_core_test_swap_cycle(swap_cycle):
    ok, comp = rz.test_strict_core_rationalizable(swap_cycle)
    assert not ok
    assert {"i1", "i2"} <= set(comp)


def test_strict_core_test_stayers_singleton_types():
    inst = pa.make_instance(
        [("a", "ta", "h1", "h1"), ("b", "tb", "h1", "h1"), ("c", "tc", "h2", "h2")],
        objects=["h1", "h2"],
    )
    ok, comp = rz.test_strict_core_rationalizable(inst)
    assert ok and comp is None


@settings(max_examples=80, deadline=None)
@given(
    seed=st.integers(0, 10**9),
    n_ind=st.integers(1, 6),
    n_obj=st.integers(1, 3),
    n_types=st.integers(1, 2),
)
def test_strict_core_rationalizable_implies_pi(seed, n_ind, n_obj, n_types):
    inst = helpers.random_instance(random.Random(seed), n_ind, n_obj, n_types)
    if rz.test_strict_core_rationalizable(inst)[0]:
        assert rz.test_pi_rationalizable(inst).rationalizable


def test_enumerate_strict_core_empty(empty_core):
    assert rz.enumerate_strict_core(empty_core, helpers.empty_core_profile()) == ()


def test_enumerate_strict_core_single_owner():
    inst = pa.make_instance([("a", "t", "h", "h")], objects=["h"])
    prof = pa.TypedPreferenceProfile({"t": ("h",)})
    assert rz.enumerate_strict_core(inst, prof) == ({"a": "h"},)


def test_empty_core_pi_allocations_and_blockers(empty_core):
    prof = helpers.empty_core_profile()
    pis = rz.enumerate_pi_allocations(empty_core, prof)
    expected = [
        {"i1": "h1", "i2": "h1", "i3": "h2"},
        {"i1": "h2", "i2": "h1", "i3": "h1"},
    ]
    assert sorted(pis, key=lambda d: sorted(d.items())) == expected
    x1 = {"i1": "h2", "i2": "h1", "i3": "h1"}
    x2 = {"i1": "h1", "i2": "h1", "i3": "h2"}
    assert rz.find_blocking_coalition(empty_core, prof, x1) == ("i2", "i3")
    assert rz.find_blocking_coalition(empty_core, prof, x2) == ("i1", "i2")


def test_strict_core_budget_guard():
    inst = helpers.random_instance(random.Random(3), 9, 3, 2)
    prof = rz.construct_witness_profile(inst) if pa.detect_cycle(
        pa.build_allocation_graph(inst)
    ) is None else pa.TypedPreferenceProfile(
        {t: tuple(inst.objects) for t in inst.types}
    )
    with pytest.raises(pa.BudgetExceededError):
        rz.enumerate_strict_core(inst, prof, budget=100)


def test_verdict_json_shape(swap_cycle, one_way_flow):
    no = rz.test_pi_rationalizable(swap_cycle).to_json_dict()
    assert no == {"rationalizable": False, "witness": None, "cycle": ["h1", "h2"]}
    yes = rz.test_pi_rationalizable(one_way_flow).to_json_dict()
    assert yes["rationalizable"] and yes["cycle"] is None
    assert set(yes["witness"]["orders"]) == {"t1", "t2", "t3"}
