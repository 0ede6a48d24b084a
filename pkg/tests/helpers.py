"""Shared fixtures, generators, and independent oracles for the test suite.

The oracles here deliberately re-derive results by enumeration (with
networkx as an unrelated acyclicity checker), so production shortcuts are
validated against a second route everywhere the contracts promise one.
"""
from __future__ import annotations

import itertools
import random
from collections import Counter

import networkx as nx

import pi_audit as pa

# --- worked fixtures -----------------------------------------------------------


def swap_cycle_instance() -> pa.Instance:
    """Two types moving in opposite directions between two objects; the
    allocation graph is a mutual 2-cycle, so nothing rationalizes it."""
    return pa.make_instance(
        [
            ("i1", "t1", "h1", "h2"),
            ("i2", "t1", "h1", "h1"),
            ("i3", "t2", "h2", "h1"),
            ("i4", "t2", "h2", "h2"),
        ]
    )


def one_way_flow_instance() -> pa.Instance:
    """Five agents, three types; a single allocation-graph edge h1 -> h2.

    Rationalizable as PI, yet not strict-core rationalizable: the agent graph
    is one strongly connected component in which two same-type agents receive
    different objects.
    """
    return pa.make_instance(
        [
            ("i1", "t1", "h1", "h2"),
            ("i2", "t2", "h2", "h3"),
            ("i3", "t1", "h2", "h2"),
            ("i4", "t3", "h3", "h1"),
            ("i5", "t1", "h1", "h1"),
        ]
    )


def empty_core_instance() -> pa.Instance:
    """Three agents, two objects (capacities 2 and 1), everyone staying put."""
    return pa.make_instance(
        [
            ("i1", "t1", "h1", "h1"),
            ("i2", "t2", "h2", "h2"),
            ("i3", "t3", "h1", "h1"),
        ]
    )


def empty_core_profile() -> pa.TypedPreferenceProfile:
    return pa.TypedPreferenceProfile(
        {"t1": ("h2", "h1"), "t2": ("h1", "h2"), "t3": ("h2", "h1")}
    )


def one_way_flow_profile() -> pa.TypedPreferenceProfile:
    """The known PI-certifying profile for the one-way-flow instance."""
    return pa.TypedPreferenceProfile(
        {"t1": ("h2", "h3", "h1"), "t2": ("h3", "h2", "h1"), "t3": ("h1", "h2", "h3")}
    )


def star_graph() -> pa.SimpleGraph:
    """v1 adjacent to v2 and v3; maximum independent set {v2, v3}."""
    return pa.make_simple_graph(["v1", "v2", "v3"], [("v1", "v2"), ("v1", "v3")])


# --- random generators ----------------------------------------------------------


def random_instance(
    rng: random.Random, n_ind: int, n_obj: int, n_types: int
) -> pa.Instance:
    """A valid instance: endowment and assignment are shuffles of one pool."""
    objects = [f"h{k + 1}" for k in range(n_obj)]
    pool = [objects[rng.randrange(n_obj)] for _ in range(n_ind)]
    x = pool[:]
    rng.shuffle(x)
    w = pool[:]
    rng.shuffle(w)
    rows = [
        (f"i{k + 1}", f"t{rng.randrange(n_types) + 1}", w[k], x[k]) for k in range(n_ind)
    ]
    return pa.make_instance(rows, objects=objects)


def random_digraph(rng: random.Random, n: int, p: float) -> pa.Digraph:
    vertices = [f"v{k + 1}" for k in range(n)]
    edges = [
        (u, v)
        for u in vertices
        for v in vertices
        if u != v and rng.random() < p
    ]
    return pa.make_digraph(vertices, edges)


def random_simple_graph(rng: random.Random, n: int, p: float) -> pa.SimpleGraph:
    vertices = [f"v{k + 1}" for k in range(n)]
    edges = [
        (u, v) for u, v in itertools.combinations(vertices, 2) if rng.random() < p
    ]
    return pa.make_simple_graph(vertices, edges)


# --- independent oracles ---------------------------------------------------------


def nx_acyclic(g: pa.Digraph) -> bool:
    dg = nx.DiGraph()
    dg.add_nodes_from(g.vertices)
    dg.add_edges_from(g.edges)
    return nx.is_directed_acyclic_graph(dg)


def all_allocation_vectors(inst: pa.Instance) -> list[tuple[str, ...]]:
    """Every capacity-respecting allocation, derived independently by
    permuting the assignment pool."""
    pool = tuple(sorted((inst.assignment[i] for i in inst.individuals)))
    return sorted(set(itertools.permutations(pool)))


def oracle_is_pe(inst: pa.Instance, prof: pa.TypedPreferenceProfile) -> bool:
    """Pareto efficiency by dominance search over all allocations."""
    ranks = prof.ranks()
    x = tuple(inst.assignment[i] for i in inst.individuals)
    for alt in all_allocation_vectors(inst):
        if alt == x:
            continue
        weakly = all(
            ranks[inst.type_of[i]][a] <= ranks[inst.type_of[i]][b]
            for i, a, b in zip(inst.individuals, alt, x)
        )
        strict = any(
            ranks[inst.type_of[i]][a] < ranks[inst.type_of[i]][b]
            for i, a, b in zip(inst.individuals, alt, x)
        )
        if weakly and strict:
            return False
    return True


def oracle_is_pi(inst: pa.Instance, prof: pa.TypedPreferenceProfile) -> bool:
    ranks = prof.ranks()
    ir = all(
        ranks[inst.type_of[i]][inst.assignment[i]] <= ranks[inst.type_of[i]][inst.endowment[i]]
        for i in inst.individuals
    )
    return ir and oracle_is_pe(inst, prof)


def oracle_removal_objective(inst: pa.Instance, mode: pa.ReductionMode) -> int:
    """Exact retention objective by brute force over all kept subsets."""
    if mode is pa.ReductionMode.INDIVIDUALS:
        universe = inst.individuals
    elif mode is pa.ReductionMode.TYPES:
        universe = inst.types
    else:
        universe = inst.objects
    for size in range(len(universe), -1, -1):
        for combo in itertools.combinations(universe, size):
            sub = pa.reduce_instance(inst, mode, combo)
            if nx_acyclic(pa.build_allocation_graph(sub)):
                return size
    raise AssertionError("even the empty retention failed")  # pragma: no cover


def oracle_exchange_best(inst: pa.Instance) -> int:
    """Maximum number of changed individuals over all admissible exchanges.

    Admissible: per-object counts preserved, every change strictly
    revealed-preferred, and no strict-improvement cycle left at the result.
    """
    orders = pa.revealed_orders(inst)
    inds = inst.individuals
    best = 0
    for vec in all_allocation_vectors(inst):
        ok = all(
            h == inst.assignment[i] or orders[inst.type_of[i]].prefers(h, inst.assignment[i])
            for i, h in zip(inds, vec)
        )
        if not ok:
            continue
        dg = nx.DiGraph()
        dg.add_nodes_from(inst.objects)
        for i, h in zip(inds, vec):
            for better in orders[inst.type_of[i]].better_than(h):
                dg.add_edge(h, better)
        if not nx.is_directed_acyclic_graph(dg):
            continue
        best = max(best, sum(1 for i, h in zip(inds, vec) if h != inst.assignment[i]))
    return best


def oracle_mis_size(g: pa.SimpleGraph) -> int:
    """Maximum independent set size by subset enumeration."""
    edges = set(g.edges)
    best = 0
    for size in range(len(g.vertices), 0, -1):
        for combo in itertools.combinations(g.vertices, size):
            chosen = set(combo)
            if all(not (u in chosen and v in chosen) for u, v in edges):
                return size
    return best


# --- the exhaustive instance family ---------------------------------------------


def _compositions(total: int, parts: int):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def _type_maps(n: int):
    yield ("t1",) * n
    if n >= 2:
        for mask in range(1, 2**n - 1):
            yield tuple("t2" if mask >> i & 1 else "t1" for i in range(n))


def exhaustive_family(max_ind: int = 5, max_obj: int = 3) -> list[pa.Instance]:
    """All instances with |I| <= max_ind, |H| <= max_obj, |T| <= 2, positive
    capacities, up to relabeling of individuals (instances are deduplicated
    by their multiset of (type, endowment, assignment) triples, which both
    the graph test and the enumeration oracle depend on exclusively)."""
    instances = [pa.make_instance([], objects=[])]
    seen: set[frozenset] = set()
    for n_ind in range(1, max_ind + 1):
        for n_obj in range(1, min(max_obj, n_ind) + 1):
            objects = [f"h{k + 1}" for k in range(n_obj)]
            for q in _compositions(n_ind, n_obj):
                pool = [h for h, c in zip(objects, q) for _ in range(c)]
                perms = sorted(set(itertools.permutations(pool)))
                for x in perms:
                    for w in perms:
                        for tmap in _type_maps(n_ind):
                            sig = frozenset(Counter(zip(tmap, w, x)).items())
                            if sig in seen:
                                continue
                            seen.add(sig)
                            rows = [
                                (f"i{k + 1}", tmap[k], w[k], x[k]) for k in range(n_ind)
                            ]
                            instances.append(pa.make_instance(rows, objects=objects))
    return instances
