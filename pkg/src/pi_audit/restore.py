"""Restoring rationalizability by removing individuals, types, or objects.

Each mode asks for a maximum-cardinality kept subset whose reduced allocation
has an acyclic allocation graph. All three problems are NP-complete (they
encode maximum independent set), so the exact solver is a branch-and-bound
over removal candidates and is meant for desk-scale inputs; the greedy
variant scales but only yields a feasible lower bound.

The independent-set gadget generators used in the hardness reductions are
implemented here too, which lets the test suite confirm the reduction
formulas empirically against a brute-force independent-set solver.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .graphs import Digraph, detect_cycle, make_digraph, strongly_connected_components
from .model import (
    BudgetExceededError,
    Instance,
    ParseError,
    ReductionMode,
    SchemaError,
    make_instance,
    reduce_instance,
)


@dataclass(frozen=True)
class RemovalCertificate:
    """A kept subset whose reduced allocation is rationalizable.

    ``optimal`` is True only for certificates produced by the exact solver;
    greedy certificates are feasible but carry no maximality claim.
    """

    mode: ReductionMode
    kept: tuple[str, ...]
    objective: int
    optimal: bool

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "kept": list(self.kept),
            "objective": self.objective,
            "optimal": self.optimal,
        }


# --- shared machinery ---------------------------------------------------------


@dataclass(frozen=True)
class _Group:
    """Individuals sharing (type, endowment, assignment) are interchangeable
    for every allocation-graph question, so removal decisions happen on
    whole groups."""

    type_id: str
    endowment: str
    assignment: str
    members: tuple[str, ...]


def _collapse_groups(inst: Instance) -> tuple[_Group, ...]:
    buckets: dict[tuple[str, str, str], list[str]] = {}
    for i in inst.individuals:
        buckets.setdefault((inst.type_of[i], inst.endowment[i], inst.assignment[i]), []).append(i)
    tix, oix = inst.type_index, inst.object_index
    keys = sorted(buckets, key=lambda k: (tix[k[0]], oix[k[1]], oix[k[2]]))
    return tuple(_Group(t, w, x, tuple(buckets[(t, w, x)])) for t, w, x in keys)


def _edge_support(
    groups: Sequence[_Group], alive: Iterable[int]
) -> dict[tuple[str, str], dict[str, tuple[int, tuple[int, ...]]]]:
    """Map each allocation-graph edge to its per-type support.

    The support of edge (h, h') under type t is the mover group (endowment h,
    assignment h') plus every alive group of t currently holding h.
    """
    held: dict[tuple[str, str], list[int]] = {}
    movers: dict[tuple[str, str, str], int] = {}
    for gi in alive:
        g = groups[gi]
        held.setdefault((g.type_id, g.assignment), []).append(gi)
        if g.endowment != g.assignment:
            movers[(g.type_id, g.endowment, g.assignment)] = gi
    support: dict[tuple[str, str], dict[str, tuple[int, tuple[int, ...]]]] = {}
    for (t, w, x), gi in movers.items():
        holders = held.get((t, w))
        if holders:
            support.setdefault((w, x), {})[t] = (gi, tuple(holders))
    return support


class _ExactSearch:
    """Cycle-driven branch-and-bound over removal atoms.

    Atoms are whole (type, endowment, assignment) groups in individuals mode
    and raw ids in types/objects mode. At every node with a cyclic graph the
    search picks one deterministic cycle and branches on each atom whose
    removal could contribute to deleting one of its edges; iterating with an
    accumulated "forced kept" set partitions the solution space exactly once.
    """

    def __init__(self, inst: Instance, mode: ReductionMode, target: int | None):
        self.inst = inst
        self.mode = mode
        self.target = target
        self.groups = _collapse_groups(inst)
        self.best_value = -1
        self.best_kept: tuple[str, ...] = ()
        if mode is ReductionMode.INDIVIDUALS:
            self.total = len(inst.individuals)
        elif mode is ReductionMode.TYPES:
            self.total = len(inst.types)
        else:
            self.total = len(inst.objects)

    # -- mode adapters

    def _alive(self, removed: frozenset) -> list[int]:
        mode, groups = self.mode, self.groups
        if mode is ReductionMode.INDIVIDUALS:
            return [gi for gi in range(len(groups)) if gi not in removed]
        if mode is ReductionMode.TYPES:
            return [gi for gi, g in enumerate(groups) if g.type_id not in removed]
        return [
            gi
            for gi, g in enumerate(groups)
            if g.endowment not in removed and g.assignment not in removed
        ]

    def _vertices(self, removed: frozenset) -> tuple[str, ...]:
        if self.mode is ReductionMode.OBJECTS:
            return tuple(h for h in self.inst.objects if h not in removed)
        return self.inst.objects

    def _cost(self, atom) -> int:
        if self.mode is ReductionMode.INDIVIDUALS:
            return len(self.groups[atom].members)
        return 1

    def _atom_sort_key(self, atom):
        if self.mode is ReductionMode.INDIVIDUALS:
            return (len(self.groups[atom].members), atom)
        if self.mode is ReductionMode.TYPES:
            return (1, self.inst.type_index[atom])
        return (1, self.inst.object_index[atom])

    def _kept_ids(self, removed: frozenset) -> tuple[str, ...]:
        inst = self.inst
        if self.mode is ReductionMode.INDIVIDUALS:
            gone = {i for gi in removed for i in self.groups[gi].members}
            return tuple(i for i in inst.individuals if i not in gone)
        if self.mode is ReductionMode.TYPES:
            return tuple(t for t in inst.types if t not in removed)
        return tuple(h for h in inst.objects if h not in removed)

    def _branch_atoms(self, cycle_edges, support, forced: set) -> list:
        atoms = set()
        for e in cycle_edges:
            for t, (mover, holders) in support[e].items():
                if self.mode is ReductionMode.INDIVIDUALS:
                    atoms.add(mover)
                    atoms.update(holders)
                elif self.mode is ReductionMode.TYPES:
                    atoms.add(t)
                else:
                    atoms.add(e[0])
                    atoms.add(e[1])
                    atoms.update(self.groups[g].endowment for g in holders)
        return sorted(atoms - forced, key=self._atom_sort_key)

    def _lower_bound(self, g: Digraph, support) -> int:
        comps = [c for c in strongly_connected_components(g) if len(c) > 1]
        if not comps:
            return 0
        if self.mode is not ReductionMode.INDIVIDUALS:
            # A single id removal may break several components at once, so
            # only the trivial bound is admissible here.
            return 1
        lb = 0
        for comp in comps:
            compset = set(comp)
            best = None
            for e, per_type in support.items():
                if e[0] in compset and e[1] in compset:
                    c = sum(
                        min(
                            len(self.groups[mover].members),
                            sum(len(self.groups[h].members) for h in holders),
                        )
                        for mover, holders in per_type.values()
                    )
                    if best is None or c < best:
                        best = c
            lb += best if best is not None else 1
        return lb

    # -- search

    def candidate_count(self) -> int:
        """Branchable atoms reachable from the initial graph's edges."""
        support = _edge_support(self.groups, self._alive(frozenset()))
        atoms = self._branch_atoms(list(support.keys()), support, set())
        return len(atoms)

    def run(self) -> tuple[int, tuple[str, ...], bool]:
        """Returns (objective, kept ids, proven_optimal)."""
        try:
            self._dfs(frozenset(), frozenset(), 0)
        except _TargetReached:
            return (self.best_value, self.best_kept, False)
        return (self.best_value, self.best_kept, True)

    def seed(self, value: int, kept: tuple[str, ...]) -> None:
        if value > self.best_value:
            self.best_value = value
            self.best_kept = kept

    def _dfs(self, removed: frozenset, forced: frozenset, cost: int) -> None:
        support = _edge_support(self.groups, self._alive(removed))
        g = make_digraph(self._vertices(removed), support.keys())
        cyc = detect_cycle(g)
        if cyc is None:
            value = self.total - cost
            if value > self.best_value:
                self.best_value = value
                self.best_kept = self._kept_ids(removed)
                if self.target is not None and self.best_value >= self.target:
                    raise _TargetReached
            return
        if self.total - cost - self._lower_bound(g, support) <= self.best_value:
            return
        atoms = self._branch_atoms(cyc.edge_list(), support, set(forced))
        local_forced = set(forced)
        for atom in atoms:
            c = self._cost(atom)
            if self.total - cost - c > self.best_value:
                self._dfs(removed | {atom}, frozenset(local_forced), cost + c)
                if self.target is not None and self.best_value >= self.target:
                    raise _TargetReached
            local_forced.add(atom)


class _TargetReached(Exception):
    pass


def _universe_size(inst: Instance, mode: ReductionMode) -> int:
    if mode is ReductionMode.INDIVIDUALS:
        return len(inst.individuals)
    if mode is ReductionMode.TYPES:
        return len(inst.types)
    return len(inst.objects)


def solve_removal_exact(
    inst: Instance, mode: ReductionMode, *, max_candidates: int = 24
) -> RemovalCertificate:
    """Maximum-cardinality kept subset with an acyclic allocation graph.

    ``max_candidates`` bounds the number of branchable removal candidates
    (collapsed groups in individuals mode, ids otherwise); anything larger
    raises BudgetExceededError and the caller should fall back to
    :func:`greedy_removal`. Deterministic for a fixed instance.
    """
    search = _ExactSearch(inst, mode, target=None)
    value, kept, optimal = _run_search(inst, mode, search, max_candidates)
    assert optimal
    return RemovalCertificate(mode, kept, value, optimal=True)


def decide_removal(
    inst: Instance, mode: ReductionMode, K: int, *, max_candidates: int = 24
) -> bool:
    """Does a kept subset of size >= K exist? Early-exits once one is found."""
    if K <= 0:
        return True
    if K > _universe_size(inst, mode):
        return False
    search = _ExactSearch(inst, mode, target=K)
    value, _, _ = _run_search(inst, mode, search, max_candidates)
    return value >= K


def _run_search(
    inst: Instance, mode: ReductionMode, search: _ExactSearch, max_candidates: int
) -> tuple[int, tuple[str, ...], bool]:
    initial_support = _edge_support(search.groups, search._alive(frozenset()))
    g0 = make_digraph(inst.objects, initial_support.keys())
    if detect_cycle(g0) is None:
        kept = search._kept_ids(frozenset())
        return (search.total, kept, True)
    n_candidates = search.candidate_count()
    if n_candidates > max_candidates:
        raise BudgetExceededError(
            f"{n_candidates} removal candidates exceed the exact budget of "
            f"{max_candidates}; raise --max-exact-ids or use the greedy solver"
        )
    seed = greedy_removal(inst, mode)
    search.seed(seed.objective, seed.kept)
    if search.target is not None and search.best_value >= search.target:
        return (search.best_value, search.best_kept, False)
    return search.run()


# --- greedy -------------------------------------------------------------------


def greedy_removal(inst: Instance, mode: ReductionMode) -> RemovalCertificate:
    """Feasible kept subset by repeated highest-pressure removal.

    Each round rebuilds the allocation graph, finds the edges lying on
    cycles, and removes the individual/type/object supporting the most such
    edges (ties broken canonically), until the graph is acyclic.
    """
    if mode is ReductionMode.INDIVIDUALS:
        alive = list(inst.individuals)
        order = inst.individual_index
    elif mode is ReductionMode.TYPES:
        alive = list(inst.types)
        order = inst.type_index
    else:
        alive = list(inst.objects)
        order = inst.object_index
    while True:
        sub = reduce_instance(inst, mode, alive)
        groups = _collapse_groups(sub)
        support = _edge_support(groups, range(len(groups)))
        g = make_digraph(sub.objects, support.keys())
        comp_of: dict[str, int] = {}
        sizes: dict[int, int] = {}
        for k, comp in enumerate(strongly_connected_components(g)):
            sizes[k] = len(comp)
            for v in comp:
                comp_of[v] = k
        cycle_edges = [
            e for e in support if comp_of[e[0]] == comp_of[e[1]] and sizes[comp_of[e[0]]] > 1
        ]
        if not cycle_edges:
            break
        counts: dict[str, int] = {}
        for e in cycle_edges:
            if mode is ReductionMode.OBJECTS:
                counts[e[0]] = counts.get(e[0], 0) + 1
                counts[e[1]] = counts.get(e[1], 0) + 1
                continue
            for t, (mover, holders) in support[e].items():
                if mode is ReductionMode.TYPES:
                    counts[t] = counts.get(t, 0) + 1
                else:
                    for gi in (mover, *holders):
                        for i in groups[gi].members:
                            counts[i] = counts.get(i, 0) + 1
        victim = min(counts, key=lambda u: (-counts[u], order[u]))
        alive.remove(victim)
    return RemovalCertificate(mode, tuple(alive), len(alive), optimal=False)


# --- independent-set gadgets ----------------------------------------------------


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected graph; edges normalized to (earlier, later) vertex order."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    @property
    def index(self) -> dict[str, int]:
        return {v: k for k, v in enumerate(self.vertices)}

    def neighbors(self) -> dict[str, tuple[str, ...]]:
        adj: dict[str, list[str]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        index = self.index
        return {v: tuple(sorted(ns, key=index.__getitem__)) for v, ns in adj.items()}

    def to_json_dict(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}


def make_simple_graph(vertices: Iterable[str], edges: Iterable[tuple[str, str]]) -> SimpleGraph:
    vs = tuple(vertices)
    index = {v: k for k, v in enumerate(vs)}
    if len(index) != len(vs):
        raise ValueError("duplicate vertex ids")
    norm = set()
    for u, v in edges:
        if u not in index or v not in index:
            raise ValueError(f"edge ({u!r}, {v!r}) references an unknown vertex")
        if u == v:
            raise ValueError(f"self-loop at {u!r} not allowed")
        norm.add((u, v) if index[u] < index[v] else (v, u))
    ordered = tuple(sorted(norm, key=lambda e: (index[e[0]], index[e[1]])))
    return SimpleGraph(vs, ordered)


def load_simple_graph(source: str | bytes | IO) -> SimpleGraph:
    text = source if isinstance(source, str) else (
        source.decode("utf-8") if isinstance(source, bytes) else source.read()
    )
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "vertices" not in doc:
        raise SchemaError('graph document must be {"vertices": [...], "edges": [[u, v], ...]}')
    try:
        return make_simple_graph(doc["vertices"], [tuple(e) for e in doc.get("edges", [])])
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc


def generate_mir_gadget(g: SimpleGraph, k: int) -> tuple[Instance, int]:
    """Individuals-removal instance encoding maximum independent set.

    Per vertex v: two types and two objects, L movers in each direction
    between them, one stayer on the first object and two on the second, plus
    L movers along each incident graph edge (L = 3|V| + 1). The decision
    threshold is K = 2|V|L + 2|E|L + |V| + k.
    """
    if not 0 <= k <= len(g.vertices):
        raise ValueError(f"k={k} out of range 0..{len(g.vertices)}")
    n = len(g.vertices)
    L = 3 * n + 1
    neighbors = g.neighbors()
    rows: list[tuple[str, str, str, str]] = []
    objects: list[str] = []
    for v in g.vertices:
        t1, t2 = f"t1:{v}", f"t2:{v}"
        hj, hv = f"h:{v}", f"hv:{v}"
        objects += [hj, hv]
        rows += [(f"m1:{v}:{i}", t1, hj, hv) for i in range(L)]
        rows.append((f"s1:{v}:0", t1, hj, hj))
        rows += [(f"m2:{v}:{i}", t2, hv, hj) for i in range(L)]
        rows += [(f"s2:{v}:{i}", t2, hv, hv) for i in range(2)]
        for u in neighbors[v]:
            rows += [(f"me:{v}:{u}:{i}", t2, hv, f"hv:{u}") for i in range(L)]
    K = 2 * n * L + 2 * len(g.edges) * L + n + k
    return make_instance(rows, objects=objects), K


def generate_mhr_mtr_gadget(g: SimpleGraph, k: int) -> tuple[Instance, int]:
    """Objects/types-removal instance encoding maximum independent set.

    Per vertex v: one object and one type, a single stayer, and L movers to
    each neighbouring vertex's object (L = |V| + 1); the threshold is K = k.
    The same instance serves both the object-removal and the type-removal
    problems.
    """
    if not 0 <= k <= len(g.vertices):
        raise ValueError(f"k={k} out of range 0..{len(g.vertices)}")
    L = len(g.vertices) + 1
    neighbors = g.neighbors()
    rows: list[tuple[str, str, str, str]] = []
    objects: list[str] = []
    for v in g.vertices:
        t, h = f"t:{v}", f"h:{v}"
        objects.append(h)
        rows.append((f"s:{v}:0", t, h, h))
        for u in neighbors[v]:
            rows += [(f"m:{v}:{u}:{i}", t, h, f"h:{u}") for i in range(L)]
    return make_instance(rows, objects=objects), k


def brute_force_mis(g: SimpleGraph, max_vertices: int = 20) -> tuple[int, tuple[str, ...]]:
    """Exact maximum independent set by include/exclude branching.

    Ties resolve to the lexicographically least witness under canonical
    vertex order. Guarded to small graphs.
    """
    n = len(g.vertices)
    if n > max_vertices:
        raise BudgetExceededError(f"{n} vertices exceed the MIS budget of {max_vertices}")
    index = g.index
    adj = [0] * n
    for u, v in g.edges:
        adj[index[u]] |= 1 << index[v]
        adj[index[v]] |= 1 << index[u]

    def rec(candidates: int) -> tuple[int, tuple[int, ...]]:
        if candidates == 0:
            return (0, ())
        v = (candidates & -candidates).bit_length() - 1
        in_size, in_set = rec(candidates & ~adj[v] & ~(1 << v))
        in_size, in_set = in_size + 1, (v, *in_set)
        ex_size, ex_set = rec(candidates & ~(1 << v))
        if in_size > ex_size or (in_size == ex_size and in_set <= ex_set):
            return (in_size, in_set)
        return (ex_size, ex_set)

    size, chosen = rec((1 << n) - 1)
    witness = tuple(g.vertices[i] for i in sorted(chosen))
    left = set(witness)
    assert all(not (u in left and v in left) for u, v in g.edges)
    return size, witness


def all_graphs_up_to_iso(max_vertices: int) -> list[SimpleGraph]:
    """One representative per isomorphism class, for 1..max_vertices vertices."""
    out: list[SimpleGraph] = []
    for n in range(1, max_vertices + 1):
        names = [f"v{i + 1}" for i in range(n)]
        pairs = list(itertools.combinations(range(n), 2))
        seen: set[frozenset] = set()
        for mask in range(1 << len(pairs)):
            edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
            canonical = None
            for perm in itertools.permutations(range(n)):
                mapped = frozenset(
                    (min(perm[a], perm[b]), max(perm[a], perm[b])) for a, b in edges
                )
                if canonical is None or sorted(mapped) < sorted(canonical):
                    canonical = mapped
            if canonical in seen:
                continue
            seen.add(canonical)
            out.append(
                make_simple_graph(names, [(names[a], names[b]) for a, b in edges])
            )
    return out
