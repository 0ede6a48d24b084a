"""Data model for aggregate allocation audits.

An aggregate allocation instance records, for a finite population, which
object each individual started with (endowment), which object they hold now
(assignment), and an observable type label; per-object capacities tie both
maps to the same multiset of objects. Preferences are never part of the data.

Individuals and objects carry a canonical total order (their input order),
which every downstream routine uses for deterministic tie-breaking.
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import IO, Iterable, Mapping, Sequence


class ParseError(ValueError):
    """The input document is not well-formed JSON/CSV."""


class SchemaError(ValueError):
    """The document parses but violates the instance/profile schema."""


class BudgetExceededError(RuntimeError):
    """An exact or enumerative routine would exceed its configured budget."""


class ReductionMode(Enum):
    """Which universe a removal/reduction operates on."""

    INDIVIDUALS = "individuals"
    TYPES = "types"
    OBJECTS = "objects"


@dataclass(frozen=True)
class Instance:
    """An aggregate allocation instance.

    Attributes:
        individuals: individual ids in canonical (input) order.
        objects: object ids in canonical (input) order.
        capacity: object id -> number of identical copies.
        type_of: individual id -> type id.
        endowment: individual id -> initially held object.
        assignment: individual id -> currently held object.

    Construction checks structural integrity only (no duplicate ids, all map
    keys present, all references declared); the counting invariants are
    reported by :func:`validate_instance` so that partially inconsistent data
    can still be inspected.
    """

    individuals: tuple[str, ...]
    objects: tuple[str, ...]
    capacity: dict[str, int]
    type_of: dict[str, str]
    endowment: dict[str, str]
    assignment: dict[str, str]

    def __post_init__(self) -> None:
        if len(set(self.individuals)) != len(self.individuals):
            dupes = [i for i, n in Counter(self.individuals).items() if n > 1]
            raise SchemaError(f"duplicate individual id(s): {sorted(dupes)}")
        if len(set(self.objects)) != len(self.objects):
            dupes = [h for h, n in Counter(self.objects).items() if n > 1]
            raise SchemaError(f"duplicate object id(s): {sorted(dupes)}")
        objset = set(self.objects)
        for name, mapping in (
            ("type_of", self.type_of),
            ("endowment", self.endowment),
            ("assignment", self.assignment),
        ):
            missing = [i for i in self.individuals if i not in mapping]
            if missing:
                raise SchemaError(f"{name} missing for individual(s): {missing}")
            extra = set(mapping) - set(self.individuals)
            if extra:
                raise SchemaError(f"{name} refers to unknown individual(s): {sorted(extra)}")
        for name, mapping in (("endowment", self.endowment), ("assignment", self.assignment)):
            unknown = sorted({h for h in mapping.values() if h not in objset})
            if unknown:
                raise SchemaError(f"{name} references undeclared object(s): {unknown}")
        if set(self.capacity) != objset:
            raise SchemaError("capacity keys must be exactly the declared objects")
        for h, q in self.capacity.items():
            if not isinstance(q, int) or isinstance(q, bool) or q < 0:
                raise SchemaError(f"capacity of {h!r} must be a non-negative integer, got {q!r}")

    @cached_property
    def types(self) -> tuple[str, ...]:
        """Type ids in canonical order (first appearance among individuals)."""
        seen: dict[str, None] = {}
        for i in self.individuals:
            seen.setdefault(self.type_of[i], None)
        return tuple(seen)

    @cached_property
    def individual_index(self) -> dict[str, int]:
        return {i: k for k, i in enumerate(self.individuals)}

    @cached_property
    def object_index(self) -> dict[str, int]:
        return {h: k for k, h in enumerate(self.objects)}

    @cached_property
    def type_index(self) -> dict[str, int]:
        return {t: k for k, t in enumerate(self.types)}

    @cached_property
    def members_of_type(self) -> dict[str, tuple[str, ...]]:
        by_type: dict[str, list[str]] = {t: [] for t in self.types}
        for i in self.individuals:
            by_type[self.type_of[i]].append(i)
        return {t: tuple(v) for t, v in by_type.items()}

    def movers(self) -> tuple[str, ...]:
        """Individuals whose assignment differs from their endowment."""
        return tuple(i for i in self.individuals if self.assignment[i] != self.endowment[i])


def make_instance(
    rows: Iterable[tuple[str, str, str, str]],
    objects: Sequence[str] | None = None,
    capacity: Mapping[str, int] | None = None,
) -> Instance:
    """Build an instance from (individual, type, endowment, assigned) rows.

    When ``objects`` is omitted the object universe is inferred in order of
    first reference (endowment before assignment, row by row); omitted
    capacities are inferred from assignment counts.
    """
    rows = list(rows)
    if objects is None:
        seen: dict[str, None] = {}
        for _, _, endow, assigned in rows:
            seen.setdefault(endow, None)
            seen.setdefault(assigned, None)
        objects = tuple(seen)
    else:
        objects = tuple(objects)
    individuals = tuple(r[0] for r in rows)
    type_of = {r[0]: r[1] for r in rows}
    endowment = {r[0]: r[2] for r in rows}
    assignment = {r[0]: r[3] for r in rows}
    if capacity is None:
        counts = Counter(assignment.values())
        cap = {h: counts.get(h, 0) for h in objects}
    else:
        counts = Counter(assignment.values())
        cap = {h: int(capacity[h]) if h in capacity else counts.get(h, 0) for h in objects}
    return Instance(individuals, objects, cap, type_of, endowment, assignment)


@dataclass(frozen=True)
class Violation:
    """One violated instance invariant; ``subject`` names the offender."""

    code: str
    subject: str
    message: str


def validate_instance(inst: Instance, lenient_endowment: bool = False) -> list[Violation]:
    """Check the counting invariants; the returned list is empty iff valid.

    With ``lenient_endowment`` the requirement that endowments fill every
    object exactly to capacity is waived (the endowment map is then treated
    as free-form history rather than as an allocation in its own right).
    """
    out: list[Violation] = []
    total = sum(inst.capacity.values())
    if total != len(inst.individuals):
        out.append(
            Violation(
                "capacity-sum",
                "*",
                f"capacities sum to {total} but there are {len(inst.individuals)} individuals",
            )
        )
    assigned = Counter(inst.assignment.values())
    for h in inst.objects:
        if assigned.get(h, 0) != inst.capacity[h]:
            out.append(
                Violation(
                    "assignment-count",
                    h,
                    f"object {h!r} has capacity {inst.capacity[h]} but {assigned.get(h, 0)} assignees",
                )
            )
    if not lenient_endowment:
        endowed = Counter(inst.endowment.values())
        for h in inst.objects:
            if endowed.get(h, 0) != inst.capacity[h]:
                out.append(
                    Violation(
                        "endowment-count",
                        h,
                        f"object {h!r} has capacity {inst.capacity[h]} but {endowed.get(h, 0)} endowed holders",
                    )
                )
    return out


def reduce_instance(inst: Instance, mode: ReductionMode, keep: Iterable[str]) -> Instance:
    """Restrict an instance to a kept subset of individuals, types, or objects.

    Individuals mode keeps exactly the named individuals. Types mode keeps the
    individuals whose type is named. Objects mode keeps the individuals whose
    endowment *and* assignment both survive, and shrinks the object universe
    to the kept set. Capacities are recomputed from the retained assignments,
    so the result always validates under the lenient endowment check
    (dropping movers asymmetrically can leave endowments off-capacity).
    """
    keepset = set(keep)
    if mode is ReductionMode.INDIVIDUALS:
        unknown = keepset - set(inst.individuals)
        if unknown:
            raise SchemaError(f"unknown individual id(s) in keep: {sorted(unknown)}")
        retained = [i for i in inst.individuals if i in keepset]
        objects = inst.objects
    elif mode is ReductionMode.TYPES:
        unknown = keepset - set(inst.types)
        if unknown:
            raise SchemaError(f"unknown type id(s) in keep: {sorted(unknown)}")
        retained = [i for i in inst.individuals if inst.type_of[i] in keepset]
        objects = inst.objects
    elif mode is ReductionMode.OBJECTS:
        unknown = keepset - set(inst.objects)
        if unknown:
            raise SchemaError(f"unknown object id(s) in keep: {sorted(unknown)}")
        retained = [
            i
            for i in inst.individuals
            if inst.endowment[i] in keepset and inst.assignment[i] in keepset
        ]
        objects = tuple(h for h in inst.objects if h in keepset)
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unsupported mode: {mode}")
    counts = Counter(inst.assignment[i] for i in retained)
    return Instance(
        individuals=tuple(retained),
        objects=objects,
        capacity={h: counts.get(h, 0) for h in objects},
        type_of={i: inst.type_of[i] for i in retained},
        endowment={i: inst.endowment[i] for i in retained},
        assignment={i: inst.assignment[i] for i in retained},
    )


# --- loading / serialization -------------------------------------------------

CSV_HEADER = ("individual", "type", "endowment", "assigned")


def _as_text(source: str | bytes | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_instance(
    source: str | bytes | IO,
    fmt: str = "json",
    *,
    strict: bool = False,
    objects: Sequence[str] | None = None,
) -> Instance:
    """Load an instance from JSON or CSV text/bytes/stream.

    JSON schema: ``{"objects": [{"id", "capacity"?}], "individuals":
    [{"id", "type", "endowment", "assigned"}]}``; omitted capacities are
    inferred from assignment counts. CSV carries one individual per row under
    the header ``individual,type,endowment,assigned`` with the object universe
    inferred in order of first reference.

    Under ``strict``, any object reference outside the declared universe (the
    JSON objects array, or the explicit ``objects`` argument) is a
    :class:`SchemaError` instead of being auto-declared.
    """
    text = _as_text(source)
    if fmt == "json":
        return _load_json(text, strict=strict, objects=objects)
    if fmt == "csv":
        return _load_csv(text, strict=strict, objects=objects)
    raise ValueError(f"unsupported format: {fmt!r}")


def _check_row(row: dict, keys: Sequence[str], where: str) -> None:
    for k in keys:
        if k not in row:
            raise SchemaError(f"missing field {k!r} in {where}")
        if not isinstance(row[k], str):
            raise SchemaError(f"field {k!r} in {where} must be a string")


def _load_json(text: str, *, strict: bool, objects: Sequence[str] | None) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object")
    declared: dict[str, None] = {}
    capacities: dict[str, int] = {}
    for entry in doc.get("objects", []):
        if not isinstance(entry, dict):
            raise SchemaError("each objects[] entry must be an object")
        _check_row(entry, ("id",), "objects[]")
        oid = entry["id"]
        if oid in declared:
            raise SchemaError(f"duplicate object id: {oid!r}")
        declared[oid] = None
        if "capacity" in entry and entry["capacity"] is not None:
            q = entry["capacity"]
            if not isinstance(q, int) or isinstance(q, bool) or q < 0:
                raise SchemaError(f"capacity of {oid!r} must be a non-negative integer")
            capacities[oid] = q
    if objects is not None:
        for oid in objects:
            declared.setdefault(oid, None)
    rows: list[tuple[str, str, str, str]] = []
    for entry in doc.get("individuals", []):
        if not isinstance(entry, dict):
            raise SchemaError("each individuals[] entry must be an object")
        _check_row(entry, ("id", "type", "endowment", "assigned"), "individuals[]")
        for h in (entry["endowment"], entry["assigned"]):
            if h not in declared:
                if strict:
                    raise SchemaError(f"undeclared object id: {h!r}")
                declared[h] = None
        rows.append((entry["id"], entry["type"], entry["endowment"], entry["assigned"]))
    return make_instance(rows, objects=tuple(declared), capacity=capacities)


def _load_csv(text: str, *, strict: bool, objects: Sequence[str] | None) -> Instance:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty CSV input") from None
    if tuple(s.strip() for s in header) != CSV_HEADER:
        raise ParseError(f"CSV header must be {','.join(CSV_HEADER)!r}")
    declared: dict[str, None] = {}
    if objects is not None:
        for oid in objects:
            declared.setdefault(oid, None)
    rows: list[tuple[str, str, str, str]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
        ind, typ, endow, assigned = (s.strip() for s in row)
        for h in (endow, assigned):
            if h not in declared:
                if strict:
                    raise SchemaError(f"line {lineno}: undeclared object id: {h!r}")
                declared[h] = None
        rows.append((ind, typ, endow, assigned))
    return make_instance(rows, objects=tuple(declared))


def dump_instance_json(inst: Instance) -> str:
    """Serialize to the canonical byte-stable JSON document."""
    doc = {
        "objects": [{"id": h, "capacity": inst.capacity[h]} for h in inst.objects],
        "individuals": [
            {
                "id": i,
                "type": inst.type_of[i],
                "endowment": inst.endowment[i],
                "assigned": inst.assignment[i],
            }
            for i in inst.individuals
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def dump_instance_csv(inst: Instance) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i in inst.individuals:
        writer.writerow([i, inst.type_of[i], inst.endowment[i], inst.assignment[i]])
    return out.getvalue()


def serialize_instance(inst: Instance, fmt: str = "json") -> str:
    if fmt == "json":
        return dump_instance_json(inst)
    if fmt == "csv":
        return dump_instance_csv(inst)
    raise ValueError(f"unsupported format: {fmt!r}")


# --- typed preference profiles ----------------------------------------------


@dataclass(frozen=True)
class TypedPreferenceProfile:
    """One complete strict order over objects per type, best first."""

    orders: dict[str, tuple[str, ...]]

    def ranks(self) -> dict[str, dict[str, int]]:
        """Per type: object -> position (0 = most preferred)."""
        return {t: {h: k for k, h in enumerate(order)} for t, order in self.orders.items()}

    def to_json_dict(self) -> dict:
        return {"orders": {t: list(order) for t, order in self.orders.items()}}

    def render_table(self) -> str:
        lines = []
        for t in sorted(self.orders):
            lines.append(f"{t}: " + " > ".join(self.orders[t]))
        return "\n".join(lines)


def load_profile(source: str | bytes | IO) -> TypedPreferenceProfile:
    try:
        doc = json.loads(_as_text(source))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("orders"), dict):
        raise SchemaError('profile document must be {"orders": {type: [objects...]}}')
    orders: dict[str, tuple[str, ...]] = {}
    for t, seq in doc["orders"].items():
        if not isinstance(seq, list) or not all(isinstance(h, str) for h in seq):
            raise SchemaError(f"order for type {t!r} must be a list of object ids")
        orders[t] = tuple(seq)
    return TypedPreferenceProfile(orders)


def dump_profile(prof: TypedPreferenceProfile) -> str:
    return json.dumps(prof.to_json_dict(), sort_keys=True, indent=2) + "\n"


def ensure_profile_matches(inst: Instance, prof: TypedPreferenceProfile) -> None:
    """Raise SchemaError unless the profile covers the instance's universe.

    Every instance type must carry an order, and each such order must be a
    permutation of the full object set; extra types in the profile are
    tolerated.
    """
    objset = set(inst.objects)
    for t in inst.types:
        if t not in prof.orders:
            raise SchemaError(f"profile is missing an order for type {t!r}")
        order = prof.orders[t]
        if len(order) != len(objset) or set(order) != objset:
            raise SchemaError(f"order for type {t!r} is not a permutation of the object set")
