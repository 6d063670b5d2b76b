"""The global store and the three capability operations over it.

A Store is treated as immutable: every operation returns a new Store that
shares unchanged parts with its input. Exhaustive exploration relies on this
to branch without copying.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Any

from pyrsistent import PMap, PVector, pmap, pvector

from .ast import (
    UNIT,
    ActorId,
    Capability,
    Err,
    Expr,
    Loc,
    Permission,
    Unit,
    Value,
)

# Separates a user-facing hint from the uniqueness counter in fresh names.
# Never legal in a source identifier.
FRESH_SEP = "#"


class CapabilityViolation(Exception):
    """Raised where the capability rules are undefined: `moved` on an `unmov` location."""

    def __init__(self, cap: Capability, value: Value):
        super().__init__(f"cannot use {value} as {cap}")
        self.cap = cap
        self.value = value


@dataclass(frozen=True)
class ObjectRecord:
    cls: str
    fields: tuple[Value, ...]


class Status(enum.Enum):
    RUNNABLE = "Runnable"
    BLOCKED = "BlockedOnReceive"
    DONE = "Done"
    FAULTED = "Faulted"


@dataclass(frozen=True)
class Fault:
    kind: str
    detail: str
    span: Any = None  # SourceSpan of the faulting redex, when known

    @property
    def line(self) -> int | None:
        return self.span.start[0] if self.span is not None else None


@dataclass(frozen=True)
class ActorState:
    id: int
    queue: tuple[Value, ...]
    expr: Expr
    status: Status = Status.RUNNABLE
    fault: Fault | None = None


@dataclass(frozen=True)
class Store:
    """Variables, heap and actor table.

    Maps are persistent, so an update costs O(log n) and old versions stay
    valid. Plain dicts passed to the constructor are converted.
    """

    vars: PMap = field(default_factory=pmap)
    heap: PMap = field(default_factory=pmap)
    actors: PMap = field(default_factory=pmap)
    next_loc: int = 0
    next_var: int = 0
    next_actor: int = 0
    # Every fresh name in binding order, for trace deltas.
    bindings: PVector = field(default_factory=pvector)

    def __post_init__(self):
        for name in ("vars", "heap", "actors"):
            m = getattr(self, name)
            if not isinstance(m, PMap):
                object.__setattr__(self, name, pmap(m))
        if not isinstance(self.bindings, PVector):
            object.__setattr__(self, "bindings", pvector(self.bindings))
        if self.heap and self.next_loc <= max(self.heap):
            object.__setattr__(self, "next_loc", max(self.heap) + 1)

    def lookup(self, name: str) -> Value | None:
        return self.vars.get(name)

    def deref(self, loc: int) -> ObjectRecord:
        return self.heap[loc]

    def with_actor(self, actor: ActorState) -> Store:
        return replace(self, actors=self.actors.set(actor.id, actor))


# ---------------------------------------------------------------- the rules


def cast(k: Capability, v: Value) -> Value:
    """Cast `v` to capability `k`.

    Lending a movable location demotes it to unmov; moving an unmov location
    is undefined and raises CapabilityViolation. Everything else is identity.
    """
    if k is Capability.LENT and isinstance(v, Loc) and v.perm is Permission.MOVABLE:
        return Loc(Permission.UNMOV, v.loc)
    if k is Capability.MOVED and isinstance(v, Loc) and v.perm is Permission.UNMOV:
        raise CapabilityViolation(k, v)
    return v


def movable_rog(s: Store, v: Value) -> frozenset[int]:
    """Locations reachable from `v` through movable references only.

    Computed as a least fixpoint, so cyclic heaps terminate.
    """
    if not (isinstance(v, Loc) and v.perm is Permission.MOVABLE):
        return frozenset()
    seen = {v.loc}
    todo = [v.loc]
    while todo:
        for fv in s.heap[todo.pop()].fields:
            if isinstance(fv, Loc) and fv.perm is Permission.MOVABLE and fv.loc not in seen:
                seen.add(fv.loc)
                todo.append(fv.loc)
    return frozenset(seen)


def apply_capability(s: Store, k: Capability, v: Value) -> Store:
    """Update the store for `v` being used at capability `k`.

    Only `moved` on a movable location changes anything. Then every reference
    crossing the boundary of the moved graph, in either direction, becomes an
    error carrying the permission it had, and so does every variable that
    pointed into the graph. Actor states are left alone.
    """
    if k is not Capability.MOVED:
        return s
    if not isinstance(v, Loc):
        return s
    if v.perm is Permission.UNMOV:
        raise CapabilityViolation(k, v)

    moved = movable_rog(s, v)
    heap = s.heap.evolver()
    for loc, rec in s.heap.items():
        inside = loc in moved
        new_fields = tuple(
            Err(fv.perm) if isinstance(fv, Loc) and (fv.loc in moved) != inside else fv
            for fv in rec.fields
        )
        if new_fields != rec.fields:
            heap[loc] = ObjectRecord(rec.cls, new_fields)
    vars_ = s.vars.evolver()
    for x, xv in s.vars.items():
        if isinstance(xv, Loc) and xv.loc in moved:
            vars_[x] = Err(xv.perm)
    return replace(s, heap=heap.persistent(), vars=vars_.persistent())


def alloc(s: Store, o: ObjectRecord) -> tuple[Store, int]:
    loc = s.next_loc
    return replace(s, heap=s.heap.set(loc, o), next_loc=loc + 1), loc


def bind_fresh(s: Store, hint: str, v: Value) -> tuple[Store, str]:
    base = hint.split(FRESH_SEP, 1)[0]
    name = f"{base}{FRESH_SEP}{s.next_var}"
    s = replace(s, vars=s.vars.set(name, v), next_var=s.next_var + 1, bindings=s.bindings.append(name))
    return s, name


def set_field(s: Store, loc: int, index: int, v: Value) -> Store:
    rec = s.heap[loc]
    fields = rec.fields[:index] + (v,) + rec.fields[index + 1:]
    return replace(s, heap=s.heap.set(loc, ObjectRecord(rec.cls, fields)))


# ------------------------------------------------------------ serialization


def value_to_json(v: Value) -> dict[str, Any]:
    if isinstance(v, Unit):
        return {"kind": "unit"}
    if isinstance(v, ActorId):
        return {"kind": "actor", "id": v.id}
    if isinstance(v, Loc):
        return {"kind": "loc", "perm": v.perm.value, "loc": v.loc}
    if isinstance(v, Err):
        return {"kind": "err", "perm": v.perm.value}
    raise TypeError(f"not a value: {v!r}")


def value_from_json(d: dict[str, Any]) -> Value:
    kind = d["kind"]
    if kind == "unit":
        return UNIT
    if kind == "actor":
        return ActorId(d["id"])
    if kind == "loc":
        return Loc(Permission(d["perm"]), d["loc"])
    if kind == "err":
        return Err(Permission(d["perm"]))
    raise ValueError(f"unknown value kind {kind!r}")


def store_to_json(s: Store) -> dict[str, Any]:
    """Canonical JSON-ready form of a store; see docs/cli.md for the schema."""
    from .printer import print_expr

    return {
        "vars": {x: value_to_json(v) for x, v in sorted(s.vars.items())},
        "heap": [
            {"loc": loc, "class": rec.cls, "fields": [value_to_json(v) for v in rec.fields]}
            for loc, rec in sorted(s.heap.items())
        ],
        "actors": [
            {
                "id": a.id,
                "status": a.status.value,
                "fault": a.fault.kind if a.fault else None,
                "queue": [value_to_json(v) for v in a.queue],
                "expr": print_expr(a.expr),
            }
            for _, a in sorted(s.actors.items())
        ],
        "next": {"loc": s.next_loc, "var": s.next_var, "actor": s.next_actor},
    }


def dump_store(s: Store) -> str:
    return json.dumps(store_to_json(s), sort_keys=True, separators=(",", ":"))
