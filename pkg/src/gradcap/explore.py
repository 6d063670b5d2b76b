"""Exhaustive enumeration of scheduling choices.

Depth-first over every sequence of runnable-actor choices. Stores are
persistent, so a branch is just a reference to its parent's store.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable

from .ast import ActorId, Err, Expr, Loc, Program, Unit, Val, Value, free_vars
from .eval import substitute
from .printer import print_expr
from .runtime import Reason, classify, initial_store, runnable, step_actor
from .store import Status, Store


@dataclass(frozen=True, order=True)
class Summary:
    """What one interleaving ended in, with names and locations canonicalised."""

    reason: str
    actors: tuple[tuple[int, str, str | None, int | None], ...]
    store_hash: str

    def actor(self, aid: int) -> tuple[int, str, str | None, int | None]:
        return next(a for a in self.actors if a[0] == aid)


@dataclass
class Exploration:
    summaries: set[Summary] = field(default_factory=set)
    interleavings: int = 0
    nodes: int = 0
    complete: bool = True

    def reasons(self) -> set[str]:
        return {s.reason for s in self.summaries}


class BudgetExceeded(Exception):
    def __init__(self, partial: Exploration):
        super().__init__(f"exploration stopped after {partial.nodes} nodes")
        self.partial = partial


def _map_values(e: Expr, f: Callable[[Value], Value]) -> Expr:
    if isinstance(e, Val):
        return Val(f(e.value))
    changes = {}
    for fld in dataclasses.fields(e):
        if fld.name == "span":
            continue
        x = getattr(e, fld.name)
        if isinstance(x, Expr):
            changes[fld.name] = _map_values(x, f)
        elif isinstance(x, tuple) and x and isinstance(x[0], Expr):
            changes[fld.name] = tuple(_map_values(a, f) for a in x)
    return dataclasses.replace(e, **changes) if changes else e


def canonical_form(s: Store) -> dict[str, Any]:
    """A schedule-independent rendering of the live part of a store.

    Variables are replaced by the values they hold and locations are renumbered
    in first-seen order (actors by id, expression before queue, then the heap
    breadth first). Garbage bindings and unreachable objects are dropped.
    """
    order: dict[int, int] = {}
    pending: list[int] = []

    def canon(v: Value) -> Any:
        if isinstance(v, Loc):
            if v.loc not in order:
                order[v.loc] = len(order)
                pending.append(v.loc)
            return Loc(v.perm, order[v.loc])
        return v

    def render(v: Value) -> Any:
        if isinstance(v, Unit):
            return "unit"
        if isinstance(v, ActorId):
            return ["actor", v.id]
        if isinstance(v, Err):
            return ["err", v.perm.value]
        return ["loc", v.perm.value, v.loc]

    actors = []
    for aid, a in sorted(s.actors.items()):
        bound = {x: s.vars[x] for x in free_vars(a.expr) if x in s.vars}
        expr = _map_values(substitute(a.expr, bound), canon)
        queue = [render(canon(v)) for v in a.queue]
        actors.append({
            "id": aid,
            "status": a.status.value,
            "fault": a.fault.kind if a.fault else None,
            "expr": print_expr(expr),
            "queue": queue,
        })
    heap = []
    while pending:
        rec = s.heap[pending.pop(0)]
        heap.append([rec.cls, [render(canon(v)) for v in rec.fields]])
    return {"actors": actors, "heap": heap}


def store_hash(s: Store) -> str:
    blob = json.dumps(canonical_form(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def summarize(s: Store, reason: Reason) -> Summary:
    actors = tuple(
        (aid, a.status.value, a.fault.kind if a.fault else None, a.fault.line if a.fault else None)
        for aid, a in sorted(s.actors.items())
    )
    return Summary(reason.value, actors, store_hash(s))


def explore_exhaustive(
    p: Program,
    max_steps: int = 1000,
    node_limit: int = 200_000,
    *,
    lifo: bool = False,
    strict: bool = False,
) -> Exploration:
    """Enumerate every interleaving of `p` up to `max_steps` steps each.

    Stops early once more than `node_limit` states have been expanded; the
    result is then marked incomplete, or BudgetExceeded is raised if `strict`.
    """
    ct = p.class_table
    result = Exploration()
    stack: list[tuple[Store, int]] = [(initial_store(p), 0)]
    while stack:
        s, depth = stack.pop()
        result.nodes += 1
        if result.nodes > node_limit:
            result.complete = False
            if strict:
                raise BudgetExceeded(result)
            break
        ready = runnable(s)
        if not ready:
            result.interleavings += 1
            result.summaries.add(summarize(s, classify(s)))
            continue
        if depth >= max_steps:
            result.interleavings += 1
            result.summaries.add(summarize(s, Reason.STEP_LIMIT))
            continue
        for aid in reversed(ready):
            s2, _ = step_actor(s, aid, ct, depth, lifo)
            stack.append((s2, depth + 1))
    return result
