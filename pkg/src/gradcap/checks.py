"""Invariant checkers used by the property tests and `gradcap check`."""

from __future__ import annotations

from itertools import combinations

from .ast import Loc, Val, Value, walk, free_vars
from .store import Status, Store, movable_rog


def check_move_postcondition(before: Store, after: Store, moved_root: Value) -> bool:
    """Whether `after` is a legal result of moving `moved_root` out of `before`.

    With m the movable graph of the root in `before`: nothing outside m points
    into m, nothing inside m points out of m, no variable points into m, and
    the actor table is untouched.
    """
    m = movable_rog(before, moved_root)
    for loc, rec in after.heap.items():
        inside = loc in m
        for v in rec.fields:
            if isinstance(v, Loc) and (v.loc in m) != inside:
                return False
    for v in after.vars.values():
        if isinstance(v, Loc) and v.loc in m:
            return False
    return after.actors == before.actors


def actor_roots(s: Store, aid: int) -> list[Value]:
    """Values an actor can reach directly: its queue, the values embedded in
    its expression, and the bindings of the expression's free variables."""
    a = s.actors[aid]
    roots = list(a.queue)
    roots.extend(e.value for e in walk(a.expr) if isinstance(e, Val))
    roots.extend(s.vars[x] for x in free_vars(a.expr) if x in s.vars)
    return roots


def reachable(s: Store, roots: list[Value]) -> set[int]:
    """Heap closure of `roots` through location fields of any permission."""
    seen: set[int] = set()
    todo = [v.loc for v in roots if isinstance(v, Loc)]
    while todo:
        loc = todo.pop()
        if loc in seen:
            continue
        seen.add(loc)
        todo.extend(v.loc for v in s.heap[loc].fields if isinstance(v, Loc))
    return seen


def check_actor_isolation(s: Store) -> bool:
    """True iff no two unfinished actors can reach a common heap location."""
    live = [aid for aid, a in sorted(s.actors.items()) if a.status is not Status.DONE]
    closures = {aid: reachable(s, actor_roots(s, aid)) for aid in live}
    return all(closures[a].isdisjoint(closures[b]) for a, b in combinations(live, 2))
