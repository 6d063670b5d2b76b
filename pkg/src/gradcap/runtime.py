"""Whole-configuration semantics: actors, messages and scheduling.

The runtime owns spawn, send and receive; everything else is delegated to
`eval.step_local`. A run is a sequential simulation: exactly one actor takes
one step at a time, chosen by a SchedulerPolicy.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from . import store as st
from .ast import (
    ActorId,
    Capability,
    ClassTable,
    Err,
    Expr,
    Let,
    Loc,
    Program,
    Receive,
    Send,
    Spawn,
    UNIT,
    Val,
    Value,
    Var,
    free_vars,
)
from .eval import (
    CAPABILITY_VIOLATION,
    NOT_AN_ACTOR,
    UNBOUND_VARIABLE,
    UNINITIALIZED_USE,
    ActorFault,
    Done,
    Faulted,
    MoveObserver,
    NeedsRuntime,
    Stepped,
    decompose,
    plug,
    step_local,
    substitute,
    use_as,
)
from .printer import print_expr
from .store import ActorState, CapabilityViolation, Fault, Status, Store

FAULT_RULE = "Fault"

RULES = (
    "E-NewClass",
    "E-VarAssignment",
    "E-FieldAccess",
    "E-Assignment",
    "E-Variable",
    "E-MethodCall",
    "E-Spawn",
    "E-Send",
    "E-Receive",
    FAULT_RULE,
)


class Reason(enum.Enum):
    ALL_DONE = "AllDone"
    FAULT_STOP = "FaultStop"
    DEADLOCK = "Deadlock"
    STEP_LIMIT = "StepLimit"


@dataclass(frozen=True)
class RoundRobin:
    pass


@dataclass(frozen=True)
class SeededRandom:
    seed: int = 0


@dataclass(frozen=True)
class Exhaustive:
    max_steps: int = 100_000


SchedulerPolicy = RoundRobin | SeededRandom | Exhaustive


@dataclass(frozen=True)
class TraceEvent:
    step: int
    actor: int
    rule: str
    redex: str
    delta: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {"step": self.step, "actor": self.actor, "rule": self.rule, "redex": self.redex, "delta": self.delta}


@dataclass(frozen=True)
class RunOutcome:
    store: Store
    reason: Reason
    steps: int

    @property
    def actors(self) -> dict[int, ActorState]:
        return dict(sorted(self.store.actors.items()))

    def faults(self) -> list[Fault]:
        return [a.fault for a in self.actors.values() if a.fault is not None]

    def summary(self) -> dict[str, Any]:
        """JSON-ready outcome: reason, step count and each actor's terminal status."""
        return {
            "reason": self.reason.value,
            "steps": self.steps,
            "exit_code": exit_code(self),
            "actors": {str(a.id): actor_summary(a) for a in self.actors.values()},
        }


def actor_summary(a: ActorState) -> dict[str, Any]:
    d: dict[str, Any] = {"status": a.status.value}
    if a.fault is not None:
        d["fault"] = a.fault.kind
        d["line"] = a.fault.line
    return d


# Exit code per fault kind; anything unlisted maps to OTHER_FAULT.
EXIT_OK, EXIT_USAGE, EXIT_CAPABILITY, EXIT_UNINIT, EXIT_DEADLOCK, EXIT_STEP_LIMIT, EXIT_OTHER_FAULT = range(7)


def exit_code_for(fault_kinds: list[str], reason: Reason) -> int:
    """The lowest applicable exit code, or EXIT_OK when nothing went wrong."""
    codes = set()
    for kind in fault_kinds:
        codes.add({CAPABILITY_VIOLATION: EXIT_CAPABILITY, UNINITIALIZED_USE: EXIT_UNINIT}.get(kind, EXIT_OTHER_FAULT))
    if reason is Reason.DEADLOCK:
        codes.add(EXIT_DEADLOCK)
    if reason is Reason.STEP_LIMIT:
        codes.add(EXIT_STEP_LIMIT)
    return min(codes, default=EXIT_OK)


def exit_code(outcome: RunOutcome) -> int:
    return exit_code_for([f.kind for f in outcome.faults()], outcome.reason)


# ---------------------------------------------------------------- actors


def settle(a: ActorState) -> ActorState:
    """Recompute the status of a live actor from its expression and queue."""
    if a.status in (Status.DONE, Status.FAULTED):
        return a
    d = decompose(a.expr)
    if d is None:
        status = Status.DONE
    elif isinstance(d[1], Receive) and not a.queue:
        status = Status.BLOCKED
    else:
        status = Status.RUNNABLE
    return a if status is a.status else replace(a, status=status)


def initial_store(p: Program) -> Store:
    s = Store(next_actor=1)
    return s.with_actor(settle(ActorState(0, (), p.main)))


def spawn_actor(
    s: Store, body: Expr, observer: MoveObserver | None = None
) -> tuple[Store, int]:
    """Start a new actor running `body`; its free variables move with it.

    Every captured value is moved out of the rest of the store first, then
    fresh names bound to the original values are handed to the child. Raises
    CapabilityViolation if a capture is an unmov location.
    """
    names = free_vars(body)
    originals = []
    for x in names:
        v = s.lookup(x)
        if v is None:
            raise ActorFault(UNBOUND_VARIABLE, f"unbound variable {x}")
        originals.append(v)
    for v in originals:
        s = use_as(s, Capability.MOVED, v, observer)
    mapping = {}
    for x, v in zip(names, originals):
        s, mapping[x] = st.bind_fresh(s, x, v)
    aid = s.next_actor
    s = replace(s, next_actor=aid + 1)
    child = settle(ActorState(aid, (), substitute(body, mapping)))
    return s.with_actor(child), aid


def deliver_send(
    s: Store, target: Value, payload: Value, lifo: bool = False, observer: MoveObserver | None = None
) -> Store:
    """Move `payload` out of the store and enqueue it at `target`.

    Messages join the tail of the queue; with `lifo` they are pushed on the
    head instead, which is the literal reading of the send rule.
    """
    if isinstance(target, Err):
        raise ActorFault(UNINITIALIZED_USE, f"send to uninitialised reference {target}")
    if not isinstance(target, ActorId):
        raise ActorFault(NOT_AN_ACTOR, f"send to non-actor {target}")
    s = use_as(s, Capability.MOVED, payload, observer)
    dest = s.actors[target.id]
    queue = (payload,) + dest.queue if lifo else dest.queue + (payload,)
    return s.with_actor(settle(replace(dest, queue=queue)))


def try_receive(a: ActorState) -> tuple[ActorState, Value] | None:
    """Dequeue the head message into the receive hole, or None if the queue is empty."""
    if not a.queue:
        return None
    ctx, _ = decompose(a.expr)
    v, rest = a.queue[0], a.queue[1:]
    return replace(a, queue=rest, expr=plug(ctx, Val(v))), v


# ---------------------------------------------------------------- stepping


def runnable(s: Store) -> list[int]:
    return [aid for aid, a in sorted(s.actors.items()) if a.status is Status.RUNNABLE]


def _bound_since(before: Store, after: Store) -> list[str]:
    return list(after.bindings[len(before.bindings):])


class _MoveLog:
    def __init__(self, inner: MoveObserver | None):
        self.inner = inner
        self.erred_vars: list[str] = []
        self.erred_fields: list[list[int]] = []

    def __call__(self, before: Store, after: Store, root: Value) -> None:
        if self.inner is not None:
            self.inner(before, after, root)
        if after.vars is not before.vars:
            for x, v in before.vars.items():
                if isinstance(v, Loc) and isinstance(after.vars[x], Err):
                    self.erred_vars.append(x)
        for loc, rec in before.heap.items():
            new = after.heap[loc]
            if new is not rec:
                for i, (old_v, new_v) in enumerate(zip(rec.fields, new.fields)):
                    if isinstance(old_v, Loc) and isinstance(new_v, Err):
                        self.erred_fields.append([loc, i])


def step_actor(
    s: Store,
    aid: int,
    ct: ClassTable,
    step: int = 0,
    lifo: bool = False,
    observer: MoveObserver | None = None,
) -> tuple[Store, TraceEvent]:
    """Take exactly one step of actor `aid`, which must be runnable."""
    actor = s.actors[aid]
    log = _MoveLog(observer)
    result = step_local(s, actor.expr, ct, log)
    delta: dict[str, Any] = {}
    before = s

    if isinstance(result, Stepped):
        s = result.store
        actor = replace(actor, expr=result.expr)
        rule, redex = result.rule, result.redex
    elif isinstance(result, NeedsRuntime):
        redex = result.redex
        try:
            if isinstance(redex, Spawn):
                rule = "E-Spawn"
                s, child = spawn_actor(s, redex.body, log)
                actor = replace(s.actors[aid], expr=plug(result.context, Val(ActorId(child), span=redex.span)))
                delta["spawned"] = child
            elif isinstance(redex, Send):
                rule = "E-Send"
                target, payload = redex.target.value, redex.payload.value
                s = deliver_send(s, target, payload, lifo, log)
                actor = replace(s.actors[aid], expr=plug(result.context, Val(UNIT, span=redex.span)))
                delta["enqueued"] = {"to": target.id, "value": str(payload)}
            else:
                rule = "E-Receive"
                got = try_receive(actor)
                if got is None:
                    raise RuntimeError(f"actor {aid} scheduled while blocked on receive")
                actor, v = got
                delta["dequeued"] = str(v)
        except ActorFault as f:
            return _fault(s, aid, Fault(f.kind, f.detail, redex.span), redex, step)
        except CapabilityViolation as cv:
            return _fault(s, aid, Fault(CAPABILITY_VIOLATION, str(cv), redex.span), redex, step)
    elif isinstance(result, Faulted):
        return _fault(s, aid, result.fault, result.redex, step)
    else:
        assert isinstance(result, Done)
        raise RuntimeError(f"actor {aid} scheduled after finishing")

    s = s.with_actor(settle(actor))
    bound = _bound_since(before, s)
    if bound:
        delta["bound"] = bound
    if s.next_loc != before.next_loc:
        delta["allocated"] = list(range(before.next_loc, s.next_loc))
    if log.erred_vars:
        delta["erred_vars"] = sorted(log.erred_vars)
    if log.erred_fields:
        delta["erred_fields"] = sorted(log.erred_fields)
    return s, TraceEvent(step, aid, rule, redex_summary(redex), delta)


def redex_summary(r: Expr) -> str:
    if isinstance(r, Let):
        # The body is not part of the redex proper.
        return print_expr(replace(r, body=Var("...")))
    return print_expr(r)


def _fault(s: Store, aid: int, fault: Fault, redex: Expr, step: int) -> tuple[Store, TraceEvent]:
    # The store is left as it was before the faulting redex.
    a = replace(s.actors[aid], status=Status.FAULTED, fault=fault)
    delta = {"fault": fault.kind, "detail": fault.detail}
    return s.with_actor(a), TraceEvent(step, aid, FAULT_RULE, redex_summary(redex), delta)


def classify(s: Store) -> Reason:
    statuses = [a.status for a in s.actors.values()]
    if Status.BLOCKED in statuses:
        return Reason.DEADLOCK
    if all(x is Status.DONE for x in statuses):
        return Reason.ALL_DONE
    return Reason.FAULT_STOP


@dataclass
class Scheduler:
    """Chooses which runnable actor steps next."""

    policy: SchedulerPolicy
    last: int = -1
    rng: random.Random | None = None

    def __post_init__(self):
        if isinstance(self.policy, SeededRandom):
            self.rng = random.Random(self.policy.seed)

    def choose(self, ready: list[int]) -> int:
        if isinstance(self.policy, SeededRandom):
            pick = self.rng.choice(ready)
        elif isinstance(self.policy, RoundRobin):
            pick = next((a for a in ready if a > self.last), ready[0])
        else:
            raise ValueError("exhaustive exploration supplies its own choices; use explore_exhaustive")
        self.last = pick
        return pick


def scheduler_step(
    s: Store,
    scheduler: Scheduler,
    ct: ClassTable,
    step: int = 0,
    lifo: bool = False,
    observer: MoveObserver | None = None,
) -> tuple[Store, TraceEvent] | None:
    """One scheduling decision plus one actor step; None when nothing can run."""
    ready = runnable(s)
    if not ready:
        return None
    return step_actor(s, scheduler.choose(ready), ct, step, lifo, observer)


def run(
    p: Program,
    policy: SchedulerPolicy = RoundRobin(),
    max_steps: int = 100_000,
    *,
    lifo: bool = False,
    fail_fast: bool = False,
    observer: MoveObserver | None = None,
    on_step: Callable[[Store, TraceEvent], None] | None = None,
) -> tuple[RunOutcome, list[TraceEvent]]:
    """Run `p` from a single main actor until quiescence, a fault (with
    `fail_fast`), or `max_steps` steps."""
    ct = p.class_table
    s = initial_store(p)
    scheduler = Scheduler(policy)
    trace: list[TraceEvent] = []
    for n in itertools.count():
        if n >= max_steps:
            reason = Reason.STEP_LIMIT if runnable(s) else classify(s)
            return RunOutcome(s, reason, n), trace
        stepped = scheduler_step(s, scheduler, ct, n, lifo, observer)
        if stepped is None:
            return RunOutcome(s, classify(s), n), trace
        s, event = stepped
        trace.append(event)
        if on_step is not None:
            on_step(s, event)
        if fail_fast and event.rule == FAULT_RULE:
            return RunOutcome(s, Reason.FAULT_STOP, n + 1), trace
    raise AssertionError("unreachable")
