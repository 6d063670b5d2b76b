"""Single-actor small-step reduction.

An expression is split into an evaluation context (an Expr holding one Hole)
and the redex sitting in that hole. The sequential rules rewrite the redex;
spawn, send and receive are handed back to the runtime as NeedsRuntime.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Union

from . import store as st
from .ast import (
    Call,
    Capability,
    ClassTable,
    Err,
    Expr,
    FieldGet,
    FieldSet,
    Hole,
    Let,
    Loc,
    New,
    Receive,
    Send,
    Spawn,
    This,
    UNIT,
    Val,
    Value,
    Var,
)
from .printer import print_expr
from .store import CapabilityViolation, Fault, ObjectRecord, Store

HOLE = Hole()

# Fault kinds.
UNINITIALIZED_USE = "UninitializedUse"
CAPABILITY_VIOLATION = "CapabilityViolation"
UNKNOWN_CLASS = "UnknownClass"
UNKNOWN_METHOD = "UnknownMethod"
UNKNOWN_FIELD = "UnknownField"
ARITY_MISMATCH = "ArityMismatch"
NOT_AN_OBJECT = "NotAnObject"
NOT_AN_ACTOR = "NotAnActor"
UNBOUND_VARIABLE = "UnboundVariable"

FAULT_KINDS = (
    UNINITIALIZED_USE,
    CAPABILITY_VIOLATION,
    UNKNOWN_CLASS,
    UNKNOWN_METHOD,
    UNKNOWN_FIELD,
    ARITY_MISMATCH,
    NOT_AN_OBJECT,
    NOT_AN_ACTOR,
    UNBOUND_VARIABLE,
)

# The binder E-MethodCall wraps around a method body. The body is the let's
# right-hand side, outside the binder's scope, so the name cannot capture.
RETURN_VAR = "$ret"

# Called as observer(before, after, root) after every `moved` application.
MoveObserver = Callable[[Store, Store, Value], None]


# ------------------------------------------------------------ step results


@dataclass(frozen=True)
class Stepped:
    store: Store
    expr: Expr
    rule: str
    redex: Expr


@dataclass(frozen=True)
class Faulted:
    fault: Fault
    redex: Expr


@dataclass(frozen=True)
class NeedsRuntime:
    """A spawn, send or receive redex: `context` must be plugged by the runtime."""

    context: Expr
    redex: Expr


@dataclass(frozen=True)
class Done:
    value: Value


StepResult = Union[Stepped, Faulted, NeedsRuntime, Done]


# ------------------------------------------------------------ decomposition


def decompose(e: Expr) -> tuple[Expr, Expr] | None:
    """Split `e` into (context, redex), or None if `e` is already a value.

    Left to right, call by value: receiver before arguments, send target
    before payload, a let's right-hand side before its body.
    """
    if isinstance(e, Val):
        return None
    if isinstance(e, Call):
        if not isinstance(e.recv, Val):
            ctx, r = decompose(e.recv)
            return replace(e, recv=ctx), r
        for i, a in enumerate(e.args):
            if not isinstance(a, Val):
                ctx, r = decompose(a)
                return replace(e, args=e.args[:i] + (ctx,) + e.args[i + 1:]), r
        return HOLE, e
    if isinstance(e, New):
        for i, a in enumerate(e.args):
            if not isinstance(a, Val):
                ctx, r = decompose(a)
                return replace(e, args=e.args[:i] + (ctx,) + e.args[i + 1:]), r
        return HOLE, e
    if isinstance(e, FieldGet):
        if not isinstance(e.recv, Val):
            ctx, r = decompose(e.recv)
            return replace(e, recv=ctx), r
        return HOLE, e
    if isinstance(e, FieldSet):
        if not isinstance(e.recv, Val):
            ctx, r = decompose(e.recv)
            return replace(e, recv=ctx), r
        if not isinstance(e.rhs, Val):
            ctx, r = decompose(e.rhs)
            return replace(e, rhs=ctx), r
        return HOLE, e
    if isinstance(e, Let):
        if not isinstance(e.rhs, Val):
            ctx, r = decompose(e.rhs)
            return replace(e, rhs=ctx), r
        return HOLE, e
    if isinstance(e, Send):
        if not isinstance(e.target, Val):
            ctx, r = decompose(e.target)
            return replace(e, target=ctx), r
        if not isinstance(e.payload, Val):
            ctx, r = decompose(e.payload)
            return replace(e, payload=ctx), r
        return HOLE, e
    # Var, This, Spawn, Receive are redexes as they stand.
    return HOLE, e


def plug(ctx: Expr, e: Expr) -> Expr:
    """Fill the single hole of `ctx` with `e`."""
    if isinstance(ctx, Hole):
        return e
    if isinstance(ctx, Call):
        if not isinstance(ctx.recv, Val):
            return replace(ctx, recv=plug(ctx.recv, e))
        return replace(ctx, args=_plug_first(ctx.args, e))
    if isinstance(ctx, New):
        return replace(ctx, args=_plug_first(ctx.args, e))
    if isinstance(ctx, FieldGet):
        return replace(ctx, recv=plug(ctx.recv, e))
    if isinstance(ctx, FieldSet):
        if not isinstance(ctx.recv, Val):
            return replace(ctx, recv=plug(ctx.recv, e))
        return replace(ctx, rhs=plug(ctx.rhs, e))
    if isinstance(ctx, Let):
        return replace(ctx, rhs=plug(ctx.rhs, e))
    if isinstance(ctx, Send):
        if not isinstance(ctx.target, Val):
            return replace(ctx, target=plug(ctx.target, e))
        return replace(ctx, payload=plug(ctx.payload, e))
    raise ValueError(f"no hole in {ctx!r}")


def _plug_first(args: tuple[Expr, ...], e: Expr) -> tuple[Expr, ...]:
    for i, a in enumerate(args):
        if not isinstance(a, Val):
            return args[:i] + (plug(a, e),) + args[i + 1:]
    raise ValueError("no hole among arguments")


def redex_of(e: Expr) -> Expr | None:
    d = decompose(e)
    return None if d is None else d[1]


# ------------------------------------------------------------- substitution


def substitute(e: Expr, mapping: Mapping[str, str | Value]) -> Expr:
    """Simultaneously replace free variables (and `this`, keyed as "this").

    A name maps to a Var of the new name; a Value maps to Val.
    """
    if not mapping:
        return e

    def target(name: str, span) -> Expr:
        t = mapping[name]
        return Var(t, span=span) if isinstance(t, str) else Val(t, span=span)

    def go(e: Expr, m: Mapping[str, str | Value]) -> Expr:
        if isinstance(e, Var):
            return target(e.name, e.span) if e.name in m else e
        if isinstance(e, This):
            return target("this", e.span) if "this" in m else e
        if isinstance(e, Let):
            inner = m
            if e.var in m:
                inner = {k: v for k, v in m.items() if k != e.var}
            return replace(e, rhs=go(e.rhs, m), body=go(e.body, inner))
        if isinstance(e, Call):
            return replace(e, recv=go(e.recv, m), args=tuple(go(a, m) for a in e.args))
        if isinstance(e, FieldGet):
            return replace(e, recv=go(e.recv, m))
        if isinstance(e, FieldSet):
            return replace(e, recv=go(e.recv, m), rhs=go(e.rhs, m))
        if isinstance(e, New):
            return replace(e, args=tuple(go(a, m) for a in e.args))
        if isinstance(e, Spawn):
            return replace(e, body=go(e.body, m))
        if isinstance(e, Send):
            return replace(e, target=go(e.target, m), payload=go(e.payload, m))
        return e

    return go(e, mapping)


# -------------------------------------------------------------------- rules


def use_as(s: Store, k: Capability, v: Value, observer: MoveObserver | None = None) -> Store:
    """apply_capability, reporting each `moved` application to `observer`."""
    after = st.apply_capability(s, k, v)
    if observer is not None and k is Capability.MOVED and isinstance(v, Loc):
        observer(s, after, v)
    return after


class ActorFault(Exception):
    """A redex that cannot step; halts the acting actor."""

    def __init__(self, kind: str, detail: str):
        super().__init__(detail)
        self.kind = kind
        self.detail = detail


def _object(s: Store, v: Value, ct: ClassTable, what: str) -> tuple[int, ObjectRecord]:
    if isinstance(v, Err):
        raise ActorFault(UNINITIALIZED_USE, f"{what} on uninitialised reference {v}")
    if not isinstance(v, Loc):
        raise ActorFault(NOT_AN_OBJECT, f"{what} on non-object {v}")
    return v.loc, s.deref(v.loc)


def step_local(
    s: Store, e: Expr, ct: ClassTable, observer: MoveObserver | None = None
) -> StepResult:
    """Take one sequential reduction step of `e` in store `s`."""
    d = decompose(e)
    if d is None:
        return Done(e.value)
    ctx, r = d
    if isinstance(r, (Spawn, Send, Receive)):
        return NeedsRuntime(ctx, r)
    try:
        s2, result, rule = _reduce(s, r, ct, observer)
    except ActorFault as f:
        return Faulted(Fault(f.kind, f.detail, r.span), r)
    except CapabilityViolation as cv:
        return Faulted(Fault(CAPABILITY_VIOLATION, str(cv), r.span), r)
    return Stepped(s2, plug(ctx, result), rule, r)


def _reduce(
    s: Store, r: Expr, ct: ClassTable, observer: MoveObserver | None
) -> tuple[Store, Expr, str]:
    if isinstance(r, Var):
        v = s.lookup(r.name)
        if v is None:
            raise ActorFault(UNBOUND_VARIABLE, f"unbound variable {r.name}")
        return s, Val(v, span=r.span), "E-Variable"

    if isinstance(r, This):
        raise ActorFault(UNBOUND_VARIABLE, "this outside a method body")

    if isinstance(r, New):
        cls = ct.get(r.cls)
        if cls is None:
            raise ActorFault(UNKNOWN_CLASS, f"unknown class {r.cls}")
        if len(r.args) != len(cls.fields):
            raise ActorFault(ARITY_MISMATCH, f"{r.cls} takes {len(cls.fields)} arguments, got {len(r.args)}")
        values = [a.value for a in r.args]
        for (_, k), v in zip(cls.fields, values):
            s = use_as(s, k, v, observer)
        fields = tuple(st.cast(k, v) for (_, k), v in zip(cls.fields, values))
        s, loc = st.alloc(s, ObjectRecord(r.cls, fields))
        return s, Val(Loc(st.Permission.MOVABLE, loc), span=r.span), "E-NewClass"

    if isinstance(r, Let):
        v = r.rhs.value
        s = use_as(s, r.cap, v, observer)
        s, fresh = st.bind_fresh(s, r.var, st.cast(r.cap, v))
        return s, substitute(r.body, {r.var: fresh}), "E-VarAssignment"

    if isinstance(r, FieldGet):
        loc, rec = _object(s, r.recv.value, ct, f"read of .{r.field}")
        i = ct[rec.cls].field_index(r.field)
        if i is None:
            raise ActorFault(UNKNOWN_FIELD, f"{rec.cls} has no field {r.field}")
        return s, Val(rec.fields[i], span=r.span), "E-FieldAccess"

    if isinstance(r, FieldSet):
        loc, rec = _object(s, r.recv.value, ct, f"write of .{r.field}")
        cls = ct[rec.cls]
        i = cls.field_index(r.field)
        if i is None:
            raise ActorFault(UNKNOWN_FIELD, f"{rec.cls} has no field {r.field}")
        k = cls.fields[i][1]
        v = r.rhs.value
        s = use_as(s, k, v, observer)
        s = st.set_field(s, loc, i, st.cast(k, v))
        return s, Val(UNIT, span=r.span), "E-Assignment"

    if isinstance(r, Call):
        recv = r.recv.value
        loc, rec = _object(s, recv, ct, f"call of .{r.method}()")
        m = ct[rec.cls].method(r.method)
        if m is None:
            raise ActorFault(UNKNOWN_METHOD, f"{rec.cls} has no method {r.method}")
        if len(r.args) != len(m.params):
            raise ActorFault(ARITY_MISMATCH, f"{rec.cls}.{m.name} takes {len(m.params)} arguments, got {len(r.args)}")
        values = [a.value for a in r.args]
        for (_, k), v in zip(m.params, values):
            s = use_as(s, k, v, observer)
        s = use_as(s, m.recv_cap, recv, observer)
        mapping: dict[str, str | Value] = {}
        for (x, k), v in zip(m.params, values):
            s, mapping[x] = st.bind_fresh(s, x, st.cast(k, v))
        s, mapping["this"] = st.bind_fresh(s, "this", st.cast(m.recv_cap, recv))
        body = substitute(m.body, mapping)
        return s, Let(m.ret_cap, RETURN_VAR, body, Var(RETURN_VAR), span=r.span), "E-MethodCall"

    raise TypeError(f"not a sequential redex: {print_expr(r)}")
