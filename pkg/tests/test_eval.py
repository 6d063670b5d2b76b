import pytest

from gradcap.ast import (
    UNIT,
    ActorId,
    Call,
    Capability,
    Err,
    FieldGet,
    FieldSet,
    Hole,
    Let,
    Loc,
    New,
    Permission,
    Receive,
    Send,
    Spawn,
    This,
    Val,
    Var,
)
from gradcap.eval import (
    ARITY_MISMATCH,
    CAPABILITY_VIOLATION,
    NOT_AN_OBJECT,
    RETURN_VAR,
    UNINITIALIZED_USE,
    UNKNOWN_FIELD,
    UNKNOWN_METHOD,
    Done,
    Faulted,
    NeedsRuntime,
    Stepped,
    decompose,
    plug,
    step_local,
    substitute,
)
from gradcap.parser import parse_expr, parse_program
from gradcap.store import ObjectRecord, Store

M, U = Permission.MOVABLE, Permission.UNMOV
H = Hole()

CLASSES = parse_program(
    """
    class File() { method close() { unit } }
    class Box(lent f, g) { method get() { this.f } method put(x: moved) { this.g := x } }
    class Pair(moved a, b) {}
    main { unit }
    """
).class_table


def loc(n, perm=M):
    return Val(Loc(perm, n))


# ------------------------------------------------------------ decompose


@pytest.mark.parametrize(
    "expr, ctx, redex",
    [
        (Var("x"), H, Var("x")),
        (FieldGet(Var("x"), "f"), FieldGet(H, "f"), Var("x")),
        (Call(loc(0), "m", (Var("a"), Var("b"))), Call(loc(0), "m", (H, Var("b"))), Var("a")),
        (Call(loc(0), "m", (Val(UNIT), Var("b"))), Call(loc(0), "m", (Val(UNIT), H)), Var("b")),
        (FieldSet(Var("r"), "f", Var("v")), FieldSet(H, "f", Var("v")), Var("r")),
        (FieldSet(loc(0), "f", Var("v")), FieldSet(loc(0), "f", H), Var("v")),
        (Send(Var("t"), Var("p")), Send(H, Var("p")), Var("t")),
        (Send(Val(ActorId(1)), Var("p")), Send(Val(ActorId(1)), H), Var("p")),
        (Let(Capability.DYN, "x", Var("y"), Var("x")), Let(Capability.DYN, "x", H, Var("x")), Var("y")),
        (New("C", (Val(UNIT), Var("z"))), New("C", (Val(UNIT), H)), Var("z")),
        (Spawn(Var("x")), H, Spawn(Var("x"))),
        (FieldGet(Receive(), "f"), FieldGet(H, "f"), Receive()),
    ],
)
def test_decompose(expr, ctx, redex):
    assert decompose(expr) == (ctx, redex)
    assert plug(ctx, redex) == expr


def test_values_do_not_decompose():
    assert decompose(Val(UNIT)) is None


def test_let_body_is_not_evaluated_before_rhs():
    e = parse_expr("let x = a.f; b.g")
    _, r = decompose(e)
    assert r == Var("a")


# ----------------------------------------------------------- substitute


def test_substitute_respects_shadowing():
    e = parse_expr("x.m((let x = y; x))")
    out = substitute(e, {"x": "x#1", "y": UNIT})
    assert out == Call(Var("x#1"), "m", (Let(Capability.DYN, "x", Val(UNIT), Var("x")),))


def test_substitute_this_and_spawn_bodies():
    e = FieldSet(This(), "f", Spawn(Var("p")))
    out = substitute(e, {"this": "this#0", "p": "p#1"})
    assert out == FieldSet(Var("this#0"), "f", Spawn(Var("p#1")))


def test_substitute_is_simultaneous():
    assert substitute(parse_expr("a.m(b)"), {"a": "b", "b": "a"}) == parse_expr("b.m(a)")


# ------------------------------------------------------- sequential steps


def step(s, src_or_expr):
    e = parse_expr(src_or_expr) if isinstance(src_or_expr, str) else src_or_expr
    return step_local(s, e, CLASSES)


def test_variable_lookup():
    s = Store(vars={"x": Loc(M, 0)}, heap={0: ObjectRecord("File", ())})
    r = step(s, "x")
    assert isinstance(r, Stepped) and r.rule == "E-Variable"
    assert r.expr == loc(0) and r.store is s


def test_reading_an_erred_variable_is_not_a_fault():
    s = Store(vars={"x": Err(M)})
    r = step(s, "x")
    assert isinstance(r, Stepped) and r.expr == Val(Err(M))


def test_field_access_on_err_is_uninitialized_use():
    r = step(Store(), FieldGet(Val(Err(M)), "f"))
    assert isinstance(r, Faulted) and r.fault.kind == UNINITIALIZED_USE


def test_call_on_err_is_uninitialized_use():
    r = step(Store(), Call(Val(Err(U)), "close", ()))
    assert isinstance(r, Faulted) and r.fault.kind == UNINITIALIZED_USE


def test_new_allocates_and_casts_fields():
    s = Store(heap={0: ObjectRecord("File", ())})
    r = step(s, New("Box", (loc(0), loc(0))))
    assert r.rule == "E-NewClass"
    assert r.expr == loc(1)
    # lent field stores an unmov reference; the dyn field keeps movable.
    assert r.store.heap[1] == ObjectRecord("Box", (Loc(U, 0), Loc(M, 0)))


def test_new_with_moved_field_moves_the_argument():
    s = Store(vars={"h": Loc(M, 0)}, heap={0: ObjectRecord("File", ())})
    r = step(s, New("Pair", (loc(0), Val(UNIT))))
    assert r.store.vars["h"] == Err(M)
    assert r.store.heap[1].fields == (Loc(M, 0), UNIT)


def test_new_arity_mismatch():
    r = step(Store(), New("Pair", ()))
    assert isinstance(r, Faulted) and r.fault.kind == ARITY_MISMATCH


def test_let_binds_a_fresh_name():
    s = Store(heap={0: ObjectRecord("File", ())})
    r = step(s, Let(Capability.LENT, "x", loc(0), Var("x")))
    assert r.rule == "E-VarAssignment"
    (name,) = r.store.bindings
    assert name.startswith("x#")
    assert r.store.vars[name] == Loc(U, 0)
    assert r.expr == Var(name)


def test_let_moved_on_unmov_is_a_capability_violation():
    r = step(Store(heap={0: ObjectRecord("File", ())}), Let(Capability.MOVED, "x", loc(0, U), Var("x")))
    assert isinstance(r, Faulted) and r.fault.kind == CAPABILITY_VIOLATION


def test_let_moved_errs_previous_aliases():
    s = Store(vars={"a": Loc(M, 0)}, heap={0: ObjectRecord("File", ())})
    r = step(s, Let(Capability.MOVED, "x", loc(0), Var("x")))
    assert r.store.vars["a"] == Err(M)
    assert r.store.vars[r.store.bindings[0]] == Loc(M, 0)


def test_field_access_and_assignment():
    s = Store(heap={0: ObjectRecord("Box", (UNIT, ActorId(2)))})
    r = step(s, FieldGet(loc(0), "g"))
    assert r.rule == "E-FieldAccess" and r.expr == Val(ActorId(2))
    r = step(s, FieldSet(loc(0), "f", Val(ActorId(5))))
    assert r.rule == "E-Assignment" and r.expr == Val(UNIT)
    assert r.store.heap[0].fields == (ActorId(5), ActorId(2))


def test_assignment_to_lent_field_demotes():
    s = Store(heap={0: ObjectRecord("Box", (UNIT, UNIT)), 1: ObjectRecord("File", ())})
    r = step(s, FieldSet(loc(0), "f", loc(1)))
    assert r.store.heap[0].fields[0] == Loc(U, 1)


def test_unknown_field_and_method():
    s = Store(heap={0: ObjectRecord("File", ())})
    assert step(s, FieldGet(loc(0), "nope")).fault.kind == UNKNOWN_FIELD
    assert step(s, Call(loc(0), "nope", ())).fault.kind == UNKNOWN_METHOD


def test_non_object_receiver():
    assert step(Store(), FieldGet(Val(UNIT), "f")).fault.kind == NOT_AN_OBJECT


def test_method_call_binds_params_and_this():
    s = Store(heap={0: ObjectRecord("Box", (UNIT, UNIT)), 1: ObjectRecord("File", ())})
    s = Store(vars={"h": Loc(M, 1)}, heap=s.heap)
    r = step(s, Call(loc(0), "put", (loc(1),)))
    assert r.rule == "E-MethodCall"
    p, this = r.store.bindings
    assert p.startswith("x#") and this.startswith("this#")
    # the parameter is `moved`, so the caller's alias is gone
    assert r.store.vars["h"] == Err(M)
    assert r.store.vars[p] == Loc(M, 1)
    assert r.expr == Let(Capability.DYN, RETURN_VAR, FieldSet(Var(this), "g", Var(p)), Var(RETURN_VAR))


def test_stepping_a_value_is_done():
    assert step_local(Store(), Val(UNIT), CLASSES) == Done(UNIT)


@pytest.mark.parametrize("e", [Spawn(Val(UNIT)), Receive(), Send(Val(ActorId(0)), Val(UNIT))])
def test_actor_forms_need_the_runtime(e):
    r = step(Store(), FieldGet(e, "f"))
    assert isinstance(r, NeedsRuntime) and r.redex == e and r.context == FieldGet(H, "f")


def test_full_local_evaluation():
    e = parse_expr("let b = new Box(new File(), unit); b.get().close()")
    s = Store()
    for _ in range(50):
        r = step_local(s, e, CLASSES)
        if isinstance(r, Done):
            break
        assert isinstance(r, Stepped), r
        s, e = r.store, r.expr
    assert r == Done(UNIT)
