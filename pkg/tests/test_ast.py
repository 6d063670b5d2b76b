from gradcap.ast import (
    Capability,
    Let,
    Loc,
    Permission,
    Program,
    Val,
    Var,
    erase,
    free_vars,
    validate_program,
)
from gradcap.parser import parse_expr, parse_program

from .conftest import CORPUS_NAMES, load_corpus


def test_unknown_class_is_reported():
    diags = validate_program(parse_program("main { new D() }"))
    assert [d.message for d in diags] == ["unknown class D"]


def test_duplicate_field_is_reported():
    diags = validate_program(parse_program("class C(f, f) {} main { unit }"))
    assert len(diags) == 1
    assert "duplicate field f" in diags[0].message


def test_duplicate_method_and_param():
    src = "class C() { method m(x, x) { x } method m() { unit } } main { unit }"
    messages = sorted(d.message for d in validate_program(parse_program(src)))
    assert messages == ["duplicate method m in class C", "duplicate parameter x in method C.m"]


def test_duplicate_class():
    diags = validate_program(parse_program("class C() {} class C() {} main { unit }"))
    assert [d.message for d in diags] == ["duplicate class C"]


def test_this_outside_method():
    diags = validate_program(parse_program("main { this }"))
    assert [d.message for d in diags] == ["this used outside a method body"]


def test_free_variables():
    assert [d.message for d in validate_program(parse_program("main { x }"))] == ["unbound variable x in main"]
    src = "class C() { method m(a) { b } } main { unit }"
    assert [d.message for d in validate_program(parse_program(src))] == ["unbound variable b in C.m"]


def test_arity_is_not_checked_statically():
    assert validate_program(parse_program("class C(f) {} main { new C() }")) == []


def test_runtime_values_rejected_in_source():
    p = Program((), Val(Loc(Permission.MOVABLE, 0)))
    assert [d.message for d in validate_program(p)] == ["runtime value in source program"]


def test_moved_filehandle_is_valid():
    assert validate_program(load_corpus("moved_filehandle")) == []


def test_whole_corpus_is_valid():
    for name in CORPUS_NAMES:
        assert validate_program(load_corpus(name)) == [], name


def test_free_vars_respects_let_binders():
    e = parse_expr("let x = y; x.m(z, y)")
    assert free_vars(e) == ["y", "z"]


def test_erase_replaces_every_annotation():
    p = parse_program(
        "class C(lent f, moved g) { lent method m(a: moved) -> lent { let moved y = a; y } }"
        " main { let lent x = new C(unit, unit); x }"
    )
    erased = erase(p)
    cls = erased.classes[0]
    assert {k for _, k in cls.fields} == {Capability.DYN}
    m = cls.methods[0]
    assert (m.recv_cap, m.ret_cap, m.params[0][1]) == (Capability.DYN,) * 3
    assert isinstance(m.body, Let) and m.body.cap is Capability.DYN
    assert erased.main.cap is Capability.DYN
    assert erased.main.body == Var("x")
