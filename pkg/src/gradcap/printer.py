"""Pretty-printing back to `.gcap` syntax.

`parse_program(print_program(p)) == p` for every program the parser can
produce. Runtime-only forms (locations, errors, holes) print in an
angle-bracket notation that is readable in traces but not parseable.
"""

from __future__ import annotations

from .ast import (
    Call,
    Capability,
    ClassDecl,
    Expr,
    FieldGet,
    FieldSet,
    Hole,
    Let,
    MethodDecl,
    New,
    Program,
    Receive,
    Send,
    Spawn,
    This,
    Val,
    Var,
    is_hidden,
)


def _cap(k: Capability, trailing: str = " ") -> str:
    return "" if k is Capability.DYN else f"{k.value}{trailing}"


def print_expr(e: Expr) -> str:
    """Print at sequence level: lets and `;` need no parentheses here."""
    if isinstance(e, Let):
        if is_hidden(e.var) and e.cap is Capability.DYN:
            return f"{_operand(e.rhs)}; {print_expr(e.body)}"
        return f"let {_cap(e.cap)}{e.var} = {_operand(e.rhs)}; {print_expr(e.body)}"
    return _operand(e)


def _operand(e: Expr) -> str:
    """Print at `expr` level, parenthesising sequences."""
    if isinstance(e, Let):
        return f"({print_expr(e)})"
    if isinstance(e, FieldSet):
        return f"{_postfix(e.recv)}.{e.field} := {_operand(e.rhs)}"
    return _postfix(e)


def _postfix(e: Expr) -> str:
    """Print in receiver position, where only postfix chains and atoms fit."""
    if isinstance(e, Call):
        args = ", ".join(_operand(a) for a in e.args)
        return f"{_postfix(e.recv)}.{e.method}({args})"
    if isinstance(e, FieldGet):
        return f"{_postfix(e.recv)}.{e.field}"
    if isinstance(e, (Let, FieldSet)):
        return f"({print_expr(e)})"
    if isinstance(e, New):
        return f"new {e.cls}({', '.join(_operand(a) for a in e.args)})"
    if isinstance(e, Spawn):
        return f"spawn {{ {print_expr(e.body)} }}"
    if isinstance(e, Receive):
        return "receive"
    if isinstance(e, Send):
        return f"send({_operand(e.target)}, {_operand(e.payload)})"
    if isinstance(e, Val):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, This):
        return "this"
    if isinstance(e, Hole):
        return "[]"
    raise TypeError(f"not an expression: {e!r}")


def _method(m: MethodDecl) -> str:
    params = ", ".join(x if k is Capability.DYN else f"{x}: {k.value}" for x, k in m.params)
    ret = "" if m.ret_cap is Capability.DYN else f" -> {m.ret_cap.value}"
    return f"  {_cap(m.recv_cap)}method {m.name}({params}){ret} {{ {print_expr(m.body)} }}"


def print_class(c: ClassDecl) -> str:
    fields = ", ".join(f"{_cap(k)}{f}" for f, k in c.fields)
    lines = [f"class {c.name}({fields}) {{"]
    lines.extend(_method(m) for m in c.methods)
    lines.append("}")
    return "\n".join(lines)


def print_program(p: Program) -> str:
    parts = [print_class(c) for c in p.classes]
    parts.append(f"main {{ {print_expr(p.main)} }}")
    return "\n".join(parts) + "\n"
