"""Abstract syntax, runtime values, and the class table.

Every node is a frozen dataclass. Source spans ride along on each node but are
excluded from equality, so two parses of the same text compare equal no matter
where they came from.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Union


class Capability(enum.Enum):
    DYN = "?"
    MOVED = "moved"
    LENT = "lent"

    def __str__(self) -> str:
        return self.value


class Permission(enum.Enum):
    MOVABLE = "movable"
    UNMOV = "unmov"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class SourceSpan:
    """Half-open region of a source file; lines and columns are 1-based."""

    file: str
    start: tuple[int, int]
    end: tuple[int, int]

    def __str__(self) -> str:
        return f"{self.file}:{self.start[0]}:{self.start[1]}"


# ------------------------------------------------------------------ values


@dataclass(frozen=True)
class Unit:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class ActorId:
    id: int

    def __str__(self) -> str:
        return f"<actor {self.id}>"


@dataclass(frozen=True)
class Loc:
    perm: Permission
    loc: int

    def __str__(self) -> str:
        return f"<{self.perm} @{self.loc}>"


@dataclass(frozen=True)
class Err:
    perm: Permission

    def __str__(self) -> str:
        return f"<{self.perm} err>"


Value = Union[Unit, ActorId, Loc, Err]

UNIT = Unit()


# ------------------------------------------------------------- expressions


def _span() -> SourceSpan | None:
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Call(Expr):
    recv: Expr
    method: str
    args: tuple[Expr, ...]
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class FieldGet(Expr):
    recv: Expr
    field: str
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class FieldSet(Expr):
    recv: Expr
    field: str
    rhs: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Let(Expr):
    cap: Capability
    var: str
    rhs: Expr
    body: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class New(Expr):
    cls: str
    args: tuple[Expr, ...]
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Spawn(Expr):
    body: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Receive(Expr):
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Send(Expr):
    target: Expr
    payload: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Val(Expr):
    value: Value
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class This(Expr):
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Hole(Expr):
    """The slot of an evaluation context. Never produced by the parser."""


# Names the parser invents for `e1; e2` sequencing carry this prefix. It is not
# a legal identifier character, so user code can never collide with them.
HIDDEN_PREFIX = "%"


def is_hidden(name: str) -> bool:
    return name.startswith(HIDDEN_PREFIX)


# ------------------------------------------------------------ declarations


@dataclass(frozen=True)
class MethodDecl:
    recv_cap: Capability
    name: str
    params: tuple[tuple[str, Capability], ...]
    ret_cap: Capability
    body: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class ClassDecl:
    name: str
    fields: tuple[tuple[str, Capability], ...]
    methods: tuple[MethodDecl, ...]
    span: SourceSpan | None = _span()

    def field_index(self, name: str) -> int | None:
        for i, (fname, _) in enumerate(self.fields):
            if fname == name:
                return i
        return None

    def method(self, name: str) -> MethodDecl | None:
        for m in self.methods:
            if m.name == name:
                return m
        return None


ClassTable = dict[str, ClassDecl]


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...]
    main: Expr

    @property
    def class_table(self) -> ClassTable:
        # First declaration wins; validate_program reports duplicates.
        table: ClassTable = {}
        for cls in self.classes:
            table.setdefault(cls.name, cls)
        return table


# --------------------------------------------------------------- traversal


def children(e: Expr) -> Iterator[Expr]:
    """Direct subexpressions in evaluation order."""
    if isinstance(e, Call):
        yield e.recv
        yield from e.args
    elif isinstance(e, FieldGet):
        yield e.recv
    elif isinstance(e, FieldSet):
        yield e.recv
        yield e.rhs
    elif isinstance(e, Let):
        yield e.rhs
        yield e.body
    elif isinstance(e, New):
        yield from e.args
    elif isinstance(e, Spawn):
        yield e.body
    elif isinstance(e, Send):
        yield e.target
        yield e.payload


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)


def free_vars(e: Expr) -> list[str]:
    """Free variable names in order of first occurrence."""
    seen: dict[str, None] = {}

    def go(e: Expr, bound: frozenset[str]) -> None:
        if isinstance(e, Var):
            if e.name not in bound:
                seen.setdefault(e.name, None)
        elif isinstance(e, Let):
            go(e.rhs, bound)
            go(e.body, bound | {e.var})
        else:
            for c in children(e):
                go(c, bound)

    go(e, frozenset())
    return list(seen)


def is_value(e: Expr) -> bool:
    return isinstance(e, Val)


# -------------------------------------------------------------- validation


@dataclass(frozen=True)
class Diagnostic:
    span: SourceSpan | None
    message: str

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return where + self.message


def validate_program(p: Program) -> list[Diagnostic]:
    """Check the well-formedness invariants of a parsed program.

    Arity of `new` and of method calls is deliberately left to the runtime:
    the calculus is untyped and a mismatch is an ordinary actor fault.
    """
    diags: list[Diagnostic] = []
    known = {c.name for c in p.classes}
    seen_classes: set[str] = set()
    for cls in p.classes:
        if cls.name in seen_classes:
            diags.append(Diagnostic(cls.span, f"duplicate class {cls.name}"))
        seen_classes.add(cls.name)
        _check_distinct(diags, cls.span, "field", [f for f, _ in cls.fields], f"class {cls.name}")
        _check_distinct(diags, cls.span, "method", [m.name for m in cls.methods], f"class {cls.name}")
        for m in cls.methods:
            params = [x for x, _ in m.params]
            _check_distinct(diags, m.span, "parameter", params, f"method {cls.name}.{m.name}")
            _check_expr(diags, m.body, known, in_method=True)
            for name in free_vars(m.body):
                if name not in params:
                    diags.append(Diagnostic(m.span, f"unbound variable {name} in {cls.name}.{m.name}"))
    _check_expr(diags, p.main, known, in_method=False)
    for name in free_vars(p.main):
        diags.append(Diagnostic(_first_use(p.main, name), f"unbound variable {name} in main"))
    return diags


def seen_classes_all(p: Program) -> set[str]:
    return {c.name for c in p.classes}


def _check_distinct(diags, span, what, names, where) -> None:
    seen: set[str] = set()
    for n in names:
        if n in seen:
            diags.append(Diagnostic(span, f"duplicate {what} {n} in {where}"))
        seen.add(n)


def _check_expr(diags: list[Diagnostic], body: Expr, classes: set[str], in_method: bool) -> None:
    for e in walk(body):
        if isinstance(e, New) and e.cls not in classes:
            diags.append(Diagnostic(e.span, f"unknown class {e.cls}"))
        elif isinstance(e, This) and not in_method:
            diags.append(Diagnostic(e.span, "this used outside a method body"))
        elif isinstance(e, Val) and isinstance(e.value, (Loc, Err)):
            diags.append(Diagnostic(e.span, "runtime value in source program"))
        elif isinstance(e, Hole):
            diags.append(Diagnostic(None, "evaluation hole in source program"))


def _first_use(e: Expr, name: str) -> SourceSpan | None:
    for sub in walk(e):
        if isinstance(sub, Var) and sub.name == name:
            return sub.span
    return None


def erase(p: Program) -> Program:
    """Replace every capability annotation with `?`."""
    from dataclasses import replace

    def go(e: Expr) -> Expr:
        if isinstance(e, Let):
            return replace(e, cap=Capability.DYN, rhs=go(e.rhs), body=go(e.body))
        if isinstance(e, Call):
            return replace(e, recv=go(e.recv), args=tuple(go(a) for a in e.args))
        if isinstance(e, FieldGet):
            return replace(e, recv=go(e.recv))
        if isinstance(e, FieldSet):
            return replace(e, recv=go(e.recv), rhs=go(e.rhs))
        if isinstance(e, New):
            return replace(e, args=tuple(go(a) for a in e.args))
        if isinstance(e, Spawn):
            return replace(e, body=go(e.body))
        if isinstance(e, Send):
            return replace(e, target=go(e.target), payload=go(e.payload))
        return e

    dyn = Capability.DYN
    classes = tuple(
        replace(
            c,
            fields=tuple((f, dyn) for f, _ in c.fields),
            methods=tuple(
                replace(
                    m,
                    recv_cap=dyn,
                    ret_cap=dyn,
                    params=tuple((x, dyn) for x, _ in m.params),
                    body=go(m.body),
                )
                for m in c.methods
            ),
        )
        for c in p.classes
    )
    return Program(classes, go(p.main))
