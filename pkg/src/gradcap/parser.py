"""Recursive-descent parser for `.gcap` source text.

Grammar (an omitted capability means `?`)::

    program   := classdecl* "main" "{" seq "}"
    classdecl := "class" IDENT "(" [field ("," field)*] ")" "{" method* "}"
    field     := [cap] IDENT
    method    := [cap] "method" IDENT "(" [mparam ("," mparam)*] ")" ["->" cap] "{" seq "}"
    mparam    := IDENT [":" cap]
    cap       := "moved" | "lent" | "lend" | "?"
    seq       := "let" [cap] IDENT "=" expr ";" seq
               | expr [";" seq]
    expr      := primary ("." IDENT ("(" [args] ")" | ":=" expr)?)*
    primary   := "spawn" "{" seq "}" | "receive" | "send" "(" expr "," expr ")"
               | "new" IDENT "(" [args] ")" | "unit" | "this" | IDENT
               | "(" seq ")"

`e1; e2` is sugar for `let ? %sN = e1; e2` where `%sN` is a hidden name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    HIDDEN_PREFIX,
    UNIT,
    Call,
    Capability,
    ClassDecl,
    Expr,
    FieldGet,
    FieldSet,
    Let,
    MethodDecl,
    New,
    Program,
    Receive,
    Send,
    SourceSpan,
    Spawn,
    This,
    Val,
    Var,
)

KEYWORDS = {
    "class", "main", "method", "let", "spawn", "receive", "send",
    "new", "unit", "this", "moved", "lent", "lend",
}

_CAPS = {"moved": Capability.MOVED, "lent": Capability.LENT, "lend": Capability.LENT, "?": Capability.DYN}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|->|[(){},.;:=?])
  """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan, expected: frozenset[str] = frozenset()):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span
        self.expected = expected


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "kw", "op", "eof"
    text: str
    span: SourceSpan


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            here = SourceSpan(file, (line, col), (line, col + 1))
            raise ParseError(f"unexpected character {text[pos]!r}", here)
        kind, lexeme = m.lastgroup, m.group()
        end_col = col + len(lexeme)
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "kw"
            if kind in ("ident", "kw", "op"):
                tokens.append(Token(kind, lexeme, SourceSpan(file, (line, col), (line, end_col))))
            col = end_col
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(file, (line, col), (line, col))))
    return tokens


def _join(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    return SourceSpan(a.file, a.start, b.end)


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.tokens = tokenize(text, file)
        self.pos = 0
        self.hidden = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("kw", "op") and self.tok.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(frozenset({text}))
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail(frozenset({"identifier"}))
        return self.advance()

    def fail(self, expected: frozenset[str]):
        got = self.tok.text or "end of input"
        want = ", ".join(sorted(expected))
        raise ParseError(f"expected {want}, got {got!r}", self.tok.span, expected)

    def optional_cap(self) -> Capability:
        if self.at(*_CAPS):
            return _CAPS[self.advance().text]
        return Capability.DYN

    # -- declarations

    def program(self) -> Program:
        classes = []
        while self.at("class"):
            classes.append(self.classdecl())
        self.expect("main")
        self.expect("{")
        main = self.seq()
        self.expect("}")
        if self.tok.kind != "eof":
            self.fail(frozenset({"end of input"}))
        return Program(tuple(classes), main)

    def classdecl(self) -> ClassDecl:
        start = self.expect("class").span
        name = self.ident().text
        self.expect("(")
        fields = []
        if not self.at(")"):
            while True:
                cap = self.optional_cap()
                fields.append((self.ident().text, cap))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        self.expect("{")
        methods = []
        while not self.at("}"):
            methods.append(self.method())
        end = self.expect("}").span
        return ClassDecl(name, tuple(fields), tuple(methods), span=_join(start, end))

    def method(self) -> MethodDecl:
        start = self.tok.span
        recv_cap = self.optional_cap()
        self.expect("method")
        name = self.ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pname = self.ident().text
                cap = Capability.DYN
                if self.at(":"):
                    self.advance()
                    if not self.at(*_CAPS):
                        self.fail(frozenset(_CAPS))
                    cap = self.optional_cap()
                params.append((pname, cap))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        ret_cap = Capability.DYN
        if self.at("->"):
            self.advance()
            if not self.at(*_CAPS):
                self.fail(frozenset(_CAPS))
            ret_cap = self.optional_cap()
        self.expect("{")
        body = self.seq()
        end = self.expect("}").span
        return MethodDecl(recv_cap, name, tuple(params), ret_cap, body, span=_join(start, end))

    # -- expressions

    def seq(self) -> Expr:
        if self.at("let"):
            start = self.advance().span
            cap = self.optional_cap()
            var = self.ident().text
            self.expect("=")
            rhs = self.expr()
            self.expect(";")
            body = self.seq()
            return Let(cap, var, rhs, body, span=_join(start, rhs.span))
        first = self.expr()
        if not self.at(";"):
            return first
        self.advance()
        rest = self.seq()
        name = f"{HIDDEN_PREFIX}s{self.hidden}"
        self.hidden += 1
        return Let(Capability.DYN, name, first, rest, span=first.span)

    def expr(self) -> Expr:
        e = self.primary()
        while self.at("."):
            self.advance()
            name_tok = self.ident()
            if self.at("("):
                args, end = self.args()
                e = Call(e, name_tok.text, args, span=_join(e.span, end))
            elif self.at(":="):
                self.advance()
                rhs = self.expr()
                return FieldSet(e, name_tok.text, rhs, span=_join(e.span, rhs.span))
            else:
                e = FieldGet(e, name_tok.text, span=_join(e.span, name_tok.span))
        return e

    def args(self) -> tuple[tuple[Expr, ...], SourceSpan]:
        self.expect("(")
        items = []
        if not self.at(")"):
            items.append(self.expr())
            while self.at(","):
                self.advance()
                items.append(self.expr())
        end = self.expect(")").span
        return tuple(items), end

    def primary(self) -> Expr:
        t = self.tok
        if self.at("spawn"):
            self.advance()
            self.expect("{")
            body = self.seq()
            end = self.expect("}").span
            return Spawn(body, span=_join(t.span, end))
        if self.at("receive"):
            self.advance()
            return Receive(span=t.span)
        if self.at("send"):
            self.advance()
            self.expect("(")
            target = self.expr()
            self.expect(",")
            payload = self.expr()
            end = self.expect(")").span
            return Send(target, payload, span=_join(t.span, end))
        if self.at("new"):
            self.advance()
            cls = self.ident().text
            args, end = self.args()
            return New(cls, args, span=_join(t.span, end))
        if self.at("unit"):
            self.advance()
            return Val(UNIT, span=t.span)
        if self.at("this"):
            self.advance()
            return This(span=t.span)
        if self.at("("):
            self.advance()
            inner = self.seq()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.advance()
            return Var(t.text, span=t.span)
        self.fail(frozenset({"expression"}))


def parse_program(text: str, file: str = "<input>") -> Program:
    """Parse `.gcap` source text into a Program, raising ParseError on the first error."""
    return Parser(text, file).program()


def parse_expr(text: str, file: str = "<input>") -> Expr:
    p = Parser(text, file)
    e = p.seq()
    if p.tok.kind != "eof":
        p.fail(frozenset({"end of input"}))
    return e
