"""Recursive-descent parser for the field expression language.

Grammar (EBNF)::

    vector  = "(" expr { "," expr } ")" ;
    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = primary [ ("^" | "**") INTEGER ] ;
    primary = NUMBER | IDENT | FUNC "(" expr ")" | "(" expr ")" ;
    FUNC    = "sin" | "cos" | "exp" | "sqrt" ;

Binding strength is power > unary minus > mul/div > add/sub, so ``-x^2`` is
``-(x^2)``.  A unary minus applied directly to a literal is folded into the
literal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ParseError
from .nodes import MAX_DEPTH, UNARY_FUNCS, Binary, Const, Expr, Pow, Unary, Var


MAX_NESTING = 100


class UnknownIdentifierError(ParseError):
    kind = "unknown-identifier"


class ArityError(ParseError):
    kind = "arity"


@dataclass(frozen=True)
class FieldSource:
    """Textual definition of a field.

    ``components`` is either a list of expression strings or a single string.
    For vector fields a single string is read as a parenthesised tuple such
    as ``"(-y, x)"``.
    """

    dim: int
    components: Sequence[str] | str
    variables: Sequence[str] = field(default=())
    scalar: bool = False

    def names(self) -> tuple[str, ...]:
        if self.variables:
            return tuple(self.variables)
        if self.dim <= 3:
            return ("x", "y", "z")[: self.dim]
        return tuple(f"x{i}" for i in range(self.dim))


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    pos: int  # character offset


def _tokenize(text: str, to_bytes) -> list[_Tok]:
    toks = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", to_bytes(i))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), i))
        i = m.end()
    toks.append(_Tok("eof", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.vars = {name: i for i, name in enumerate(variables)}
        self.toks = _tokenize(text, self._bytes)
        self.i = 0
        self.nesting = 0

    def _bytes(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _error(self, msg: str, expected=(), tok: _Tok | None = None, cls=ParseError):
        tok = tok or self.tok
        raise cls(msg, self._bytes(tok.pos), expected)

    def _expect(self, text: str):
        if self.tok.text != text or self.tok.kind == "eof":
            got = self.tok.text or "end of input"
            self._error(f"found {got!r}", (repr(text),))
        self.i += 1

    def _enter(self):
        # each bracket level costs several recursion frames
        self.nesting += 1
        if self.nesting > MAX_NESTING:
            self._error(f"brackets nested deeper than {MAX_NESTING}")

    def _checked(self, e: Expr) -> Expr:
        if e.depth > MAX_DEPTH:
            self._error(f"expression nested deeper than {MAX_DEPTH}")
        return e

    def parse_expr_eof(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "eof":
            self._error(f"unexpected {self.tok.text!r}", ("'+'", "'-'", "'*'", "'/'", "end of input"))
        return e

    def parse_vector_eof(self) -> list[Expr]:
        self._expect("(")
        comps = [self.expr()]
        while self.tok.text == ",":
            self.i += 1
            comps.append(self.expr())
        if self.tok.text != ")":
            got = self.tok.text or "end of input"
            self._error(f"found {got!r}", ("','", "')'", "'+'", "'-'", "'*'", "'/'"))
        self.i += 1
        if self.tok.kind != "eof":
            self._error(f"unexpected {self.tok.text!r} after component list", ("end of input",))
        return comps

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = self._checked(Binary(op, left, self.term()))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.tok.text
            self.i += 1
            left = self._checked(Binary(op, left, self.unary()))
        return left

    def unary(self) -> Expr:
        # iterate over leading minus signs instead of recursing
        count = 0
        while self.tok.kind == "op" and self.tok.text == "-":
            count += 1
            self.i += 1
        e = self.power()
        for _ in range(count):
            e = Const(-e.value) if isinstance(e, Const) else self._checked(Unary("neg", e))
        return e

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text in ("^", "**"):
            self.i += 1
            tok = self.tok
            if tok.kind != "num" or not tok.text.isdigit():
                self._error("exponent must be a non-negative integer literal", ("integer",))
            self.i += 1
            return self._checked(Pow(base, int(tok.text)))
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                self._error(f"numeric literal {tok.text!r} overflows")
            self.i += 1
            return Const(value)
        if tok.kind == "ident":
            self.i += 1
            if tok.text in UNARY_FUNCS:
                self._expect("(")
                self._enter()
                arg = self.expr()
                self._expect(")")
                self.nesting -= 1
                return self._checked(Unary(tok.text, arg))
            if tok.text not in self.vars:
                known = sorted(self.vars) + list(UNARY_FUNCS)
                self._error(f"unknown identifier {tok.text!r}", known, tok, UnknownIdentifierError)
            return Var(self.vars[tok.text], tok.text)
        if tok.text == "(" and tok.kind == "op":
            self.i += 1
            self._enter()
            e = self.expr()
            self._expect(")")
            self.nesting -= 1
            return e
        got = tok.text or "end of input"
        self._error(f"found {got!r}", ("number", "identifier", "'('", "'-'"))


def _decode(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        try:
            return bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("invalid UTF-8", exc.start) from None
    return text


def parse_expression(text, variables: Sequence[str]) -> Expr:
    """Parse a single scalar expression."""
    return _Parser(_decode(text), variables).parse_expr_eof()


def parse_vector(text, variables: Sequence[str]) -> list[Expr]:
    """Parse a parenthesised, comma-separated component list."""
    return _Parser(_decode(text), variables).parse_vector_eof()


def parse(src: FieldSource) -> list[Expr]:
    """Parse every component of a field source.

    Raises
    ------
    ParseError
        Syntax error, with byte offset and the set of expected tokens.
    UnknownIdentifierError
        A name that is neither a declared variable nor a known function.
    ArityError
        Component count differs from the declared dimension (vector fields)
        or from one (scalar fields).
    """
    names = src.names()
    if len(names) != src.dim:
        raise ArityError(f"{len(names)} variable names for dimension {src.dim}", 0)
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable names", 0)
    if isinstance(src.components, (str, bytes, bytearray)):
        if src.scalar:
            exprs = [parse_expression(src.components, names)]
        else:
            exprs = parse_vector(src.components, names)
    else:
        exprs = [parse_expression(c, names) for c in src.components]
    want = 1 if src.scalar else src.dim
    if len(exprs) != want:
        raise ArityError(f"expected {want} component(s), got {len(exprs)}", 0)
    return exprs
