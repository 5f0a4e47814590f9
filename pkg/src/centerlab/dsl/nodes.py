"""Expression trees, their evaluation, symbolic differentiation and printing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EvaluationError

UNARY_FUNCS = ("sin", "cos", "exp", "sqrt")
MAX_DEPTH = 400


@dataclass(frozen=True)
class Expr:
    def __post_init__(self):
        kids = self.children()
        depth = 1 + max((k.depth for k in kids), default=0)
        object.__setattr__(self, "depth", depth)

    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Const(Expr):
    value: float
    depth: int = field(default=1, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Expr):
    index: int
    name: str = ""
    depth: int = field(default=1, compare=False, repr=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" or one of UNARY_FUNCS
    arg: Expr
    depth: int = field(default=1, compare=False, repr=False)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # "+", "-", "*", "/"
    left: Expr
    right: Expr
    depth: int = field(default=1, compare=False, repr=False)

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    depth: int = field(default=1, compare=False, repr=False)

    def children(self):
        return (self.base,)


ZERO = Const(0.0)
ONE = Const(1.0)


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Const) and e.value == v


# -- folding constructors ---------------------------------------------------


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    return Binary("/", a, b)


def power(a: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value**k)
    return Pow(a, k)


def func(op: str, a: Expr) -> Expr:
    return Unary(op, a)


# -- differentiation -----------------------------------------------------------


def differentiate(e: Expr, var: int) -> Expr:
    """Partial derivative of ``e`` with respect to variable ``var``, folded."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == var else ZERO
    if isinstance(e, Pow):
        db = differentiate(e.base, var)
        if _is(db, 0.0):
            return ZERO
        return mul(mul(Const(float(e.exponent)), power(e.base, e.exponent - 1)), db)
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da, dbb = differentiate(a, var), differentiate(b, var)
        if e.op == "+":
            return add(da, dbb)
        if e.op == "-":
            return sub(da, dbb)
        if e.op == "*":
            return add(mul(da, b), mul(a, dbb))
        if e.op == "/":
            if _is(dbb, 0.0):
                return div(da, b)
            return div(sub(mul(da, b), mul(a, dbb)), power(b, 2))
        raise ValueError(f"unknown binary operator {e.op!r}")
    if isinstance(e, Unary):
        u = e.arg
        du = differentiate(u, var)
        if _is(du, 0.0):
            return ZERO
        if e.op == "neg":
            return neg(du)
        if e.op == "sin":
            return mul(func("cos", u), du)
        if e.op == "cos":
            return mul(neg(func("sin", u)), du)
        if e.op == "exp":
            return mul(e, du)
        if e.op == "sqrt":
            return div(du, mul(Const(2.0), e))
        raise ValueError(f"unknown unary operator {e.op!r}")
    raise TypeError(f"not an expression: {e!r}")


# -- evaluation ------------------------------------------------------------------


def evaluate(e: Expr, x: np.ndarray):
    """Evaluate on a point ``(n,)`` or a batch ``(n, m)``.

    Raises EvaluationError on a zero denominator or a negative square root.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return x[e.index]
    if isinstance(e, Binary):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0.0):
            raise EvaluationError("division by zero")
        return a / b
    if isinstance(e, Pow):
        return evaluate(e.base, x) ** e.exponent
    if isinstance(e, Unary):
        a = evaluate(e.arg, x)
        if e.op == "neg":
            return -a
        if e.op == "sin":
            return np.sin(a)
        if e.op == "cos":
            return np.cos(a)
        if e.op == "exp":
            return np.exp(a)
        if np.any(np.asarray(a) < 0.0):
            raise EvaluationError("square root of a negative number")
        return np.sqrt(a)
    raise TypeError(f"not an expression: {e!r}")


# -- printing --------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Const) and (e.value < 0 or str(e.value).startswith("-")):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def to_string(e: Expr) -> str:
    """Render with the minimal parentheses that reparse to the same tree."""
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name or f"x{e.index}"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) <= 4:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Unary):
        if e.op != "neg":
            return f"{e.op}({to_string(e.arg)})"
        inner = to_string(e.arg)
        if _prec(e.arg) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        left, right = to_string(e.left), to_string(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")
