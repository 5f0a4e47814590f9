"""Turn parsed expressions into fields with exact derivatives."""

from __future__ import annotations

import numpy as np

from ..errors import EvaluationError
from ..fields import ScalarField, VectorField
from .nodes import Expr, differentiate, evaluate
from .parser import FieldSource, parse


def _broadcast(values, x: np.ndarray) -> np.ndarray:
    tail = x.shape[1:]
    out = np.array([np.broadcast_to(v, tail) for v in values], dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("expression evaluated to a non-finite value")
    return out


def _eval_rows(rows: list[Expr], x: np.ndarray) -> np.ndarray:
    return _broadcast([evaluate(e, x) for e in rows], x)


def _eval_matrix(rows: list[list[Expr]], x: np.ndarray) -> np.ndarray:
    tail = x.shape[1:]
    out = np.array(
        [[np.broadcast_to(evaluate(e, x), tail) for e in row] for row in rows], dtype=float
    )
    if not np.all(np.isfinite(out)):
        raise EvaluationError("derivative evaluated to a non-finite value")
    return out


def vector_field(exprs: list[Expr], dim: int, name: str = "") -> VectorField:
    jac_exprs = [[differentiate(e, j) for j in range(dim)] for e in exprs]
    return VectorField(
        dim,
        lambda x: _eval_rows(exprs, x),
        lambda x: _eval_matrix(jac_exprs, x),
        name,
    )


def scalar_field(expr: Expr, dim: int, name: str = "") -> ScalarField:
    grad_exprs = [differentiate(expr, j) for j in range(dim)]
    hess_exprs = [[differentiate(g, k) for k in range(dim)] for g in grad_exprs]

    def func(x):
        return _eval_rows([expr], x)[0]

    return ScalarField(
        dim,
        func,
        lambda x: _eval_rows(grad_exprs, x),
        lambda x: _eval_matrix(hess_exprs, x),
        name,
    )


def compile_source(src: FieldSource, name: str = "") -> VectorField | ScalarField:
    """Parse ``src`` and build the field it describes.

    Evaluation walks the syntax tree; Jacobians, gradients and Hessians come
    from symbolic differentiation.
    """
    exprs = parse(src)
    if src.scalar:
        return scalar_field(exprs[0], src.dim, name)
    return vector_field(exprs, src.dim, name)


def compile_vector(text: str, variables=None, name: str = "") -> VectorField:
    """Shorthand: ``compile_vector("(-y, x)")``."""
    names = tuple(variables) if variables else None
    dim = len(names) if names else _guess_dim(text)
    return compile_source(FieldSource(dim, text, names or ()), name)


def compile_scalar(text: str, variables=("x", "y"), name: str = "") -> ScalarField:
    return compile_source(FieldSource(len(variables), text, tuple(variables), scalar=True), name)


def _guess_dim(text: str) -> int:
    # number of top-level commas + 1 inside the outer parentheses
    depth = 0
    commas = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 1:
            commas += 1
    return commas + 1
