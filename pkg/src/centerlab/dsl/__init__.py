"""Expression language for user-defined vector and scalar fields."""

from .compile import compile_scalar, compile_source, compile_vector, scalar_field, vector_field
from .nodes import Binary, Const, Expr, Pow, Unary, Var, differentiate, evaluate, to_string
from .parser import (
    ArityError,
    FieldSource,
    UnknownIdentifierError,
    parse,
    parse_expression,
    parse_vector,
)

__all__ = [
    "ArityError",
    "Binary",
    "Const",
    "Expr",
    "FieldSource",
    "Pow",
    "Unary",
    "UnknownIdentifierError",
    "Var",
    "compile_scalar",
    "compile_source",
    "compile_vector",
    "differentiate",
    "evaluate",
    "parse",
    "parse_expression",
    "parse_vector",
    "scalar_field",
    "to_string",
    "vector_field",
]
