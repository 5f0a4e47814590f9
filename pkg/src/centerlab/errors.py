"""Exception hierarchy shared by every centerlab module."""

from __future__ import annotations


class CenterlabError(Exception):
    """Base class for all errors raised by centerlab."""

    kind = "error"

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "message": str(self)}
        out.update(getattr(self, "details", {}))
        return out


class DimensionError(CenterlabError, ValueError):
    kind = "dimension-mismatch"

    def __init__(self, expected: int, got: int, what: str = "point"):
        super().__init__(f"{what} has dimension {got}, field expects {expected}")
        self.expected = expected
        self.got = got
        self.details = {"expected": expected, "got": got}


class EvaluationError(CenterlabError, ArithmeticError):
    """A field could not be evaluated (zero denominator, domain error, non-finite input)."""

    kind = "evaluation"


class ParseError(CenterlabError, ValueError):
    """Syntax or name error in a field expression.

    ``offset`` is a byte offset into the UTF-8 encoded source.
    """

    kind = "parse"

    def __init__(self, message: str, offset: int, expected=()):
        self.message = message
        self.offset = offset
        self.expected = tuple(sorted(expected))
        text = f"at offset {offset}: {message}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(text)
        self.details = {"offset": offset, "expected": list(self.expected)}


class IntegrationError(CenterlabError, RuntimeError):
    kind = "integration"


class StepLimitError(IntegrationError):
    kind = "step-limit"


class BlowUpError(IntegrationError):
    """The state left the configured bounding box."""

    kind = "blow-up"

    def __init__(self, message: str, t: float, state=None):
        super().__init__(message)
        self.t = t
        self.state = state
        self.details = {"t": t}


class ConvergenceError(CenterlabError, RuntimeError):
    kind = "non-convergence"


class CollapseToEquilibriumError(ConvergenceError):
    kind = "collapse-to-equilibrium"


class NoCrossingError(CenterlabError, RuntimeError):
    kind = "no-crossing"


class TangencyError(CenterlabError, RuntimeError):
    kind = "tangency"


class NearSingularityError(CenterlabError, ValueError):
    """The reference field is (numerically) zero at the probe."""

    kind = "near-singularity"

    def __init__(self, norm: float, point=None, t: float | None = None):
        msg = f"|X(x)| = {norm:.3e} is below the singularity tolerance"
        if t is not None:
            msg += f" (at orbit time {t:.6g})"
        super().__init__(msg)
        self.norm = norm
        self.point = point
        self.t = t
        self.details = {"norm": norm}
        if t is not None:
            self.details["t"] = t


class NotOnOrbitError(CenterlabError, ValueError):
    kind = "not-on-orbit"

    def __init__(self, residual: float, tol: float):
        super().__init__(
            f"target point is {residual:.3e} away from the orbit (tolerance {tol:.1e})"
        )
        self.residual = residual
        self.details = {"residual": residual, "tolerance": tol}


class PreconditionError(CenterlabError, ValueError):
    kind = "precondition"


class ConfigError(CenterlabError, ValueError):
    kind = "config"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column
        self.details = {"line": line, "column": column}
