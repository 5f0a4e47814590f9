"""Vector fields, scalar fields and Hamiltonian systems on R^n charts.

Fields accept either a single point of shape ``(n,)`` or a batch of points
of shape ``(n, m)`` (one point per column) and return arrays of the matching
shape; Jacobians of a batch have shape ``(n, n, m)``.

Hamiltonian conventions: coordinates are ordered ``(q_1..q_n, p_1..p_n)``,
the symplectic matrix is ``J = [[0, I], [-I, 0]]`` and ``X_H = J grad H``,
so in the plane ``X_H(x, y) = (dH/dy, -dH/dx)``.  With this choice
``{H, K} = dH/dx dK/dy - dH/dy dK/dx`` is the derivative of ``H`` along the
flow of ``X_K`` and ``[X_K, X_H] = X_{H,K}`` holds for the bracket
``[X, Y] = DY X - DX Y``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DimensionError, EvaluationError

FD_SCALE = np.cbrt(np.finfo(float).eps)

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def as_point(x, dim: int) -> np.ndarray:
    """Validate a point (or batch of points) against the ambient dimension."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[0] != dim:
        got = 0 if x.ndim == 0 else x.shape[0]
        raise DimensionError(dim, got)
    if not np.all(np.isfinite(x)):
        raise EvaluationError("point has non-finite coordinates")
    return x


def fd_steps(x: np.ndarray) -> np.ndarray:
    return FD_SCALE * np.maximum(1.0, np.abs(x))


def fd_jacobian(func: ArrayFunc, x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian, column j = dF/dx_j."""
    n = x.shape[0]
    h = fd_steps(x)
    cols = []
    for j in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[j] = x[j] + h[j]
        xm[j] = x[j] - h[j]
        # actual steps after rounding of x +/- h
        dx = xp[j] - xm[j]
        cols.append((np.asarray(func(xp)) - np.asarray(func(xm))) / dx)
    return np.stack(cols, axis=1)


def fd_gradient(func: ArrayFunc, x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    h = fd_steps(x)
    out = []
    for j in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[j] = x[j] + h[j]
        xm[j] = x[j] - h[j]
        out.append((np.asarray(func(xp)) - np.asarray(func(xm))) / (xp[j] - xm[j]))
    return np.stack(out, axis=0)


def matvec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product that also works column-wise on batches."""
    if a.ndim == 2:
        return a @ v
    return np.einsum("ij...,j...->i...", a, v)


class VectorField:
    """An evaluable map x -> X(x) with an optional exact Jacobian.

    Parameters
    ----------
    dim : int
        Ambient dimension n.
    func : callable
        Maps an ``(n,)`` or ``(n, m)`` array to an array of the same shape.
        Called without validation by the integrators.
    jac : callable, optional
        Exact Jacobian. When absent, central finite differences are used.
    name : str, optional
        Label used in reports.
    """

    def __init__(self, dim: int, func: ArrayFunc, jac: ArrayFunc | None = None, name: str = ""):
        if int(dim) < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self.func = func
        self.jac = jac
        self.name = name

    def __repr__(self) -> str:
        return f"VectorField(dim={self.dim}, name={self.name!r})"

    @property
    def has_exact_jacobian(self) -> bool:
        return self.jac is not None

    def __call__(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        out = np.asarray(self.func(x), dtype=float)
        if out.shape != x.shape:
            raise DimensionError(self.dim, out.shape[0] if out.ndim else 0, "field value")
        return out

    def jacobian(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        return self._jac(x)

    def _jac(self, x: np.ndarray) -> np.ndarray:
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        return fd_jacobian(self.func, x)

    def jac_func(self) -> ArrayFunc:
        """Unvalidated Jacobian callable (exact or finite differences)."""
        return self._jac

    def scaled(self, c: float) -> VectorField:
        c = float(c)
        jac = None if self.jac is None else (lambda x, J=self.jac: c * J(x))
        return VectorField(self.dim, lambda x, f=self.func: c * f(x), jac, f"{c:g}*{self.name}")

    def __add__(self, other: VectorField) -> VectorField:
        if not isinstance(other, VectorField):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(self.dim, other.dim, "field")
        f, g = self.func, other.func
        jac = None
        if self.jac is not None and other.jac is not None:
            jf, jg = self.jac, other.jac
            jac = lambda x: jf(x) + jg(x)  # noqa: E731
        return VectorField(self.dim, lambda x: f(x) + g(x), jac, f"{self.name}+{other.name}")

    def times(self, g: ScalarField) -> VectorField:
        """Pointwise product g(x) * X(x)."""
        if g.dim != self.dim:
            raise DimensionError(self.dim, g.dim, "scalar field")
        f, gf = self.func, g.func
        jac = None
        if self.jac is not None and g.grad is not None:
            jf, gg = self.jac, g.grad

            def jac(x):
                return gf(x) * jf(x) + np.einsum("i...,j...->ij...", f(x), gg(x))

        return VectorField(self.dim, lambda x: gf(x) * f(x), jac, f"{g.name}*{self.name}")


class ScalarField:
    """An evaluable map x -> H(x) with optional exact gradient and Hessian."""

    def __init__(
        self,
        dim: int,
        func: ArrayFunc,
        grad: ArrayFunc | None = None,
        hess: ArrayFunc | None = None,
        name: str = "",
    ):
        if int(dim) < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self.func = func
        self.grad = grad
        self.hess = hess
        self.name = name

    def __repr__(self) -> str:
        return f"ScalarField(dim={self.dim}, name={self.name!r})"

    def __call__(self, x):
        x = as_point(x, self.dim)
        out = self.func(x)
        return float(out) if x.ndim == 1 else np.asarray(out, dtype=float)

    def gradient(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        return self._grad(x)

    def _grad(self, x: np.ndarray) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self.func, x)

    def hessian(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        return self._hess(x)

    def _hess(self, x: np.ndarray) -> np.ndarray:
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        return fd_jacobian(self._grad, x)


class HamiltonianSystem:
    """Energy function on R^{2n} with the canonical symplectic structure."""

    def __init__(self, energy: ScalarField, name: str = ""):
        if energy.dim % 2:
            raise DimensionError(energy.dim + 1, energy.dim, "phase space")
        self.half_dim = energy.dim // 2
        self.energy = energy
        self.name = name or energy.name

    @property
    def dim(self) -> int:
        return 2 * self.half_dim

    def __repr__(self) -> str:
        return f"HamiltonianSystem(half_dim={self.half_dim}, name={self.name!r})"

    @property
    def field(self) -> VectorField:
        return hamiltonian_field(self)


def evaluate(field: VectorField, x) -> np.ndarray:
    return field(x)


def jacobian(field: VectorField, x) -> np.ndarray:
    return field.jacobian(x)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """The field x -> DY(x) X(x) - DX(x) Y(x).

    The result carries no exact Jacobian; nested brackets differentiate it
    by finite differences.
    """
    if X.dim != Y.dim:
        raise DimensionError(X.dim, Y.dim, "field")
    fx, fy = X.func, Y.func
    jx, jy = X.jac_func(), Y.jac_func()

    def bracket(x):
        return matvec(jy(x), fx(x)) - matvec(jx(x), fy(x))

    return VectorField(X.dim, bracket, None, f"[{X.name},{Y.name}]")


def symplectic_matrix(half_dim: int) -> np.ndarray:
    n = half_dim
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _require_even(dim: int) -> int:
    if dim % 2:
        raise DimensionError(dim + 1, dim, "phase space (must be even)")
    return dim // 2


def _apply_J(v: np.ndarray, n: int) -> np.ndarray:
    # J v = (v_p, -v_q); works on batches too
    return np.concatenate([v[n:], -v[:n]], axis=0)


def hamiltonian_field(sys: HamiltonianSystem | ScalarField) -> VectorField:
    """X_H = J grad H for the canonical symplectic matrix."""
    energy = sys.energy if isinstance(sys, HamiltonianSystem) else sys
    n = _require_even(energy.dim)
    grad = energy._grad

    def func(x):
        return _apply_J(grad(x), n)

    jac = None
    if energy.hess is not None:
        hess = energy.hess

        def jac(x):
            return _apply_J(np.asarray(hess(x), dtype=float), n)

    return VectorField(energy.dim, func, jac, f"X_{energy.name}")


def poisson_bracket(H: ScalarField, K: ScalarField) -> ScalarField:
    """{H, K}(z) = sum_i dH/dq_i dK/dp_i - dH/dp_i dK/dq_i."""
    if H.dim != K.dim:
        raise DimensionError(H.dim, K.dim, "scalar field")
    n = _require_even(H.dim)
    gh, gk = H._grad, K._grad

    def func(x):
        a, b = gh(x), gk(x)
        return np.sum(a[:n] * b[n:] - a[n:] * b[:n], axis=0)

    grad = None
    if H.hess is not None and K.hess is not None:
        hh, hk = H.hess, K.hess

        def grad(x):
            # {H,K} = grad H . J grad K, so d{H,K} = Hess_H J grad K - Hess_K J grad H
            a, b = gh(x), gk(x)
            return matvec(hh(x), _apply_J(b, n)) - matvec(hk(x), _apply_J(a, n))

    return ScalarField(H.dim, func, grad, None, f"{{{H.name},{K.name}}}")
