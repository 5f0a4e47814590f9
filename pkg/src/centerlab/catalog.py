"""Closed-form fields and Hamiltonians used throughout the examples.

All entries carry exact Jacobians (fields) or exact gradients and Hessians
(Hamiltonians).  Names are the public identifiers used by config files.
"""

from __future__ import annotations

import numpy as np

from .errors import CenterlabError
from .fields import HamiltonianSystem, ScalarField, VectorField

LORENZ_DEFAULTS = (10.0, 28.0, 8.0 / 3.0)


class CatalogError(CenterlabError, ValueError):
    kind = "catalog"


def _stack(rows, x):
    """Stack scalar/array entries into an array broadcast over the batch shape of x."""
    if x.ndim == 1:
        return np.array(rows, dtype=float)
    tail = x.shape[1:]
    return np.array([r if np.ndim(r) else np.full(tail, r) for r in rows], dtype=float)


def _matrix(rows, x):
    if x.ndim == 1:
        return np.array(rows, dtype=float)
    tail = x.shape[1:]
    return np.array([[e if np.ndim(e) else np.full(tail, e) for e in row] for row in rows], dtype=float)


def constant(n: int = 2) -> VectorField:
    n = int(n)
    e1 = [1.0] + [0.0] * (n - 1)
    zeros = [[0.0] * n for _ in range(n)]
    return VectorField(
        n, lambda x: _stack(e1, x), lambda x: _matrix(zeros, x), "constant"
    )


def rotation() -> VectorField:
    return VectorField(
        2,
        lambda x: _stack([-x[1], x[0]], x),
        lambda x: _matrix([[0.0, -1.0], [1.0, 0.0]], x),
        "rotation",
    )


def euler(n: int = 2) -> VectorField:
    n = int(n)
    eye = np.eye(n).tolist()
    return VectorField(n, lambda x: x.copy(), lambda x: _matrix(eye, x), "euler")


def nonlinear_limit_cycle() -> VectorField:
    """Y(x, y) = (y + x(1 - x^2 - y^2), -x + y(1 - x^2 - y^2))."""

    def func(z):
        x, y = z[0], z[1]
        s = 1.0 - x * x - y * y
        return _stack([y + x * s, -x + y * s], z)

    def jac(z):
        x, y = z[0], z[1]
        s = 1.0 - x * x - y * y
        return _matrix(
            [
                [s - 2 * x * x, 1.0 - 2 * x * y],
                [-1.0 - 2 * x * y, s - 2 * y * y],
            ],
            z,
        )

    return VectorField(2, func, jac, "nonlinear-limit-cycle")


def linear_commuter(a: float, b: float) -> VectorField:
    """Z_{a,b}(x, y) = (a x + b y, -b x + a y)."""
    a, b = float(a), float(b)
    return VectorField(
        2,
        lambda z: _stack([a * z[0] + b * z[1], -b * z[0] + a * z[1]], z),
        lambda z: _matrix([[a, b], [-b, a]], z),
        f"linear-commuter({a:g},{b:g})",
    )


def lorenz(sigma: float = 10.0, r: float = 28.0, b: float = 8.0 / 3.0) -> VectorField:
    sigma, r, b = float(sigma), float(r), float(b)

    def func(z):
        x, y, w = z[0], z[1], z[2]
        return _stack([sigma * (y - x), x * (r - w) - y, x * y - b * w], z)

    def jac(z):
        x, y, w = z[0], z[1], z[2]
        return _matrix(
            [[-sigma, sigma, 0.0], [r - w, -1.0, -x], [y, x, -b]],
            z,
        )

    return VectorField(3, func, jac, "lorenz")


def _quadratic_energy() -> ScalarField:
    return ScalarField(
        2,
        lambda z: 0.5 * (z[0] ** 2 + z[1] ** 2),
        lambda z: _stack([z[0], z[1]], z),
        lambda z: _matrix([[1.0, 0.0], [0.0, 1.0]], z),
        "H",
    )


def _quartic_energy() -> ScalarField:
    def hess(z):
        x, y = z[0], z[1]
        s = x * x + y * y
        return _matrix([[2 * s + 4 * x * x, 4 * x * y], [4 * x * y, 2 * s + 4 * y * y]], z)

    return ScalarField(
        2,
        lambda z: 0.5 * (z[0] ** 2 + z[1] ** 2) ** 2,
        lambda z: _stack([2 * (z[0] ** 2 + z[1] ** 2) * z[0], 2 * (z[0] ** 2 + z[1] ** 2) * z[1]], z),
        hess,
        "K",
    )


def _coordinate_energy(index: int) -> ScalarField:
    g = [0.0, 0.0]
    g[index] = 1.0
    zeros = [[0.0, 0.0], [0.0, 0.0]]
    return ScalarField(
        2,
        lambda z: np.asarray(z[index], dtype=float).copy(),
        lambda z: _stack(g, z),
        lambda z: _matrix(zeros, z),
        "xy"[index],
    )


def center_hamiltonian() -> HamiltonianSystem:
    return HamiltonianSystem(_quadratic_energy(), "center-hamiltonian")


def quartic_hamiltonian() -> HamiltonianSystem:
    return HamiltonianSystem(_quartic_energy(), "quartic-hamiltonian")


def coordinate_hamiltonian_x() -> HamiltonianSystem:
    return HamiltonianSystem(_coordinate_energy(0), "coordinate-hamiltonian-x")


def coordinate_hamiltonian_y() -> HamiltonianSystem:
    return HamiltonianSystem(_coordinate_energy(1), "coordinate-hamiltonian-y")


# name -> (builder, allowed parameter counts)
_ENTRIES = {
    "constant": (constant, (0, 1)),
    "rotation": (rotation, (0,)),
    "euler": (euler, (0, 1)),
    "nonlinear-limit-cycle": (nonlinear_limit_cycle, (0,)),
    "linear-commuter": (linear_commuter, (2,)),
    "center-hamiltonian": (center_hamiltonian, (0,)),
    "quartic-hamiltonian": (quartic_hamiltonian, (0,)),
    "coordinate-hamiltonian-x": (coordinate_hamiltonian_x, (0,)),
    "coordinate-hamiltonian-y": (coordinate_hamiltonian_y, (0,)),
    "lorenz": (lorenz, (0, 3)),
}

NAMES = tuple(_ENTRIES)
HAMILTONIAN_NAMES = tuple(n for n in NAMES if n.endswith("hamiltonian") or "hamiltonian-" in n)


def catalog(name: str, params=()) -> VectorField | HamiltonianSystem:
    """Build a catalog entry by name.

    Raises
    ------
    CatalogError
        Unknown name or wrong number of parameters.
    """
    try:
        builder, counts = _ENTRIES[name]
    except KeyError:
        raise CatalogError(
            f"unknown catalog entry {name!r}; known: {', '.join(NAMES)}"
        ) from None
    params = [float(p) for p in params]
    if len(params) not in counts:
        raise CatalogError(
            f"{name} takes {' or '.join(map(str, counts))} parameters, got {len(params)}"
        )
    if name in ("constant", "euler") and params:
        if params[0] != int(params[0]) or params[0] < 1:
            raise CatalogError(f"{name} dimension must be a positive integer")
        params = [int(params[0])]
    return builder(*params)
