import itertools
import math

import numpy as np
import pytest
from conftest import probes

from centerlab.catalog import CatalogError, catalog
from centerlab.dsl import compile_scalar, compile_vector
from centerlab.errors import DimensionError, EvaluationError
from centerlab.fields import (
    HamiltonianSystem,
    ScalarField,
    VectorField,
    evaluate,
    fd_gradient,
    fd_jacobian,
    hamiltonian_field,
    jacobian,
    lie_bracket,
    poisson_bracket,
)

PLANAR = ["constant", "rotation", "euler", "nonlinear-limit-cycle"]
HAMILTONIANS = ["center-hamiltonian", "quartic-hamiltonian", "coordinate-hamiltonian-x", "coordinate-hamiltonian-y"]


def planar_fields():
    out = {name: catalog(name) for name in PLANAR}
    out["linear-commuter(1,2)"] = catalog("linear-commuter", (1.0, 2.0))
    out["linear-commuter(-0.5,3)"] = catalog("linear-commuter", (-0.5, 3.0))
    for name in HAMILTONIANS:
        out["X_" + name] = hamiltonian_field(catalog(name))
    return out


# -- evaluate / jacobian ----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 5])
def test_constant_field_is_first_basis_vector(n, rng):
    X = catalog("constant", (n,))
    for x in probes(rng, 5, n):
        expected = np.zeros(n)
        expected[0] = 1.0
        assert np.array_equal(evaluate(X, x), expected)


def test_rotation_and_limit_cycle_at_unit_point():
    assert np.allclose(evaluate(catalog("rotation"), [1.0, 0.0]), [0.0, 1.0], atol=0)
    assert np.allclose(evaluate(catalog("nonlinear-limit-cycle"), [1.0, 0.0]), [0.0, -1.0], atol=0)


def test_evaluation_is_deterministic(rng):
    X = catalog("lorenz")
    x = probes(rng, 1, 3)[0]
    assert evaluate(X, x).tobytes() == evaluate(X, x.copy()).tobytes()


def test_dimension_mismatch_names_both_dims():
    with pytest.raises(DimensionError) as info:
        evaluate(catalog("rotation"), [1.0, 2.0, 3.0])
    assert "2" in str(info.value) and "3" in str(info.value)


def test_non_finite_point_rejected():
    with pytest.raises(EvaluationError):
        evaluate(catalog("rotation"), [math.nan, 0.0])


def test_jacobian_examples(rng):
    for x in probes(rng, 5, 2):
        assert np.array_equal(jacobian(catalog("rotation"), x), [[0, -1], [1, 0]])
        assert np.array_equal(jacobian(catalog("euler"), x), np.eye(2))
    # sympy: Jacobian of the Lorenz system at the origin
    expected = [[-10, 10, 0], [28, -1, 0], [0, 0, -8 / 3]]
    assert np.allclose(jacobian(catalog("lorenz"), np.zeros(3)), expected, atol=1e-15)


def test_fd_jacobian_used_without_exact_one():
    X = VectorField(2, lambda z: np.array([z[0] ** 2 * z[1], np.sin(z[1])]))
    assert not X.has_exact_jacobian
    J = jacobian(X, [1.0, 0.5])
    assert np.allclose(J, [[1.0, 1.0], [0.0, math.cos(0.5)]], atol=1e-8)


# -- lie bracket -------------------------------------------------------------------------


def test_rotation_commutes_with_limit_cycle_field():
    X, Y = catalog("rotation"), catalog("nonlinear-limit-cycle")
    g = np.linspace(-2, 2, 20)
    P = np.array(list(itertools.product(g, g)))
    B = lie_bracket(X, Y)
    assert max(np.linalg.norm(B(p)) for p in P) <= 1e-9


def test_bracket_with_itself_and_rotation_euler_vanish(rng):
    X, E = catalog("rotation"), catalog("euler")
    for x in probes(rng, 20, 2):
        assert np.linalg.norm(lie_bracket(X, X)(x)) == 0.0
        assert np.linalg.norm(lie_bracket(X, E)(x)) <= 1e-15


def test_bracket_formula_against_closed_form(rng):
    # sympy: [rotation, Z] = ((b+c)x + (d-a)y, (d-a)x - (b+c)y) for Z = (ax+by, cx+dy)
    X = catalog("rotation")
    for a, b, c, d in [(1, 2, 3, 4), (0, 1, -1, 0), (2, -1, 0.5, 3)]:
        Z = compile_vector(f"({a}*x + {b}*y, {c}*x + {d}*y)")
        for x, y in probes(rng, 5, 2):
            expected = [(b + c) * x + (d - a) * y, (d - a) * x - (b + c) * y]
            assert np.allclose(lie_bracket(X, Z)([x, y]), expected, atol=1e-12)


def test_bracket_dimension_mismatch():
    with pytest.raises(DimensionError):
        lie_bracket(catalog("rotation"), catalog("lorenz"))


def test_bracket_antisymmetry(rng):
    fields = list(planar_fields().values())
    P = probes(rng, 100, 2)
    worst = 0.0
    for X, Y in itertools.combinations(fields, 2):
        XY, YX = lie_bracket(X, Y), lie_bracket(Y, X)
        worst = max(worst, max(np.linalg.norm(XY(p) + YX(p)) for p in P))
    assert worst <= 1e-9


def test_jacobi_identity(rng):
    fields = list(planar_fields().values())
    P = probes(rng, 100, 2)
    for X, Y, Z in itertools.combinations(fields[:6], 3):
        total = (
            lie_bracket(X, lie_bracket(Y, Z))
            + lie_bracket(Y, lie_bracket(Z, X))
            + lie_bracket(Z, lie_bracket(X, Y))
        )
        assert max(np.linalg.norm(total(p)) for p in P) <= 1e-6


def test_exact_jacobian_matches_finite_differences(rng):
    fields = planar_fields()
    fields["lorenz"] = catalog("lorenz")
    fields["lorenz(16,45.92,4)"] = catalog("lorenz", (16.0, 45.92, 4.0))
    for name, X in fields.items():
        assert X.has_exact_jacobian, name
        for x in probes(rng, 100, X.dim):
            err = np.max(np.abs(X.jacobian(x) - fd_jacobian(X.func, x)))
            assert err <= 1e-6, (name, x, err)


# -- hamiltonian fields and poisson brackets ---------------------------------------------


def test_hamiltonian_field_sign_convention(rng):
    # canonical J = [[0, I], [-I, 0]]: X_H = (dH/dy, -dH/dx)
    XH = hamiltonian_field(catalog("center-hamiltonian"))
    for x, y in probes(rng, 10, 2):
        assert np.allclose(XH([x, y]), [y, -x], atol=1e-15)
    assert np.array_equal(hamiltonian_field(compile_scalar("x"))([0.3, 0.7]), [0.0, -1.0])
    XK = hamiltonian_field(catalog("quartic-hamiltonian"))
    assert np.allclose(XK([1.0, 0.0]), [0.0, -2.0], atol=1e-15)


def test_hamiltonian_field_needs_even_dimension():
    H = ScalarField(3, lambda z: z[0] * z[1] * z[2])
    with pytest.raises(DimensionError, match="even"):
        hamiltonian_field(H)
    with pytest.raises(DimensionError, match="even"):
        poisson_bracket(H, H)


def test_energy_is_first_integral(rng):
    H4 = compile_scalar("x*y^2 + sin(z) - w^3 + x*w", ("x", "y", "z", "w"))
    systems = [catalog(n).energy for n in HAMILTONIANS] + [H4]
    for H in systems:
        XH = hamiltonian_field(H)
        for z in probes(rng, 100, H.dim):
            assert abs(H.gradient(z) @ XH(z)) <= 1e-9


def test_poisson_bracket_examples(rng):
    H, K = compile_scalar("x"), compile_scalar("y")
    P = poisson_bracket(H, K)
    for z in probes(rng, 100, 2):
        assert P(z) == 1.0
    center, quartic = catalog("center-hamiltonian").energy, catalog("quartic-hamiltonian").energy
    for z in probes(rng, 100, 2):
        assert poisson_bracket(center, center)(z) == 0.0
        assert abs(poisson_bracket(center, quartic)(z)) <= 1e-12


def test_poisson_antisymmetry(rng):
    energies = [catalog(n).energy for n in HAMILTONIANS] + [compile_scalar("x^3*y + sin(x) - y^2")]
    P = probes(rng, 100, 2)
    for H, K in itertools.combinations(energies, 2):
        HK, KH = poisson_bracket(H, K), poisson_bracket(K, H)
        assert max(abs(HK(p) + KH(p)) for p in P) <= 1e-9


def test_bracket_poisson_compatibility(rng):
    # [X_K, X_H] = X_{H,K}
    energies = [catalog(n).energy for n in HAMILTONIANS] + [
        compile_scalar("x^3*y"),
        compile_scalar("sin(x) + y^2"),
    ]
    P = probes(rng, 100, 2)
    for H, K in itertools.permutations(energies, 2):
        lhs = lie_bracket(hamiltonian_field(K), hamiltonian_field(H))
        rhs = hamiltonian_field(poisson_bracket(H, K))
        assert max(np.linalg.norm(lhs(p) - rhs(p)) for p in P) <= 1e-6


def test_scalar_gradient_matches_finite_differences(rng):
    for name in HAMILTONIANS:
        H = catalog(name).energy
        for z in probes(rng, 50, 2):
            g = H.gradient(z)
            assert np.allclose(g, fd_gradient(H.func, z), rtol=1e-6, atol=1e-6)


# -- catalog -----------------------------------------------------------------------------


def test_catalog_examples():
    assert np.array_equal(catalog("linear-commuter", (1, 0))([1.0, 0.0]), [1.0, 0.0])
    assert np.array_equal(catalog("lorenz", (10, 28, 8 / 3))(np.zeros(3)), np.zeros(3))
    quartic = catalog("quartic-hamiltonian")
    assert isinstance(quartic, HamiltonianSystem)
    assert quartic.energy([1.0, 0.0]) == 0.5


def test_catalog_errors():
    with pytest.raises(CatalogError, match="unknown"):
        catalog("vortex")
    with pytest.raises(CatalogError, match="parameters"):
        catalog("linear-commuter", (1.0,))
    with pytest.raises(CatalogError):
        catalog("rotation", (1.0,))


def test_field_arithmetic(rng):
    X = catalog("rotation")
    Y = X.scaled(2.5) + catalog("euler")
    for p in probes(rng, 10, 2):
        assert np.allclose(Y(p), 2.5 * X(p) + p, atol=1e-15)
        assert np.allclose(Y.jacobian(p), 2.5 * X.jacobian(p) + np.eye(2), atol=1e-15)


def test_batched_evaluation_matches_pointwise(rng):
    P = probes(rng, 7, 3)
    X = catalog("lorenz")
    batch = X.func(P.T).T
    for p, row in zip(P, batch):
        assert np.array_equal(X(p), row)
