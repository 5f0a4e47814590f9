import math

import numpy as np
import pytest

from centerlab.catalog import catalog
from centerlab.errors import (
    CollapseToEquilibriumError,
    NoCrossingError,
    PreconditionError,
    TangencyError,
)
from centerlab.fields import VectorField
from centerlab.flow import IntegratorConfig, flow, tangent_flow
from centerlab.orbits import (
    OrbitDistance,
    SectionSpec,
    classify_equilibrium,
    classify_multipliers,
    deduplicate_orbits,
    find_equilibria,
    find_periodic_orbit,
    floquet,
    map_workers,
    orbit_points,
    poincare_map,
    same_orbit,
    scan_recurrences,
    verify_orbit,
)

# Reference values from tests/oracles/compute.py
SQRT72 = 8.48528137423857
ORIGIN_EIGS = (-22.827723451163457, -8.0 / 3.0, 11.827723451163456)
E_4PI = 3.4873423562089973e-06
LORENZ_SHORTEST_PERIOD = 1.5586522107161944
LORENZ_SECTION_START = (-6.1101646479345515, -4.108367443139187, 27.0)
LORENZ_SECTION_RETURN = (0.6414052892929915, (-5.892593675545484, -3.729575633153779, 27.0))


@pytest.fixture(scope="module")
def lorenz_pairs():
    X = catalog("lorenz")
    return sorted(scan_recurrences(X, [1.0, 1.0, 1.0], 50.0, 200.0, 0.5), key=lambda p: p[1])


@pytest.fixture(scope="module")
def lorenz_short_orbit(lorenz_pairs):
    X = catalog("lorenz")
    x, T = next((x, T) for x, T in lorenz_pairs if 1.4 < T < 1.7)
    return find_periodic_orbit(X, x, T)


@pytest.fixture(scope="module")
def limit_cycle():
    return find_periodic_orbit(catalog("nonlinear-limit-cycle"), [1.1, 0.0], 6.0)


# -- equilibria --------------------------------------------------------------------------


def test_lorenz_equilibria():
    eqs = find_equilibria(catalog("lorenz"), [[-20, 20]] * 3, 5)
    assert len(eqs) == 3
    expected = [(-SQRT72, -SQRT72, 27.0), (0.0, 0.0, 0.0), (SQRT72, SQRT72, 27.0)]
    for e, p in zip(eqs, expected):
        assert np.linalg.norm(e.point - p) <= 1e-6
        assert np.linalg.norm(catalog("lorenz")(e.point)) <= 1e-10
    assert eqs.seeds == 125
    assert eqs.converged + eqs.dropped == eqs.seeds


def test_lorenz_origin_eigenvalues():
    eqs = find_equilibria(catalog("lorenz"), [[-20, 20]] * 3, 5)
    origin = next(e for e in eqs if np.linalg.norm(e.point) < 1e-9)
    assert np.allclose(sorted(origin.eigenvalues.real), ORIGIN_EIGS, atol=1e-6)
    assert np.all(origin.eigenvalues.imag == 0)
    assert origin.classification == "hyperbolic"


def test_rotation_has_a_center():
    eqs = find_equilibria(catalog("rotation"), [[-1, 1], [-1, 1]], 4)
    assert len(eqs) == 1
    e = eqs[0]
    assert np.linalg.norm(e.point) <= 1e-12
    assert np.allclose(sorted(e.eigenvalues, key=lambda z: z.imag), [-1j, 1j], atol=1e-12)
    assert e.classification == "non-hyperbolic"


def test_constant_field_has_no_equilibria():
    eqs = find_equilibria(catalog("constant"), [[-1, 1], [-1, 1]], 3)
    assert len(eqs) == 0
    assert eqs.dropped == 9


def test_classification_stable_under_fd_jacobian():
    for name, box in (("lorenz", [[-20, 20]] * 3), ("nonlinear-limit-cycle", [[-1, 1]] * 2)):
        X = catalog(name)
        fd = VectorField(X.dim, X.func)
        for e in find_equilibria(X, box, 3):
            other = classify_equilibrium(fd, e.point)
            assert other.classification == e.classification
            assert np.allclose(np.sort_complex(other.eigenvalues), np.sort_complex(e.eigenvalues), atol=1e-5)


def test_equilibrium_preconditions():
    with pytest.raises(PreconditionError):
        find_equilibria(catalog("rotation"), [[-1, 1], [-1, 1]], 1)


# -- poincare sections -------------------------------------------------------------------


def test_limit_cycle_return_map():
    # the flow turns clockwise, so (1, 0) is reached from y > 0
    X = catalog("nonlinear-limit-cycle")
    p, T = poincare_map(X, SectionSpec((0, 1), 0.0, "negative"), [1.0, 0.0])
    assert np.linalg.norm(p - [1.0, 0.0]) <= 1e-6
    assert abs(T - 2 * math.pi) <= 1e-6
    p, T = poincare_map(X, SectionSpec((0, 1), 0.0, "positive"), [1.0, 0.0])
    assert np.linalg.norm(p - [-1.0, 0.0]) <= 1e-6
    assert abs(T - math.pi) <= 1e-6


def test_rotation_return_map():
    p, T = poincare_map(catalog("rotation"), SectionSpec((0, 1), 0.0, "positive"), [0.5, 0.0])
    assert np.linalg.norm(p - [0.5, 0.0]) <= 1e-6
    assert abs(T - 2 * math.pi) <= 1e-6
    p, T = poincare_map(catalog("rotation"), SectionSpec((0, 1), 0.0, "both"), [0.5, 0.0])
    assert np.linalg.norm(p - [-0.5, 0.0]) <= 1e-6
    assert abs(T - math.pi) <= 1e-6


def test_lorenz_return_map():
    X = catalog("lorenz")
    section = SectionSpec((0, 0, 1), 27.0, "negative")
    p, T = poincare_map(X, section, LORENZ_SECTION_START)
    t_ref, p_ref = LORENZ_SECTION_RETURN
    assert 0.3 < T < 2.0
    assert abs(T - t_ref) <= 1e-6
    assert np.linalg.norm(p - p_ref) <= 1e-5
    assert abs(p[2] - 27.0) <= 1e-10


def test_section_errors():
    X = catalog("rotation")
    with pytest.raises(TangencyError):
        poincare_map(X, SectionSpec((1, 0), 1.0), [1.0, 0.0])
    with pytest.raises(NoCrossingError):
        poincare_map(catalog("constant"), SectionSpec((1, 0), -1.0, "negative"), [0.0, 0.0], max_time=10.0)
    with pytest.raises(PreconditionError):
        SectionSpec((0, 0), 0.0)
    with pytest.raises(PreconditionError):
        SectionSpec((0, 1), 0.0, "up")


def test_section_normal_is_normalised():
    s = SectionSpec((0, 2), 4.0)
    assert s.normal == (0.0, 1.0)
    assert s.offset == 2.0


# -- periodic orbits ---------------------------------------------------------------------


def test_limit_cycle_orbit(limit_cycle):
    orb = limit_cycle
    assert abs(orb.period - 2 * math.pi) <= 1e-6
    assert abs(np.linalg.norm(orb.anchor) - 1.0) <= 1e-8
    mult = sorted(orb.multipliers, key=abs)
    assert abs(mult[1] - 1.0) <= 1e-4
    assert abs(mult[0] - E_4PI) <= 1e-8
    assert orb.classification == "hyperbolic"


def test_rotation_orbit_is_not_hyperbolic():
    orb = find_periodic_orbit(catalog("rotation"), [1.0, 0.0], 6.0)
    assert abs(orb.period - 2 * math.pi) <= 1e-6
    assert np.allclose(orb.multipliers, [1.0, 1.0], atol=1e-6)
    assert orb.classification == "non-hyperbolic"


def test_prime_period_recovered_from_multiple():
    orb = find_periodic_orbit(catalog("nonlinear-limit-cycle"), [1.05, 0.0], 3 * 2 * math.pi + 0.2)
    assert abs(orb.period - 2 * math.pi) <= 1e-6


def test_lorenz_short_orbit(lorenz_short_orbit):
    orb = lorenz_short_orbit
    assert abs(orb.period - LORENZ_SHORTEST_PERIOD) <= 2e-3
    assert abs(orb.period - LORENZ_SHORTEST_PERIOD) <= 1e-7
    assert orb.classification == "hyperbolic"
    assert np.max(np.abs(orb.multipliers)) > 1.0


def test_seed_at_equilibrium_is_reported():
    with pytest.raises(CollapseToEquilibriumError):
        find_periodic_orbit(catalog("lorenz"), [0.0, 0.0, 0.0], 1.0)
    with pytest.raises(PreconditionError):
        find_periodic_orbit(catalog("rotation"), [1.0, 0.0], -1.0)


def test_multiplier_classification():
    assert classify_multipliers([1.0, 0.5]) == "hyperbolic"
    assert classify_multipliers([1.0, 1.0]) == "non-hyperbolic"
    assert classify_multipliers([1.0, np.exp(0.3j), np.exp(-0.3j)]) == "elliptic"
    assert classify_multipliers([1.0, 2.0, np.exp(0.3j)]) == "non-hyperbolic"
    assert classify_multipliers([1.0, 1.0 + 5e-5]) == "non-hyperbolic"
    assert classify_multipliers([1.0, 1.0 + 5e-5], mult_tol=1e-5) == "hyperbolic"


# -- orbit invariants --------------------------------------------------------------------


def test_orbits_reverify_at_tighter_tolerance(limit_cycle, lorenz_short_orbit):
    assert verify_orbit(catalog("nonlinear-limit-cycle"), limit_cycle) <= 1e-8
    assert verify_orbit(catalog("lorenz"), lorenz_short_orbit) <= 1e-8


@pytest.mark.parametrize("which", ["limit_cycle", "lorenz_short_orbit"])
def test_trivial_multiplier_eigenvector(which, request):
    orb = request.getfixturevalue(which)
    X = catalog("nonlinear-limit-cycle" if which == "limit_cycle" else "lorenz")
    v = X(orb.anchor)
    assert np.linalg.norm(orb.monodromy @ v - v) <= 1e-4 * np.linalg.norm(v)
    assert abs(orb.multipliers[orb.trivial_index] - 1.0) <= 1e-4


@pytest.mark.parametrize("which", ["limit_cycle", "lorenz_short_orbit"])
def test_multipliers_same_at_every_orbit_point(which, request):
    orb = request.getfixturevalue(which)
    X = catalog("nonlinear-limit-cycle" if which == "limit_cycle" else "lorenz")
    for s in (0.2, 0.5, 0.9):
        q = flow(X, orb.anchor, s * orb.period, IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12))
        _, _, mult = floquet(X, q, orb.period)
        D = np.abs(np.sort_complex(mult)[:, None] - np.sort_complex(orb.multipliers)[None, :])
        assert max(D.min(axis=0).max(), D.min(axis=1).max()) <= 1e-4 * max(1.0, np.max(np.abs(mult)))


def test_monodromy_matches_tangent_flow(limit_cycle):
    X = catalog("nonlinear-limit-cycle")
    _, M = tangent_flow(X, limit_cycle.anchor, limit_cycle.period)
    assert np.max(np.abs(M - limit_cycle.monodromy)) <= 1e-6


def test_orbit_points_lie_on_the_orbit(limit_cycle):
    pts = orbit_points(catalog("nonlinear-limit-cycle"), limit_cycle, 64, closed=True)
    assert pts.shape == (65, 2)
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) <= 1e-9
    assert np.linalg.norm(pts[0] - pts[-1]) <= 1e-8


def test_orbit_distance(limit_cycle):
    dist = OrbitDistance(catalog("nonlinear-limit-cycle"), limit_cycle)
    for p, d in (([1.5, 0.0], 0.5), ([0.0, -0.25], 0.75), ([0.6, 0.8], 0.0), ([-2.0, 2.0], 2 * math.sqrt(2) - 1)):
        assert abs(dist.distance(p) - d) <= 1e-9


# -- recurrences and deduplication -------------------------------------------------------


def test_lorenz_recurrences(lorenz_pairs):
    assert len(lorenz_pairs) >= 5
    X = catalog("lorenz")
    for x, T in lorenz_pairs[:5]:
        assert T > 0.1
        assert np.linalg.norm(flow(X, x, T) - x) < 0.5


def test_constant_field_has_no_recurrences():
    assert scan_recurrences(catalog("constant"), [0.0, 0.0], 0.0, 20.0, 0.5) == []


def test_rotation_recurrences_are_multiples_of_two_pi():
    pairs = scan_recurrences(catalog("rotation"), [1.0, 0.0], 0.0, 20.0, 1e-3)
    assert pairs
    for _, T in pairs:
        k = round(T / (2 * math.pi))
        assert k >= 1
        assert abs(T - 2 * math.pi * k) <= 1e-3


def test_recurrence_eps_must_be_positive():
    with pytest.raises(PreconditionError):
        scan_recurrences(catalog("rotation"), [1.0, 0.0], 0.0, 10.0, 0.0)


def test_deduplication(lorenz_pairs, lorenz_short_orbit):
    X = catalog("lorenz")
    # a second shot from another point of the same orbit gives the same orbit
    q = flow(X, lorenz_short_orbit.anchor, 0.4 * lorenz_short_orbit.period)
    again = find_periodic_orbit(X, q, lorenz_short_orbit.period)
    assert same_orbit(X, lorenz_short_orbit, again)
    assert len(deduplicate_orbits(X, [lorenz_short_orbit, again])) == 1
    # the shortest orbit is symmetric under (x, y, z) -> (-x, -y, z)
    mirror = find_periodic_orbit(X, lorenz_short_orbit.anchor * [-1, -1, 1], lorenz_short_orbit.period)
    assert same_orbit(X, lorenz_short_orbit, mirror)
    # an asymmetric orbit and its mirror image share the period but are distinct
    x, T = next((x, T) for x, T in lorenz_pairs if 2.2 < T < 2.4)
    lone = find_periodic_orbit(X, x, T)
    partner = find_periodic_orbit(X, lone.anchor * [-1, -1, 1], lone.period)
    assert abs(partner.period - lone.period) <= 1e-8
    assert not same_orbit(X, lone, partner)
    kept = deduplicate_orbits(X, [lorenz_short_orbit, again, mirror, lone, partner])
    assert len(kept) == 3


def test_map_workers_keeps_order(monkeypatch):
    monkeypatch.setenv("CENTERLAB_THREADS", "3")
    assert map_workers(lambda k: k * k, range(10)) == [k * k for k in range(10)]
    monkeypatch.setenv("CENTERLAB_THREADS", "1")
    assert map_workers(lambda k: -k, [1, 2]) == [-1, -2]
