"""Built-in studies behind ``centerlab reproduce <id>``."""

from __future__ import annotations

import math

import numpy as np

from ..catalog import catalog
from ..centralizer import (
    DEFAULT_THRESHOLDS,
    SampleSet,
    bracket_sup,
    commutation_defect,
    multiplier_conjugacy_check,
    orbit_preservation,
    reparametrization_h,
    tau_estimate,
    triviality_verdict,
)
from ..dsl import compile_scalar, compile_vector
from ..errors import NotOnOrbitError
from ..fields import hamiltonian_field, lie_bracket, poisson_bracket
from ..flow import IntegratorConfig, flow
from ..orbits import (
    deduplicate_orbits,
    find_equilibria,
    find_periodic_orbit,
    scan_recurrences,
    verify_orbit,
)
from .commands import shoot_seeds

PLANE = np.array([[-2.0, 2.0], [-2.0, 2.0]])


def _grid(box, resolution):
    return SampleSet.grid(box, resolution).points


def default_thresholds() -> dict:
    return {**DEFAULT_THRESHOLDS.to_dict(), "integrator": IntegratorConfig().to_dict()}


def _orbit_summary(field, orb) -> dict:
    return {**orb.to_dict(), "verification_error": verify_orbit(field, orb)}


# -- constant field and fields independent of x1 ------------------------------------------


def flowbox(rng):
    X = catalog("constant", (2,))
    pts = _grid(PLANE, 10)
    independent = ["(y^2, sin(y))", "(1, cos(y) + y)", "(exp(y), 3)"]
    dependent = ["(x, 0)", "(0, x*y)"]
    rows = []
    for text in independent + dependent:
        Y = compile_vector(text)
        rows.append({
            "y": text,
            "depends_on_x1": text in dependent,
            "bracket_sup": bracket_sup(X, Y, pts),
            "commutation_defect": commutation_defect(X, Y, pts[::7], [0.5, 1.0], [0.5, 1.0]),
        })
    Y = compile_vector("(x, 0)")
    at = np.array([1.0, 0.0])
    witness = {
        "y": "(x, 0)",
        "point": at,
        "bracket": lie_bracket(X, Y)(at),
        "bracket_norm": float(np.linalg.norm(lie_bracket(X, Y)(at))),
        "defect_s1_t1": commutation_defect(X, Y, [at], [1.0], [1.0]),
        "expected_defect": math.e - 1.0,
    }
    X3 = catalog("constant", (3,))
    Y3 = compile_vector("(y*z, sin(y), z^2)")
    pts3 = SampleSet.grid(np.array([[-2.0, 2.0]] * 3), 5).points
    result = {
        "x": "constant (1, 0)",
        "fields": rows,
        "x1_dependence_witness": witness,
        "three_dimensional": {"y": "(y*z, sin(y), z^2)", "bracket_sup": bracket_sup(X3, Y3, pts3)},
    }
    return result, default_thresholds(), []


# -- Hamiltonians H = x, K = y --------------------------------------------------------------


def hamiltonian_levels(rng):
    H = compile_scalar("x", ("x", "y"), "H")
    K = compile_scalar("y", ("x", "y"), "K")
    P = poisson_bracket(H, K)
    pts = _grid(PLANE, 20)
    values = np.atleast_1d(P(pts.T))
    XH, XK = hamiltonian_field(H), hamiltonian_field(K)
    origin = np.zeros(2)
    moved = flow(XK, origin, 1.0)
    result = {
        "hamiltonians": {"H": "x", "K": "y"},
        "poisson_bracket": {"min": float(values.min()), "max": float(values.max()), "points": len(pts)},
        "fields": {"X_H": XH(origin), "X_K": XK(origin)},
        "lie_bracket_sup": bracket_sup(XH, XK, pts),
        "commutation_defect": commutation_defect(XH, XK, pts[::13], [-1.0, 1.0], [-1.0, 1.0]),
        "level_set_witness": {
            "start": origin,
            "time": 1.0,
            "end": moved,
            "H_start": float(H(origin)),
            "H_end": float(H(moved)),
        },
    }
    return result, default_thresholds(), []


# -- rotation and its centralizer -----------------------------------------------------------


def rotation(rng):
    X = catalog("rotation")
    Y = catalog("nonlinear-limit-cycle")
    Y_dsl = compile_vector("(y + x*(1-x^2-y^2), -x + y*(1-x^2-y^2))")
    grid = _grid(PLANE, 20)
    # backward flow of Y escapes in finite time outside the unit disc
    reach = grid[np.linalg.norm(grid, axis=1) < 1.05]
    st = [-1.0, -0.5, 0.5, 1.0]

    linear = []
    for a, b, c, d in [(1, 2, -2, 1), (0, 1, -1, 0), (1, 2, 3, 4), (2, 0, 0, -1)]:
        Z = compile_vector(f"({a}*x + {b}*y, {c}*x + {d}*y)")
        p = np.array([0.3, -0.7])
        expected = [(b + c) * p[0] + (d - a) * p[1], (d - a) * p[0] - (b + c) * p[1]]
        linear.append({
            "abcd": [a, b, c, d],
            "commutes": bool(b + c == 0 and a == d),
            "bracket_at": p,
            "bracket": lie_bracket(X, Z)(p),
            "expected": expected,
        })

    cycle = find_periodic_orbit(Y, [1.0, 0.0], 6.0)
    circle = find_periodic_orbit(X, [1.0, 0.0], 6.0)
    euler = catalog("euler")
    try:
        tau_estimate(X, euler, [1.0, 0.0], 1.0)
        tau_result = {"error": None}
    except NotOnOrbitError as exc:
        tau_result = exc.to_dict()

    verdict = triviality_verdict(
        X, Y, SampleSet.annulus(0.25, 2.0, 8, 16), [((1.5, 0.0), 2 * math.pi)],
        s_grid=(0.5, 1.0), t_grid=st,
    )
    commuter = triviality_verdict(
        X, catalog("linear-commuter", (1.0, 1.0)), SampleSet.annulus(0.25, 2.0, 8, 16),
        [((1.0, 0.0), 2 * math.pi)],
    )
    result = {
        "x": "rotation",
        "y": "nonlinear-limit-cycle",
        "dsl_matches_catalog": float(np.max(np.abs(Y_dsl(grid.T) - Y(grid.T)))),
        "bracket_sup": bracket_sup(X, Y, grid),
        "grid": {"box": PLANE, "resolution": 20},
        "commutation_defect": commutation_defect(X, Y, reach, st, st),
        "defect_samples": len(reach),
        "linear_fields": linear,
        "limit_cycle": _orbit_summary(Y, cycle),
        "orbit_preservation": orbit_preservation(Y, X, cycle, [0.5, 1.0, 2.0]),
        "multiplier_conjugacy": multiplier_conjugacy_check(Y, X, cycle, 1.0),
        "euler_control": {
            "orbit_preservation": orbit_preservation(X, euler, circle, [1.0]),
            "expected": math.e - 1.0,
            "tau": tau_result,
        },
        "verdict_limit_cycle_field": {"verdict": verdict.verdict, "residual_sup": verdict.residual_sup,
                                      "bracket_sup": verdict.bracket_sup,
                                      "commutation_defect": verdict.commutation_defect},
        "verdict_linear_commuter": {"y": "linear-commuter(1,1)", "verdict": commuter.verdict,
                                    "residual_sup": commuter.residual_sup},
    }
    return result, default_thresholds(), verdict.warnings


# -- linear center and the quartic Hamiltonian ----------------------------------------------


def center(rng):
    X = hamiltonian_field(catalog("center-hamiltonian"))
    Y = hamiltonian_field(catalog("quartic-hamiltonian"))
    samples = SampleSet.annulus(0.25, 2.0, 8, 16)
    probes = [((r, 0.0), 2 * math.pi) for r in (0.5, 1.0, 1.5)]
    report = triviality_verdict(X, Y, samples, probes)
    r = np.sqrt(rng.uniform(0.25**2, 4.0, 100))
    th = rng.uniform(0.0, 2 * math.pi, 100)
    P = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    h_err = max(abs(reparametrization_h(X, Y, p) - 2 * float(p @ p)) for p in P)
    taus = []
    for x in ([1.0, 0.0], [0.0, 0.8], [-1.2, 0.5]):
        for t in (0.5, 1.0):
            est = tau_estimate(X, Y, x, t)
            h = reparametrization_h(X, Y, x)
            taus.append({"x": x, "t": t, "tau": est.tau, "h_times_t": h * t, "residual": est.residual})
    result = {
        "x": "hamiltonian field of center-hamiltonian",
        "y": "hamiltonian field of quartic-hamiltonian",
        "h_at_1_0": reparametrization_h(X, Y, [1.0, 0.0]),
        "random_probes": {"count": len(P), "max_abs_h_minus_2r2": h_err},
        "tau": taus,
        **report.to_dict(),
    }
    return result, default_thresholds(), report.warnings


# -- Lorenz ------------------------------------------------------------------------------------


def lorenz(rng, max_seeds: int = 12):
    X = catalog("lorenz")
    eqs = find_equilibria(X, np.array([[-20.0, 20.0]] * 3), 5)
    start = flow(X, [1.0, 1.0, 1.0], 50.0)
    pairs = sorted(scan_recurrences(X, start, 0.0, 200.0, 0.5), key=lambda p: p[1])
    shot = shoot_seeds(X, pairs[:max_seeds], None, 1e-4)
    found = [orb for orb, _ in shot if orb is not None]
    orbits = deduplicate_orbits(X, found)
    hyperbolic = [o for o in orbits if o.classification == "hyperbolic"]

    samples = SampleSet.trajectory(X, start, (0.0, 20.0), 200)
    probes = [(o.anchor, o.period) for o in hyperbolic[:3]]
    grid = (0.25, 0.5)  # backward Lorenz flow leaves any box quickly
    N = compile_vector("(-y, x, 0)")
    verdicts = []
    for label, Y in (("1*X", X), ("2.5*X", X.scaled(2.5)), ("X + 0.01*N", X + N.scaled(0.01))):
        rep = triviality_verdict(X, Y, samples, probes, s_grid=grid, t_grid=grid)
        verdicts.append({
            "y": label,
            "verdict": rep.verdict,
            "c_estimate": rep.c_estimate,
            "bracket_sup": rep.bracket_sup,
            "commutation_defect": rep.commutation_defect,
            "residual_sup": rep.residual_sup,
            "h_orbit_variation": rep.h_orbit_variation,
            "h_stddev": rep.h_stddev,
            "marginal": rep.marginal,
        })
    failures = [err for _, err in shot if err is not None]
    result = {
        "parameters": {"sigma": 10.0, "r": 28.0, "b": 8.0 / 3.0},
        "equilibria": [e.to_dict() for e in eqs],
        "recurrence_pairs": len(pairs),
        "seeds_shot": min(len(pairs), max_seeds),
        "shooting_failures": len(failures),
        "periodic_orbits": [_orbit_summary(X, o) for o in orbits],
        "distinct_hyperbolic_orbits": len(hyperbolic),
        "shortest_period": min((o.period for o in hyperbolic), default=None),
        "sample_provenance": samples.provenance,
        "verdict_grid": {"s": list(grid), "t": list(grid)},
        "verdicts": verdicts,
    }
    warnings = [f"{len(failures)} shooting seeds did not converge"] if failures else []
    return result, default_thresholds(), warnings


STUDIES = {
    "ex-flowbox": flowbox,
    "ex-hamiltonian-levels": hamiltonian_levels,
    "ex-rotation": rotation,
    "ex-center": center,
    "lorenz": lorenz,
}
