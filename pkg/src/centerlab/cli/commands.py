"""Analyses run by the ``bracket``, ``flow``, ``orbits``, ``centralizer`` and ``plot`` subcommands.

Each analysis takes a parsed :class:`Scenario` and a random generator and
returns ``(result, thresholds, warnings)`` for the JSON report, except
``flow`` and ``plot`` which return CSV and SVG text.
"""

from __future__ import annotations

import io

import numpy as np

from ..centralizer import SampleSet, triviality_verdict
from ..errors import BlowUpError, CenterlabError
from ..fields import lie_bracket, poisson_bracket
from ..flow import flow_trajectory, midpoint_integrate
from ..orbits import (
    deduplicate_orbits,
    find_equilibria,
    find_periodic_orbit,
    map_workers,
    orbit_points,
    scan_recurrences,
    verify_orbit,
)
from .config import Scenario
from .svg import phase_portrait


def _box(sc: Scenario, key: str, dim: int, default: float = 2.0) -> np.ndarray:
    box = sc.options.get(key)
    if box is None:
        return np.array([[-default, default]] * dim)
    if len(box) != 2 * dim:
        raise sc.error(key, f"{key} needs {2 * dim} numbers (lo, hi per axis), got {len(box)}")
    box = np.array(box, dtype=float).reshape(dim, 2)
    if np.any(box[:, 1] <= box[:, 0]):
        raise sc.error(key, f"{key} bounds must satisfy lo < hi")
    return box


def _point(sc: Scenario, key: str, value, dim: int) -> np.ndarray:
    if len(value) != dim:
        raise sc.error(key, f"{key} needs {dim} coordinates, got {len(value)}")
    return np.array(value, dtype=float)


def _point_and_time(sc: Scenario, key: str, value, dim: int):
    if len(value) != dim + 1:
        raise sc.error(key, f"{key} needs {dim} coordinates and a time, got {len(value)} numbers")
    return np.array(value[:dim], dtype=float), float(value[dim])


def _grid(box: np.ndarray, resolution: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)


# -- bracket ------------------------------------------------------------------------------


def run_bracket(sc: Scenario, rng):
    o = sc.options
    kind = o["kind"]
    if kind not in ("lie", "poisson"):
        raise sc.error("kind", "kind must be 'lie' or 'poisson'")
    if o["resolution"] < 2:
        raise sc.error("resolution", "resolution must be at least 2")
    if kind == "poisson":
        for key in ("left", "right"):
            if o[key] not in sc.hamiltonians:
                raise sc.error(key, f"{o[key]!r} is not a [hamiltonian]")
        H, K = sc.hamiltonians[o["left"]], sc.hamiltonians[o["right"]]
        if H.dim != K.dim:
            raise sc.error("right", "Hamiltonians live on different phase spaces")
        dim = H.dim
        P = poisson_bracket(H.energy, K.energy)
        evaluate = lambda pts: np.atleast_1d(P(pts.T))  # noqa: E731
    else:
        X, Y = sc.field("left"), sc.field("right")
        if X.dim != Y.dim:
            raise sc.error("right", f"fields differ in dimension ({X.dim} vs {Y.dim})")
        dim = X.dim
        B = lie_bracket(X, Y)
        evaluate = lambda pts: B(pts.T).T  # noqa: E731
    box = _box(sc, "box", dim)
    pts = _grid(box, o["resolution"])
    values = evaluate(pts)
    size = np.abs(values) if kind == "poisson" else np.linalg.norm(values, axis=1)
    k = int(np.argmax(size))
    result = {
        "kind": kind,
        "left": o["left"],
        "right": o["right"],
        "grid": {"box": box, "resolution": o["resolution"], "points": len(pts)},
        "sup_norm": float(size[k]),
        "argmax": pts[k],
    }
    if kind == "poisson":
        result["min"] = float(values.min())
        result["max"] = float(values.max())
    probes = [_point(sc, "probe", p, dim) for p in o["probe"]]
    if probes:
        vals = evaluate(np.array(probes))
        result["probes"] = [{"point": p, "value": v} for p, v in zip(probes, vals)]
    return result, {}, []


# -- flow ----------------------------------------------------------------------------------


def _csv(times, states) -> str:
    buf = io.StringIO()
    dim = states.shape[1]
    buf.write(",".join(["t"] + [f"x{i}" for i in range(dim)]) + "\n")
    for t, row in zip(times, states):
        buf.write(",".join("%.17g" % v for v in (t, *row)) + "\n")
    return buf.getvalue()


def run_flow(sc: Scenario, rng):
    o = sc.options
    X = sc.field("field")
    cfg = sc.integrator()
    x0 = _point(sc, "x0", o["x0"], X.dim)
    t0, t1, n = o["t_start"], o["t_end"], o["samples"]
    if not t1 > t0:
        raise sc.error("t_end", "t_end must exceed t_start")
    if n < 2:
        raise sc.error("samples", "samples must be at least 2")
    if cfg.scheme == "symplectic-midpoint":
        times = np.linspace(t0, t1, n)
        states = np.empty((n, X.dim))
        x = midpoint_integrate(X, x0, t0, cfg.step) if t0 else x0
        states[0] = x
        for i in range(1, n):
            x = midpoint_integrate(X, x, times[i] - times[i - 1], cfg.step)
            states[i] = x
    else:
        tr = flow_trajectory(X, x0, (t0, t1), n, cfg)
        times, states = tr.times, tr.states
    return _csv(times, states)


# -- orbits --------------------------------------------------------------------------------


def shoot_seeds(X, seeds, cfg, mult_tol):
    """Shoot from every ``(point, period)`` seed; failures come back as error dicts."""
    def one(seed):
        x, T = seed
        try:
            return find_periodic_orbit(X, x, T, mult_tol=mult_tol), None
        except CenterlabError as exc:
            return None, {"seed": x, "period_guess": T, **exc.to_dict()}

    return map_workers(one, seeds)


def run_orbits(sc: Scenario, rng):
    o = sc.options
    X = sc.field("field")
    cfg = sc.integrator()
    box = _box(sc, "box", X.dim)
    if o["grid"] < 2:
        raise sc.error("grid", "grid must be at least 2")
    eqs = find_equilibria(X, box, o["grid"], eig_tol=o["eig_tol"])
    seeds = [_point_and_time(sc, "guess", g, X.dim) for g in o["guess"]]
    scanned = 0
    if o["scan_from"] is not None:
        start = _point(sc, "scan_from", o["scan_from"], X.dim)
        pairs = scan_recurrences(X, start, o["burn_in"], o["scan_time"], o["eps"], cfg)
        pairs.sort(key=lambda p: p[1])
        scanned = len(pairs)
        seeds += pairs[: o["max_seeds"]]
    shot = shoot_seeds(X, seeds, cfg, o["mult_tol"])
    found = [orb for orb, _ in shot if orb is not None]
    failures = [err for _, err in shot if err is not None]
    distinct = deduplicate_orbits(X, found)
    orbits = [{**orb.to_dict(), "verification_error": verify_orbit(X, orb)} for orb in distinct]
    result = {
        "field": o["field"],
        "equilibria": [e.to_dict() for e in eqs],
        "equilibrium_search": {"seeds": eqs.seeds, "converged": eqs.converged, "dropped": eqs.dropped},
        "recurrence_pairs": scanned,
        "seeds_shot": len(seeds),
        "periodic_orbits": orbits,
        "shooting_failures": failures,
    }
    warnings = [f"{len(failures)} of {len(seeds)} shooting seeds did not converge"] if failures else []
    return result, {}, warnings


# -- centralizer ---------------------------------------------------------------------------


def run_centralizer(sc: Scenario, rng):
    o = sc.options
    X, Y = sc.field("x"), sc.field("y")
    if X.dim != Y.dim:
        raise sc.error("y", f"fields differ in dimension ({X.dim} vs {Y.dim})")
    cfg = sc.integrator()
    kind = o["samples"]
    if kind == "grid":
        samples = SampleSet.grid(_box(sc, "box", X.dim), o["resolution"])
    elif kind == "annulus":
        if X.dim != 2:
            raise sc.error("samples", "annulus samples need a planar field")
        if not 0 <= o["r_min"] < o["r_max"]:
            raise sc.error("r_max", "need 0 <= r_min < r_max")
        samples = SampleSet.annulus(o["r_min"], o["r_max"], o["n_radii"], o["n_angles"])
    elif kind == "trajectory":
        if o["x0"] is None:
            raise sc.error("samples", "trajectory samples need x0")
        x0 = _point(sc, "x0", o["x0"], X.dim)
        if len(o["t_span"]) != 2:
            raise sc.error("t_span", "t_span needs two times")
        samples = SampleSet.trajectory(X, x0, o["t_span"], o["n"], cfg)
    elif kind == "random":
        box = _box(sc, "box", X.dim)
        pts = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((o["n"], X.dim))
        samples = SampleSet(pts, {"kind": "random", "box": box.tolist(), "n": o["n"]}, box)
    else:
        raise sc.error("samples", "samples must be grid, annulus, trajectory or random")
    probes = [_point_and_time(sc, "orbit_probe", p, X.dim) for p in o["orbit_probe"]]
    report = triviality_verdict(
        X, Y, samples, probes, cfg, sc.thresholds(), s_grid=o["s_grid"], t_grid=o["t_grid"]
    )
    result = {"x": o["x"], "y": o["y"], **report.to_dict()}
    return result, {}, report.warnings


# -- plot ----------------------------------------------------------------------------------


def trajectory_or_prefix(X, x0, t_end, n, cfg):
    """Samples of the orbit of x0 on [0, t_end], cut short before a blow-up."""
    try:
        return flow_trajectory(X, x0, (0.0, t_end), n, cfg).states, False
    except BlowUpError as exc:
        t_stop = 0.99 * abs(exc.t)
        m = max(2, int(n * t_stop / t_end))
        return flow_trajectory(X, x0, (0.0, t_stop), m, cfg).states, True


def run_plot(sc: Scenario, rng):
    o = sc.options
    X = sc.field("field")
    cfg = sc.integrator()
    axes = tuple(int(a) for a in o["axes"])
    if len(axes) != 2 or not all(0 <= a < X.dim for a in axes) or axes[0] == axes[1]:
        raise sc.error("axes", f"axes must be two distinct coordinate indices below {X.dim}")
    if not o["t_end"] > 0:
        raise sc.error("t_end", "t_end must be positive")
    curves, warnings = [], []
    for x0 in o["x0"]:
        x0 = _point(sc, "x0", x0, X.dim)
        pts, cut = trajectory_or_prefix(X, x0, o["t_end"], o["samples"], cfg)
        if cut:
            warnings.append(f"trajectory from {x0.tolist()} left the integration box and was cut")
        curves.append(pts)
    orbits = []
    for g in o["orbit"]:
        x, T = _point_and_time(sc, "orbit", g, X.dim)
        orb = find_periodic_orbit(X, x, T)
        orbits.append((orb, orbit_points(X, orb, 512, closed=True)))
    view = o["view"]
    if view is not None and len(view) != 4:
        raise sc.error("view", "view needs (xmin, xmax, ymin, ymax)")
    svg = phase_portrait(
        [c[:, axes] for c in curves], [p[:, axes] for _, p in orbits], view=view, title=o["field"]
    )
    return svg, warnings
