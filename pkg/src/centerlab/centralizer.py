"""Numerical membership and triviality tests for the centralizer of a field.

Given a reference field X and a candidate Y, the functions here measure
whether Y commutes with X (brackets and flow compositions), whether Y is
pointwise collinear with X (the residual r and coefficient h), whether h is
a first integral of X, and how the flow of Y moves along orbits of X (the
time change tau).  ``triviality_verdict`` chains them into a report.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    BlowUpError,
    CenterlabError,
    NearSingularityError,
    NotOnOrbitError,
    PreconditionError,
)
from .fields import VectorField, as_point, lie_bracket
from .flow import IntegratorConfig, flow, flow_trajectory, integrate, sample_times
from .orbits import OrbitDistance, PeriodicOrbit, floquet, orbit_points

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Thresholds:
    bracket_tol: float = 1e-6
    defect_tol: float = 1e-6
    col_tol: float = 1e-6
    h_tol: float = 1e-6
    sing_tol: float = 1e-8
    membership_tol: float = 1e-6

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise PreconditionError(f"threshold {k} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_THRESHOLDS = Thresholds()


@dataclass
class SampleSet:
    """Probe points (one per row) and a record of how they were produced."""

    points: np.ndarray
    provenance: dict
    box: np.ndarray | None = None  # (n, 2) bounds the points must lie in

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if len(self.points) == 0:
            raise PreconditionError("sample set is empty")
        if self.box is not None:
            self.box = np.asarray(self.box, dtype=float)
            lo, hi = self.box[:, 0], self.box[:, 1]
            if np.any(self.points < lo) or np.any(self.points > hi):
                raise PreconditionError("sample points outside the declared box")

    def __len__(self):
        return len(self.points)

    @classmethod
    def grid(cls, box, resolution: int) -> SampleSet:
        box = np.asarray(box, dtype=float)
        axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
        pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        return cls(pts, {"kind": "grid", "box": box.tolist(), "resolution": resolution}, box)

    @classmethod
    def annulus(cls, r_min: float, r_max: float, n_radii: int, n_angles: int) -> SampleSet:
        """Polar grid in the plane, radii from r_min to r_max inclusive."""
        r = np.linspace(r_min, r_max, n_radii)
        th = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
        R, TH = np.meshgrid(r, th, indexing="ij")
        pts = np.stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()], axis=1)
        box = np.array([[-r_max, r_max], [-r_max, r_max]]) * (1 + 1e-12)
        prov = {"kind": "grid", "shape": "annulus", "r_min": r_min, "r_max": r_max,
                "n_radii": n_radii, "n_angles": n_angles}
        return cls(pts, prov, box)

    @classmethod
    def trajectory(cls, X: VectorField, x0, t_span, n: int, cfg=None) -> SampleSet:
        tr = flow_trajectory(X, x0, t_span, n, cfg)
        prov = {"kind": "trajectory", "x0": list(map(float, x0)), "t_span": list(map(float, t_span)), "n": n}
        return cls(tr.states, prov)

    @classmethod
    def orbit(cls, X: VectorField, orbit: PeriodicOrbit, n: int, cfg=None) -> SampleSet:
        pts = orbit_points(X, orbit, n, cfg)
        prov = {"kind": "orbit", "anchor": orbit.anchor.tolist(), "period": orbit.period, "n": n}
        return cls(pts, prov)


# -- commutation ----------------------------------------------------------------------------


def _points(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.points
    return np.atleast_2d(np.asarray(samples, dtype=float))


def _flow_batch(F: VectorField, P: np.ndarray, t: float, cfg) -> np.ndarray:
    """Flow every column of P, or locate a column that blows up."""
    try:
        return flow(F, P, t, cfg)
    except BlowUpError:
        for j in range(P.shape[1]):
            try:
                flow(F, P[:, j], t, cfg)
            except BlowUpError as exc:
                exc.details = {**exc.details, "column": j}
                raise
        raise


def commutation_defect(
    X: VectorField,
    Y: VectorField,
    samples,
    s_grid: Sequence[float],
    t_grid: Sequence[float],
    cfg: IntegratorConfig | None = None,
    *,
    return_witness: bool = False,
):
    """max over samples, s, t of |Y_s(X_t(x)) - X_t(Y_s(x))|.

    Raises BlowUpError carrying the witness ``(x, s, t)`` when either flow
    leaves the integration box.
    """
    if X.dim != Y.dim:
        raise PreconditionError("fields differ in dimension")
    cfg = cfg or IntegratorConfig()
    P = as_point(_points(samples).T, X.dim)
    best, witness = 0.0, None
    for t in t_grid:
        for s in s_grid:
            try:
                a = _flow_batch(Y, _flow_batch(X, P, t, cfg), s, cfg)
                b = _flow_batch(X, _flow_batch(Y, P, s, cfg), t, cfg)
            except BlowUpError as exc:
                j = exc.details.get("column", 0)
                exc.details = {**exc.details, "witness": {"x": P[:, j].tolist(), "s": s, "t": t}}
                raise
            d = np.linalg.norm(a - b, axis=0)
            j = int(np.argmax(d))
            if d[j] >= best:
                best, witness = float(d[j]), {"x": P[:, j].tolist(), "s": s, "t": t}
    return (best, witness) if return_witness else best


def bracket_sup(X: VectorField, Y: VectorField, samples) -> float:
    P = _points(samples).T
    return float(np.max(np.linalg.norm(lie_bracket(X, Y).func(P), axis=0)))


# -- collinearity -----------------------------------------------------------------------------


def _decompose(Xv: np.ndarray, Yv: np.ndarray):
    """Coefficient h and residual r of Y against X (column-wise for batches)."""
    xx = np.sum(Xv * Xv, axis=0)
    h = np.sum(Yv * Xv, axis=0) / xx
    return h, Yv - h * Xv


def _regular(X: VectorField, x, sing_tol: float):
    x = as_point(x, X.dim)
    Xv = X.func(x)
    norm = float(np.linalg.norm(Xv))
    if norm <= sing_tol:
        raise NearSingularityError(norm, x)
    return x, Xv


def collinearity_residual(X: VectorField, Y: VectorField, x, sing_tol: float = 1e-8) -> np.ndarray:
    """r(x) = Y(x) - <Y, X>/<X, X> X(x), the part of Y orthogonal to X."""
    x, Xv = _regular(X, x, sing_tol)
    return _decompose(Xv, Y.func(x))[1]


def reparametrization_h(X: VectorField, Y: VectorField, x, sing_tol: float = 1e-8) -> float:
    """h(x) = <Y(x), X(x)> / <X(x), X(x)>."""
    x, Xv = _regular(X, x, sing_tol)
    return float(_decompose(Xv, Y.func(x))[0])


def h_constancy_along_orbit(
    X: VectorField,
    Y: VectorField,
    x0,
    T: float,
    n: int,
    cfg: IntegratorConfig | None = None,
    sing_tol: float = 1e-8,
) -> float:
    """max_i |h(x_i) - h(x_0)| over n samples of the X-orbit of x0 on [0, T]."""
    tr = flow_trajectory(X, x0, (0.0, T), n, cfg)
    Xv = X.func(tr.states.T)
    norms = np.linalg.norm(Xv, axis=0)
    bad = np.flatnonzero(norms <= sing_tol)
    if bad.size:
        k = int(bad[0])
        raise NearSingularityError(float(norms[k]), tr.states[k], float(tr.times[k]))
    h = _decompose(Xv, Y.func(tr.states.T))[0]
    return float(np.max(np.abs(h - h[0])))


# -- periodic orbits under the flow of Y ----------------------------------------------------------


def orbit_preservation(
    X: VectorField,
    Y: VectorField,
    orbit: PeriodicOrbit,
    s_list: Sequence[float],
    cfg: IntegratorConfig | None = None,
    *,
    n_samples: int = 64,
    n_reference: int = 512,
) -> float:
    """One-sided Hausdorff defect sup_s sup_q dist(Y_s(q), orbit) for q on the orbit."""
    dist = OrbitDistance(X, orbit, n_reference, cfg)
    Q = orbit_points(X, orbit, n_samples, cfg).T
    worst = 0.0
    for s in s_list:
        moved = _flow_batch(Y, Q, s, cfg or IntegratorConfig())
        for j in range(moved.shape[1]):
            worst = max(worst, dist.distance(moved[:, j]))
    return worst


def _hausdorff_complex(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def multiplier_conjugacy_check(
    X: VectorField,
    Y: VectorField,
    orbit: PeriodicOrbit,
    s: float,
    cfg: IntegratorConfig | None = None,
    *,
    proximity: float = 1e-4,
) -> float:
    """Hausdorff distance between the multipliers at the anchor and at Y_s(anchor).

    Y_s(anchor) is projected to the nearest orbit point before the monodromy
    matrix is recomputed there.
    """
    if orbit.classification != "hyperbolic":
        raise PreconditionError("multiplier conjugacy check needs a hyperbolic orbit")
    moved = flow(Y, orbit.anchor, s, cfg)
    d, u = OrbitDistance(X, orbit, cfg=cfg).nearest(moved)
    if d > proximity:
        raise PreconditionError(
            f"Y_s(anchor) is {d:.3e} away from the orbit; orbit preservation fails"
        )
    q = integrate(X.func, 0.0, orbit.anchor, u, cfg or IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)) if u else orbit.anchor
    _, _, mult = floquet(X, q, orbit.period, cfg)
    return _hausdorff_complex(orbit.multipliers, mult)


# -- time change tau ------------------------------------------------------------------------------


@dataclass
class TauEstimate:
    """Time u with X_u(x) closest to Y_t(x), the residual distance, and the
    X-period when the orbit of x closed up inside the search window."""

    tau: float
    residual: float
    period: float | None = None

    def __float__(self):
        return self.tau


def _golden(fun, a: float, b: float, xtol: float = 1e-12):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    u = 0.5 * (a + b)
    return u, fun(u)


def _sweep(f, x, lo, hi, h, cfg):
    """Grid times and X-orbit states on [lo, hi] (lo <= 0 <= hi allowed), truncated at blow-up."""
    times, states = [], []
    for sign, end in ((-1.0, lo), (1.0, hi)):
        if sign * end <= 0:
            continue
        k = int(math.floor(abs(end) / h + 1e-9))
        grid = sign * h * np.arange(1, k + 1)
        try:
            S = sample_times(f, x, 0.0, grid[-1], grid, cfg)
            times.append(grid)
            states.append(S)
        except BlowUpError as exc:
            # keep the part of the window the orbit reaches
            keep = grid[sign * grid < sign * exc.t]
            if keep.size:
                times.append(keep)
                states.append(sample_times(f, x, 0.0, keep[-1], keep, cfg))
    times.append(np.zeros(1))
    states.append(np.array([x]))
    t = np.concatenate(times)
    S = np.concatenate(states)
    order = np.argsort(t)
    return t[order], S[order]


def _local_minima(f, x, y, lo, hi, h, cfg, keep_tol):
    """Refined local minima of u -> |X_u(x) - y| on [lo, hi]."""
    if lo > 0 or hi < 0:
        start = integrate(f, 0.0, x, lo, cfg) if lo > 0 else integrate(f, 0.0, x, hi, cfg)
        shift = lo if lo > 0 else hi
        t, S = _sweep(f, start, lo - shift, hi - shift, h, cfg)
        t = t + shift
    else:
        t, S = _sweep(f, x, lo, hi, h, cfg)
    D = np.linalg.norm(S - y, axis=1)
    speed = np.linalg.norm(f(S.T), axis=0)
    out = []
    for k in range(len(D)):
        left = D[k - 1] if k > 0 else np.inf
        right = D[k + 1] if k + 1 < len(D) else np.inf
        if D[k] <= left and D[k] <= right and D[k] <= keep_tol + h * speed[k]:
            base, t0 = S[k], t[k]

            def dist(u, base=base, t0=t0):
                return float(np.linalg.norm((integrate(f, t0, base, u, cfg) if u != t0 else base) - y))

            a = t[k - 1] if k > 0 else t0
            b = t[k + 1] if k + 1 < len(t) else t0
            u, r = _golden(dist, a, b) if b > a else (t0, D[k])
            out.append((u, r))
    return out


def tau_estimate(
    X: VectorField,
    Y: VectorField,
    x,
    t: float,
    cfg: IntegratorConfig | None = None,
    *,
    window: float = 50.0,
    grid: float = 0.01,
    membership_tol: float = 1e-6,
) -> TauEstimate:
    """Time change tau with Y_t(x) = X_tau(x).

    Coarse grid over [-window, window] followed by golden-section refinement.
    If several grid minima reach the orbit (x lies on a periodic X-orbit),
    tau is ambiguous modulo the period; it is then followed continuously in
    t from tau(x, 0) = 0, searching one period around the previous value.

    Raises
    ------
    NotOnOrbitError
        Y_t(x) is farther than ``membership_tol`` from the X-orbit of x.
    """
    cfg = cfg or IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)
    x = as_point(x, X.dim)
    f = X.func
    y = flow(Y, x, t, cfg)
    mins = _local_minima(f, x, y, -window, window, grid, cfg, membership_tol)
    hits = sorted((u, r) for u, r in mins if r <= membership_tol)
    if not hits:
        best = min((r for _, r in mins), default=float(np.min(np.linalg.norm(y - x))))
        raise NotOnOrbitError(best, membership_tol)
    if len(hits) == 1:
        return TauEstimate(hits[0][0], hits[0][1])
    period = float(np.median(np.diff([u for u, _ in hits])))
    return _tau_continuation(X, Y, x, t, period, cfg, grid, membership_tol)


def _tau_continuation(X, Y, x, t, period, cfg, grid, membership_tol):
    f = X.func
    tau, t_done = 0.0, 0.0
    y = x.copy()
    dt = t / 4.0 if t else 0.0
    residual = 0.0
    while abs(t - t_done) > 1e-15 * max(1.0, abs(t)):
        dt = math.copysign(min(abs(dt), abs(t - t_done)), t)
        y_next = flow(Y, y, dt, cfg)
        mins = _local_minima(f, x, y_next, tau - 0.5 * period, tau + 0.5 * period, grid, cfg, membership_tol)
        hits = [(u, r) for u, r in mins if r <= membership_tol]
        if not hits:
            best = min((r for _, r in mins), default=math.inf)
            raise NotOnOrbitError(best, membership_tol)
        u, r = min(hits, key=lambda h: abs(h[0] - tau))
        if abs(u - tau) > 0.25 * period:
            dt *= 0.5
            continue
        tau, residual, y, t_done = u, r, y_next, t_done + dt
        dt *= 1.5
    return TauEstimate(tau, residual, period)


# -- verdict ----------------------------------------------------------------------------------------


@dataclass
class CentralizerReport:
    bracket_sup: float
    commutation_defect: float
    residual_sup: float
    h_values: np.ndarray
    h_orbit_variation: float
    h_stddev: float
    c_estimate: float | None
    verdict: str  # "trivial" | "quasi-trivial" | "non-collinear" | "not-commuting"
    thresholds: Thresholds
    samples_used: int
    samples_filtered: int
    provenance: dict
    marginal: list = field(default_factory=list)
    h_continuity: dict = field(default_factory=dict)
    defect_witness: dict | None = None
    points: np.ndarray | None = field(default=None, repr=False)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "c_estimate": self.c_estimate,
            "bracket_sup": self.bracket_sup,
            "commutation_defect": self.commutation_defect,
            "defect_witness": self.defect_witness,
            "residual_sup": self.residual_sup,
            "h_orbit_variation": self.h_orbit_variation,
            "h_stddev": self.h_stddev,
            "h_values": np.asarray(self.h_values).tolist(),
            "h_continuity": self.h_continuity,
            "marginal": self.marginal,
            "samples_used": self.samples_used,
            "samples_filtered": self.samples_filtered,
            "sample_provenance": self.provenance,
            "thresholds": self.thresholds.to_dict(),
        }
        if self.points is not None:
            out["h_profile"] = [
                {"point": p.tolist(), "h": float(h)} for p, h in zip(self.points, self.h_values)
            ]
        return out


def _continuity_modulus(points: np.ndarray, h: np.ndarray) -> dict:
    if len(points) < 2:
        return {"radius": 0.0, "modulus": 0.0, "pairs": 0}
    tree = cKDTree(points)
    d, _ = tree.query(points, k=2)
    radius = 2.0 * float(np.median(d[:, 1]))
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return {"radius": radius, "modulus": 0.0, "pairs": 0}
    diff = np.abs(h[pairs[:, 0]] - h[pairs[:, 1]])
    return {"radius": radius, "modulus": float(diff.max()), "pairs": int(len(pairs))}


def triviality_verdict(
    X: VectorField,
    Y: VectorField,
    samples: SampleSet,
    orbit_probes: Sequence = (),
    cfg: IntegratorConfig | None = None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    *,
    s_grid: Sequence[float] = (-1.0, -0.5, 0.5, 1.0),
    t_grid: Sequence[float] = (-1.0, -0.5, 0.5, 1.0),
    orbit_samples: int = 64,
) -> CentralizerReport:
    """Classify Y against X: not-commuting, non-collinear, quasi-trivial or trivial.

    ``orbit_probes`` is a list of ``(x0, T)`` orbit segments along which the
    constancy of h is measured.  Samples within ``sing_tol * max(1, |x|)`` of
    a zero of X are dropped and counted.
    """
    cfg = cfg or IntegratorConfig()
    th = thresholds
    P = samples.points
    Xv = X.func(P.T)
    scale = np.maximum(1.0, np.linalg.norm(P, axis=1))
    keep = np.linalg.norm(Xv, axis=0) > th.sing_tol * scale
    P = P[keep]
    if len(P) == 0:
        raise PreconditionError("no samples left after removing near-equilibrium points")
    filtered = int((~keep).sum())

    b_sup = bracket_sup(X, Y, P)
    defect, witness = commutation_defect(X, Y, P, s_grid, t_grid, cfg, return_witness=True)
    h, r = _decompose(X.func(P.T), Y.func(P.T))
    res_sup = float(np.max(np.linalg.norm(r, axis=0)))
    h_std = float(np.std(h))
    orbit_var = 0.0
    for x0, T in orbit_probes:
        orbit_var = max(orbit_var, h_constancy_along_orbit(X, Y, x0, T, orbit_samples, cfg, th.sing_tol))

    warnings = []
    if b_sup > th.bracket_tol or defect > th.defect_tol:
        verdict = "not-commuting"
    elif res_sup > th.col_tol:
        verdict = "non-collinear"
    elif orbit_var > th.h_tol:
        # Y = hX with h varying along X-orbits cannot commute with X
        verdict = "not-commuting"
        warnings.append("h varies along orbit probes although bracket and defect are small")
    elif h_std > th.h_tol:
        verdict = "quasi-trivial"
    else:
        verdict = "trivial"
    c = float(np.median(h)) if verdict == "trivial" else None

    marginal = []
    for name, value, tol in (
        ("bracket_sup", b_sup, th.bracket_tol),
        ("commutation_defect", defect, th.defect_tol),
        ("residual_sup", res_sup, th.col_tol),
        ("h_orbit_variation", orbit_var, th.h_tol),
        ("h_stddev", h_std, th.h_tol),
    ):
        if tol / 10.0 < value <= tol * 10.0:
            marginal.append(name)

    if not orbit_probes:
        warnings.append("no orbit probes: constancy of h along orbits not measured")
    return CentralizerReport(
        bracket_sup=b_sup,
        commutation_defect=float(defect),
        residual_sup=res_sup,
        h_values=h,
        h_orbit_variation=orbit_var,
        h_stddev=h_std,
        c_estimate=c,
        verdict=verdict,
        thresholds=th,
        samples_used=len(P),
        samples_filtered=filtered,
        provenance=samples.provenance,
        marginal=marginal,
        h_continuity=_continuity_modulus(P, h),
        defect_witness=witness,
        points=P,
        warnings=warnings,
    )
