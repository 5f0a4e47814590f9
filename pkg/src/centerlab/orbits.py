"""Equilibria, Poincare return maps, periodic orbits and Floquet multipliers."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    CenterlabError,
    CollapseToEquilibriumError,
    ConvergenceError,
    NoCrossingError,
    PreconditionError,
    TangencyError,
)
from .fields import VectorField, as_point
from .flow import IntegratorConfig, dopri_steps, flow, integrate, sample_times, tangent_flow

EIG_TOL = 1e-6
MULT_TOL = 1e-4
SHOOTING_CONFIG = IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)


def worker_count() -> int:
    """Worker cap from ``CENTERLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CENTERLAB_THREADS", "1")))
    except ValueError:
        return 1


def map_workers(fn, items):
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _sort_complex(values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    order = sorted(range(len(values)), key=lambda i: (round(values[i].real, 12), round(values[i].imag, 12)))
    return values[order]


# -- equilibria ---------------------------------------------------------------------------


@dataclass
class Equilibrium:
    point: np.ndarray
    eigenvalues: np.ndarray
    classification: str  # "hyperbolic" | "non-hyperbolic"
    eig_tol: float = EIG_TOL
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "point": self.point.tolist(),
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "classification": self.classification,
            "eig_tol": self.eig_tol,
            "residual": self.residual,
        }


@dataclass
class EquilibriumSearch:
    """Deduplicated equilibria plus seed bookkeeping; iterates over the equilibria."""

    equilibria: list
    seeds: int
    converged: int
    dropped: int

    def __iter__(self):
        return iter(self.equilibria)

    def __len__(self):
        return len(self.equilibria)

    def __getitem__(self, i):
        return self.equilibria[i]


def classify_equilibrium(field: VectorField, point, eig_tol: float = EIG_TOL) -> Equilibrium:
    point = as_point(point, field.dim)
    eig = _sort_complex(np.linalg.eigvals(field.jacobian(point)))
    hyperbolic = bool(np.all(np.abs(eig.real) > eig_tol))
    return Equilibrium(
        point,
        eig,
        "hyperbolic" if hyperbolic else "non-hyperbolic",
        eig_tol,
        float(np.linalg.norm(field(point))),
    )


def newton_root(field: VectorField, x0, tol: float = 1e-12, max_iter: int = 100):
    """Damped Newton iteration for X(x) = 0.  Returns the root or None."""
    f, jac = field.func, field.jac_func()
    x = np.array(x0, dtype=float)
    try:
        fx = f(x)
        norm = np.linalg.norm(fx)
        for _ in range(max_iter):
            if norm <= tol:
                return x
            step = np.linalg.lstsq(jac(x), -fx, rcond=None)[0]
            alpha = 1.0
            for _ in range(30):
                trial = x + alpha * step
                ft = f(trial)
                nt = np.linalg.norm(ft)
                if np.isfinite(nt) and nt < norm:
                    break
                alpha *= 0.5
            else:
                return x if norm <= tol else None
            x, fx, norm = trial, ft, nt
    except (CenterlabError, np.linalg.LinAlgError, FloatingPointError):
        return None
    return x if norm <= tol else None


def _box_bounds(box, dim: int) -> np.ndarray:
    b = np.asarray(box, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (dim, 1))
    if b.shape != (dim, 2) or not np.all(np.isfinite(b)) or np.any(b[:, 1] <= b[:, 0]):
        raise PreconditionError("box must be finite (lo, hi) bounds per axis")
    return b


def find_equilibria(
    field: VectorField,
    box,
    grid_per_axis: int,
    *,
    tol: float = 1e-12,
    max_iter: int = 100,
    dedup: float = 1e-6,
    eig_tol: float = EIG_TOL,
) -> EquilibriumSearch:
    """Newton from every node of a regular grid over ``box``, then deduplicate.

    Seeds whose iteration fails to converge are dropped and counted.
    """
    if grid_per_axis < 2:
        raise PreconditionError("grid_per_axis must be at least 2")
    bounds = _box_bounds(box, field.dim)
    axes = [np.linspace(lo, hi, grid_per_axis) for lo, hi in bounds]
    seeds = [np.array(p) for p in itertools.product(*axes)]
    roots = map_workers(lambda s: newton_root(field, s, tol, max_iter), seeds)
    found = []
    converged = 0
    # the box only places seeds; roots outside it are kept
    for r in roots:
        if r is None:
            continue
        converged += 1
        if all(np.linalg.norm(r - q) > dedup for q in found):
            found.append(r)
    found.sort(key=lambda p: tuple(np.round(p, 9)))
    eqs = [classify_equilibrium(field, p, eig_tol) for p in found]
    return EquilibriumSearch(eqs, len(seeds), converged, len(seeds) - converged)


# -- Poincare sections ---------------------------------------------------------------------


@dataclass(frozen=True)
class SectionSpec:
    """Hyperplane <normal, x> = offset; the normal is rescaled to unit length."""

    normal: tuple
    offset: float = 0.0
    direction: str = "both"  # "positive" | "negative" | "both"

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if not norm > 0 or not np.all(np.isfinite(n)):
            raise PreconditionError("section normal must be a finite non-zero vector")
        if self.direction not in ("positive", "negative", "both"):
            raise PreconditionError(f"unknown crossing direction {self.direction!r}")
        object.__setattr__(self, "normal", tuple(n / norm))
        object.__setattr__(self, "offset", float(self.offset) / norm)

    def value(self, x) -> float:
        return float(np.dot(self.normal, x) - self.offset)

    def _crosses(self, g0: float, g1: float) -> bool:
        up = g0 < 0.0 <= g1
        down = g0 > 0.0 >= g1
        if self.direction == "positive":
            return up
        if self.direction == "negative":
            return down
        return up or down


def poincare_map(
    field: VectorField,
    section: SectionSpec,
    x0,
    cfg: IntegratorConfig | None = None,
    *,
    max_time: float = 1e3,
    min_time: float = 1e-6,
    tol: float = 1e-12,
):
    """Next crossing of ``section`` after ``x0``: returns ``(point, return_time)``."""
    cfg = cfg or IntegratorConfig()
    x0 = as_point(x0, field.dim)
    normal = np.asarray(section.normal)
    speed = float(np.dot(normal, field(x0)))
    if abs(speed) <= 1e-8:
        raise TangencyError(f"field is tangent to the section at x0 (<n, X> = {speed:.2e})")
    for step in dopri_steps(field.func, 0.0, x0, max_time, cfg):
        g0, g1 = section.value(step.y0), section.value(step.y1)
        if not section._crosses(g0, g1):
            continue
        t_star = _section_root(step, section, g0, g1)
        if t_star < min_time:
            continue
        return _polish_crossing(field, section, step, t_star, cfg, tol)
    raise NoCrossingError(f"no section crossing within time {max_time:g}")


def _section_root(step, section, g0, g1) -> float:
    # secant/bisection on the dense-output polynomial
    a, b = step.t0, step.t1
    ga, gb = g0, g1
    for _ in range(100):
        t = b - gb * (b - a) / (gb - ga) if gb != ga else 0.5 * (a + b)
        if not (min(a, b) < t < max(a, b)):
            t = 0.5 * (a + b)
        g = section.value(step(t))
        if abs(g) < 1e-15 or abs(b - a) < 1e-15:
            return t
        if (g < 0) == (ga < 0):
            a, ga = t, g
        else:
            b, gb = t, g
    return t


def _polish_crossing(field, section, step, t_star, cfg, tol):
    normal = np.asarray(section.normal)
    x = None
    for _ in range(30):
        x = integrate(field.func, step.t0, step.y0, t_star, cfg)
        g = section.value(x)
        rate = float(np.dot(normal, field.func(x)))
        if abs(rate) <= 1e-8:
            raise TangencyError(f"orbit meets the section tangentially at t={t_star:.6g}")
        if abs(g) <= tol:
            break
        t_star -= g / rate
    return x, float(t_star)


# -- periodic orbits -------------------------------------------------------------------------


@dataclass
class PeriodicOrbit:
    anchor: np.ndarray
    period: float
    monodromy: np.ndarray
    multipliers: np.ndarray
    classification: str  # "hyperbolic" | "elliptic" | "non-hyperbolic"
    mult_tol: float = MULT_TOL
    closure_error: float = 0.0
    iterations: int = 0

    @property
    def trivial_index(self) -> int:
        return int(np.argmin(np.abs(self.multipliers - 1.0)))

    @property
    def nontrivial_multipliers(self) -> np.ndarray:
        return np.delete(self.multipliers, self.trivial_index)

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor.tolist(),
            "period": self.period,
            "multipliers": [[z.real, z.imag] for z in self.multipliers],
            "multiplier_moduli": np.abs(self.multipliers).tolist(),
            "classification": self.classification,
            "mult_tol": self.mult_tol,
            "closure_error": self.closure_error,
        }


def classify_multipliers(multipliers, mult_tol: float = MULT_TOL) -> str:
    """Classify by the non-trivial multipliers (the one nearest 1 is dropped).

    Elliptic means: no multiplier outside the unit circle and at least one on
    it that is not the degenerate value 1.  A non-trivial multiplier equal to 1
    (as for a linear center) is reported as non-hyperbolic.
    """
    mult = np.asarray(multipliers, dtype=complex)
    rest = np.delete(mult, int(np.argmin(np.abs(mult - 1.0))))
    gap = np.abs(np.abs(rest) - 1.0)
    if np.all(gap > mult_tol):
        return "hyperbolic"
    on_circle = gap <= mult_tol
    outside = np.abs(rest) > 1.0 + mult_tol
    if not np.any(outside) and np.any(on_circle & (np.abs(rest - 1.0) > mult_tol)):
        return "elliptic"
    return "non-hyperbolic"


def floquet(field: VectorField, anchor, period: float, cfg: IntegratorConfig | None = None):
    """Monodromy matrix and sorted multipliers at ``anchor``."""
    end, M = tangent_flow(field, anchor, period, cfg or SHOOTING_CONFIG)
    mult = np.linalg.eigvals(M)
    mult = mult[np.lexsort((np.angle(mult), -np.abs(mult)))]
    return end, M, mult


def _shoot(field, seed, T, cfg, tol, max_iter):
    f = field.func
    n = field.dim
    x = np.array(seed, dtype=float)
    phase = f(np.array(seed, dtype=float))
    seed = np.array(seed, dtype=float)
    scale = max(1.0, float(np.max(np.abs(seed))))

    # early Newton steps run at a looser tolerance; the final ones at cfg
    coarse = IntegratorConfig(
        abs_tol=max(cfg.abs_tol, 1e-9), rel_tol=max(cfg.rel_tol, 1e-9),
        max_step=cfg.max_step, max_steps=cfg.max_steps, box=cfg.box,
    )
    current = coarse

    def residual(x, T):
        end, M = tangent_flow(field, x, T, current)
        F = np.concatenate([end - x, [np.dot(phase, x - seed)]])
        return F, end, M

    F, end, M = residual(x, T)
    norm = np.linalg.norm(F)
    # period-only Gauss-Newton warm-up; keeps families of orbits (centers)
    # from being pulled onto the equilibrium by the full update
    for _ in range(5):
        v = f(end)
        dT = -float(np.dot(F[:n], v)) / max(float(np.dot(v, v)), 1e-300)
        dT = max(-0.5 * T, min(0.5 * T, dT))
        try:
            Ft, endt, Mt = residual(x, T + dT)
        except CenterlabError:
            break
        nt = np.linalg.norm(Ft)
        if not nt < 0.5 * norm:
            break
        T, F, end, M, norm = T + dT, Ft, endt, Mt, nt
    for it in range(1, max_iter + 1):
        if current is coarse and norm <= 1e-6 * scale:
            current = cfg
            F, end, M = residual(x, T)
            norm = np.linalg.norm(F)
        if current is cfg and norm <= tol * scale:
            return x, T, it - 1
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = M - np.eye(n)
        A[:n, n] = f(end)
        A[n, :n] = phase
        delta = np.linalg.lstsq(A, -F, rcond=1e-7)[0]
        # keep the period positive and the update moderate
        limit = 0.5 * T / max(abs(delta[n]), 1e-300)
        alpha = min(1.0, limit)
        for _ in range(12):
            xt, Tt = x + alpha * delta[:n], T + alpha * delta[n]
            try:
                Ft, endt, Mt = residual(xt, Tt)
                nt = np.linalg.norm(Ft)
            except CenterlabError:
                nt = math.inf
            if nt < norm:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError("shooting line search failed")
        x, T, F, end, M, norm = xt, Tt, Ft, endt, Mt, nt
        if np.linalg.norm(f(x)) < 1e-8:
            raise CollapseToEquilibriumError(f"shooting collapsed onto an equilibrium near {x}")
    if current is cfg and norm <= tol * scale:
        return x, T, max_iter
    raise ConvergenceError(f"shooting did not converge in {max_iter} Newton steps (residual {norm:.2e})")


def find_periodic_orbit(
    field: VectorField,
    seed,
    T_guess: float,
    cfg: IntegratorConfig | None = None,
    *,
    tol: float = 1e-11,
    max_iter: int = 50,
    max_divisor: int = 8,
    mult_tol: float = MULT_TOL,
) -> PeriodicOrbit:
    """Newton shooting on (x, T) with the phase condition <X(seed), x - seed> = 0.

    After convergence the prime period is recovered by testing T/k for
    k = max_divisor..2 and re-shooting at the largest valid k.
    """
    cfg = cfg or SHOOTING_CONFIG
    seed = as_point(seed, field.dim)
    if not T_guess > 0:
        raise PreconditionError("T_guess must be positive")
    if np.linalg.norm(field(seed)) < 1e-8:
        raise CollapseToEquilibriumError("seed is an equilibrium")
    x, T, iters = _shoot(field, seed, float(T_guess), cfg, tol, max_iter)
    if T <= 0:
        raise ConvergenceError("shooting produced a non-positive period")
    scale = max(1.0, float(np.max(np.abs(x))))
    for k in range(max_divisor, 1, -1):
        try:
            d = np.linalg.norm(flow(field, x, T / k, cfg) - x)
        except CenterlabError:
            continue
        if d <= 1e-6 * scale:
            x, T, more = _shoot(field, x, T / k, cfg, tol, max_iter)
            iters += more
            break
    end, M, mult = floquet(field, x, T, cfg)
    return PeriodicOrbit(
        anchor=x,
        period=float(T),
        monodromy=M,
        multipliers=mult,
        classification=classify_multipliers(mult, mult_tol),
        mult_tol=mult_tol,
        closure_error=float(np.linalg.norm(end - x)),
        iterations=iters,
    )


def orbit_points(field: VectorField, orbit: PeriodicOrbit, n: int, cfg=None, *, closed=False) -> np.ndarray:
    """``n`` equally spaced points along one period; the anchor comes first."""
    cfg = cfg or SHOOTING_CONFIG
    times = np.linspace(0.0, orbit.period, n + 1 if closed else n, endpoint=closed)
    return sample_times(field.func, orbit.anchor, 0.0, orbit.period, times, cfg)


def verify_orbit(field: VectorField, orbit: PeriodicOrbit, cfg=None) -> float:
    """Closure error d(Phi_T(anchor), anchor) at ten times tighter tolerance."""
    cfg = (cfg or SHOOTING_CONFIG).tighter(10.0)
    return float(np.linalg.norm(flow(field, orbit.anchor, orbit.period, cfg) - orbit.anchor))


class OrbitDistance:
    """Distance from points to the closed curve of a periodic orbit.

    A ``samples``-point sampling locates the nearest orbit point; the
    distance is then minimised over the orbit time in the adjacent
    sampling intervals by bounded Brent iteration on flowed points.
    """

    def __init__(self, field: VectorField, orbit: PeriodicOrbit, samples: int = 512, cfg=None):
        self.field = field
        self.orbit = orbit
        self.cfg = cfg or SHOOTING_CONFIG
        self.times = np.linspace(0.0, orbit.period, samples, endpoint=False)
        self.points = orbit_points(field, orbit, samples, self.cfg)
        self.dt = orbit.period / samples

    def nearest(self, y: np.ndarray):
        """``(distance, orbit_time)`` of the orbit point closest to ``y``."""
        d = np.linalg.norm(self.points - y, axis=1)
        k = int(np.argmin(d))
        base = self.points[k]
        f = self.field.func
        cfg = self.cfg

        def dist2(u):
            p = base if u == 0 else integrate(f, 0.0, base, u, cfg)
            return float(np.sum((p - y) ** 2))

        res = minimize_scalar(
            dist2, bounds=(-self.dt, self.dt), method="bounded", options={"xatol": 1e-12}
        )
        best_u, best = (res.x, res.fun) if res.fun < d[k] ** 2 else (0.0, d[k] ** 2)
        t = (self.times[k] + best_u) % self.orbit.period
        return math.sqrt(max(best, 0.0)), float(t)

    def distance(self, y) -> float:
        return self.nearest(np.asarray(y, dtype=float))[0]


def same_orbit(field, a: PeriodicOrbit, b: PeriodicOrbit, *, tol=1e-4, period_rtol=1e-4, n=64, cfg=None) -> bool:
    """Orbits agree in period (relative) and in symmetric Hausdorff distance."""
    if abs(a.period - b.period) > period_rtol * max(a.period, b.period):
        return False
    db = OrbitDistance(field, b, cfg=cfg)
    if max(db.distance(p) for p in orbit_points(field, a, n, cfg)) >= tol:
        return False
    da = OrbitDistance(field, a, cfg=cfg)
    return max(da.distance(p) for p in orbit_points(field, b, n, cfg)) < tol


def deduplicate_orbits(field, orbits: Sequence[PeriodicOrbit], cfg=None) -> list:
    kept: list = []
    for orb in sorted(orbits, key=lambda o: o.period):
        if not any(same_orbit(field, orb, k, cfg=cfg) for k in kept):
            kept.append(orb)
    return kept


# -- recurrence scan ----------------------------------------------------------------------------


def scan_recurrences(
    field: VectorField,
    x0,
    t_burn: float,
    t_scan: float,
    eps: float,
    cfg: IntegratorConfig | None = None,
    *,
    dt: float = 0.01,
    min_period: float = 0.1,
    max_period: float = 10.0,
    max_pairs: int = 50,
):
    """Near-returns ``(x, T)`` with d(Phi_T(x), x) < eps along one long orbit.

    For each sample the first local minimum over the lag of the return
    distance is a candidate; its return time is then refined by bounded Brent
    minimisation.  Candidates with close periods and nearby base points are
    merged, keeping the closest return.
    """
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    cfg = cfg or IntegratorConfig()
    x0 = as_point(x0, field.dim)
    start = flow(field, x0, t_burn, cfg) if t_burn > 0 else x0
    n_steps = int(round(t_scan / dt))
    times = np.arange(n_steps + 1) * dt
    S = sample_times(field.func, start, 0.0, times[-1], times, cfg)
    speed = np.linalg.norm(field.func(S.T), axis=0)
    N = len(S)
    lag_lo = max(1, int(math.ceil(min_period / dt)))
    lag_hi = min(N - 2, int(max_period / dt))
    found = np.full(N, -1)
    if lag_hi <= lag_lo:
        return []

    def lagdist(L):
        d = np.full(N, np.inf)
        d[: N - L] = np.linalg.norm(S[L:] - S[: N - L], axis=1)
        return d

    thr = eps + dt * speed
    prev, cur = lagdist(lag_lo - 1), lagdist(lag_lo)
    for L in range(lag_lo, lag_hi):
        nxt = lagdist(L + 1)
        hit = (found < 0) & (cur < thr) & (cur <= prev) & (cur <= nxt)
        found[hit] = L
        prev, cur = cur, nxt

    # within a run of consecutive samples keep the closest return only
    cands = []
    i = 0
    while i < N:
        if found[i] < 0:
            i += 1
            continue
        j = i
        best, best_d = None, math.inf
        while j < N and found[j] >= 0 and abs(found[j] - found[i]) <= 2:
            d = np.linalg.norm(S[j + found[j]] - S[j])
            if d < best_d:
                best, best_d = (j, int(found[j])), d
            j += 1
        cands.append((best_d, best))
        i = j
    cands.sort(key=lambda c: c[0])

    clusters: list = []
    for _, (i, L) in cands:
        T = L * dt
        dup = False
        for j, M in clusters:
            if abs(M * dt - T) <= 0.02 * T:
                seg = S[j : j + M + 1]
                if np.min(np.linalg.norm(seg - S[i], axis=1)) < 2 * eps:
                    dup = True
                    break
        if not dup:
            clusters.append((i, L))

    pairs = []
    for i, L in clusters:
        x = S[i]
        # Phi_u(x) for u near L*dt continues the stored trajectory from sample i+L-1
        base = S[i + L - 1]
        t_base = (L - 1) * dt

        def ret(u, x=x, base=base, t_base=t_base):
            end = integrate(field.func, 0.0, base, u - t_base, cfg) if u != t_base else base
            return float(np.linalg.norm(end - x))

        res = minimize_scalar(ret, bounds=((L - 1) * dt, (L + 1) * dt), method="bounded", options={"xatol": 1e-10})
        if res.fun < eps and res.x > min_period:
            pairs.append((x.copy(), float(res.x)))
        if len(pairs) >= max_pairs:
            break
    return pairs
