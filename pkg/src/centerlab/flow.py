"""Numerical flows: adaptive Dormand-Prince, variational equations, implicit midpoint.

Every integrator works on a single state ``(n,)`` or on a batch ``(n, m)``;
a batch is advanced with one shared step sequence whose error control
uses the worst column, so each column is at least as accurate as if it
were integrated alone.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import BlowUpError, ConvergenceError, PreconditionError, StepLimitError
from .fields import HamiltonianSystem, VectorField, as_point, hamiltonian_field

SCHEMES = ("adaptive-rk45", "symplectic-midpoint")


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_step: float = math.inf
    max_steps: int = 10**7
    scheme: str = "adaptive-rk45"
    box: float = 1e3  # states must stay in [-box, box]^n
    step: float = 1e-3  # fixed step of the symplectic scheme

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise PreconditionError("tolerances must be positive")
        if not self.max_steps > 0:
            raise PreconditionError("max_steps must be positive")
        if not self.max_step > 0:
            raise PreconditionError("max_step must be positive")
        if self.scheme not in SCHEMES:
            raise PreconditionError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.box > 0:
            raise PreconditionError("box half-width must be positive")
        if not self.step > 0:
            raise PreconditionError("symplectic step must be positive")

    def tighter(self, factor: float = 10.0) -> IntegratorConfig:
        return IntegratorConfig(**{**asdict(self), "abs_tol": self.abs_tol / factor, "rel_tol": self.rel_tol / factor})

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass
class Trajectory:
    times: np.ndarray  # (N,)
    states: np.ndarray  # (N, n)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")

    def __len__(self):
        return len(self.times)


# -- Dormand-Prince 5(4) -----------------------------------------------------------

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

# continuous extension: y(t + th*h) = y + h * sum_i K_i * (P[i] . [th, th^2, th^3, th^4])
DENSE_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA
MIN_FACTOR, MAX_FACTOR = 0.2, 10.0


@dataclass
class Step:
    """One accepted step, with its dense-output polynomial."""

    t0: float
    y0: np.ndarray
    t1: float
    y1: np.ndarray
    K: tuple

    @property
    def h(self) -> float:
        return self.t1 - self.t0

    def __call__(self, t: float) -> np.ndarray:
        h = self.h
        th = (t - self.t0) / h
        powers = np.array([th, th * th, th**3, th**4])
        w = DENSE_P @ powers
        out = self.y0.copy()
        for wi, ki in zip(w, self.K):
            if wi != 0.0:
                out += (h * wi) * ki
        return out


def _initial_step(f, t0, y0, f0, direction, cfg) -> float:
    scale = cfg.abs_tol + np.abs(y0) * cfg.rel_tol
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, cfg.max_step)
    y1 = y0 + direction * h0 * f0
    f1 = f(y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, cfg.max_step)


def _check_box(y, t, box):
    if not np.all(np.isfinite(y)):
        raise BlowUpError(f"state became non-finite at t={t:.6g}", t)
    if np.max(np.abs(y)) > box:
        raise BlowUpError(f"state left the box [-{box:g}, {box:g}]^n at t={t:.6g}", t, y)


def dopri_steps(
    f: Callable[[np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    t1: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    box_slice: slice | None = None,
) -> Iterator[Step]:
    """Yield accepted Dormand-Prince steps from ``t0`` to ``t1`` (either direction).

    ``box_slice`` restricts the blow-up check to leading state rows (used by
    the variational system, whose matrix part may legitimately grow).
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    t1 = float(t1)
    if t1 == t:
        return
    direction = 1.0 if t1 > t else -1.0
    atol, rtol = cfg.abs_tol, cfg.rel_tol
    k1 = f(y)
    h = _initial_step(f, t, y, k1, direction, cfg)
    err_old = 1e-4
    steps = 0
    rejected_last = False
    while True:
        if steps >= cfg.max_steps:
            raise StepLimitError(f"step limit {cfg.max_steps} reached at t={t:.6g}")
        remaining = abs(t1 - t)
        last = h >= remaining
        if last:
            h = remaining
        hs = direction * h
        k2 = f(y + hs * (A21 * k1))
        k3 = f(y + hs * (A31 * k1 + A32 * k2))
        k4 = f(y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = f(y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = f(y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = f(y_new)
        err_vec = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        steps += 1
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t_new = t1 if last else t + hs
            probe = y_new if box_slice is None else y_new[box_slice]
            _check_box(probe, t_new, cfg.box)
            yield Step(t, y, t_new, y_new, (k1, k2, k3, k4, k5, k6, k7))
            if last:
                return
            err = max(err, 1e-10)
            factor = SAFETY * err ** (-ALPHA) * err_old**BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if rejected_last:
                factor = min(1.0, factor)
            h = min(h * factor, cfg.max_step)
            err_old = err
            t, y, k1 = t_new, y_new, k7
            rejected_last = False
        else:
            h *= max(MIN_FACTOR, SAFETY * err ** (-0.2))
            rejected_last = True
            if h < 1e-14 * max(1.0, abs(t)):
                raise StepLimitError(f"step size underflow at t={t:.6g}")


def integrate(f, t0, y0, t1, cfg: IntegratorConfig = DEFAULT_CONFIG, box_slice=None) -> np.ndarray:
    y = np.array(y0, dtype=float)
    for step in dopri_steps(f, t0, y, t1, cfg, box_slice):
        y = step.y1
    return y


# -- public operations ----------------------------------------------------------------


def flow(field: VectorField, x0, t: float, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Phi_t(x0); ``t`` may be negative.  ``x0`` may be a batch ``(n, m)``."""
    cfg = cfg or DEFAULT_CONFIG
    x0 = as_point(x0, field.dim)
    t = float(t)
    if not math.isfinite(t):
        raise PreconditionError("flow time must be finite")
    if t == 0.0:
        return x0.copy()
    if cfg.scheme == "symplectic-midpoint":
        return midpoint_integrate(field, x0, t, cfg.step)
    return integrate(field.func, 0.0, x0, t, cfg)


def sample_times(f, x0: np.ndarray, t0: float, t1: float, times, cfg: IntegratorConfig) -> np.ndarray:
    """States at the given monotone times (within [t0, t1]) via dense output."""
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times),) + x0.shape)
    direction = 1.0 if t1 >= t0 else -1.0
    i = 0
    while i < len(times) and times[i] == t0:
        out[i] = x0
        i += 1
    for step in dopri_steps(f, t0, x0, t1, cfg):
        while i < len(times) and direction * (times[i] - step.t1) <= 0:
            out[i] = step.y1 if times[i] == step.t1 else step(times[i])
            i += 1
        if i == len(times):
            break
    if i < len(times):
        raise PreconditionError("sample times outside the integration span")
    return out


def flow_trajectory(
    field: VectorField, x0, t_span, n_samples: int, cfg: IntegratorConfig | None = None
) -> Trajectory:
    """Equally spaced samples of the orbit of ``x0`` over ``t_span = (a, b)``, a < b."""
    cfg = cfg or DEFAULT_CONFIG
    x0 = as_point(x0, field.dim)
    if x0.ndim != 1:
        raise PreconditionError("flow_trajectory takes a single initial point")
    a, b = float(t_span[0]), float(t_span[1])
    if not int(n_samples) >= 2:
        raise PreconditionError("n_samples must be at least 2")
    if not b > a:
        raise PreconditionError("t_span must be increasing")
    times = np.linspace(a, b, int(n_samples))
    if a != 0.0:
        x0 = flow(field, x0, a, cfg)
    states = sample_times(field.func, x0, a, b, times, cfg)
    return Trajectory(times, states)


def tangent_flow(field: VectorField, x0, t: float, cfg: IntegratorConfig | None = None):
    """Integrate x' = X(x), M' = DX(x) M with M(0) = I.

    Returns ``(Phi_t(x0), DPhi_t(x0))``.
    """
    cfg = cfg or DEFAULT_CONFIG
    x0 = as_point(x0, field.dim)
    if x0.ndim != 1:
        raise PreconditionError("tangent_flow takes a single initial point")
    n = field.dim
    t = float(t)
    if t == 0.0:
        return x0.copy(), np.eye(n)
    rhs = variational_rhs(field)
    z0 = np.concatenate([x0, np.eye(n).ravel()])
    z = integrate(rhs, 0.0, z0, t, cfg, box_slice=slice(0, n))
    return z[:n], z[n:].reshape(n, n)


def variational_rhs(field: VectorField):
    n = field.dim
    f = field.func
    jac = field.jac_func()

    def rhs(z):
        x = z[:n]
        M = z[n:].reshape(n, n)
        return np.concatenate([f(x), (jac(x) @ M).ravel()])

    return rhs


# -- implicit midpoint ----------------------------------------------------------------

NEWTON_MAX_ITER = 50
EPS = np.finfo(float).eps


def _midpoint_step(f, jac, y: np.ndarray, h: float) -> np.ndarray:
    # Newton on G(y1) = y1 - y - h f((y + y1)/2)
    n = y.shape[0]
    eye = np.eye(n)
    y1 = y + h * f(y)
    prev = math.inf
    for _ in range(NEWTON_MAX_ITER):
        mid = 0.5 * (y + y1)
        g = y1 - y - h * f(mid)
        J = eye - 0.5 * h * jac(mid)
        delta = np.linalg.solve(J, g)
        y1 = y1 - delta
        size = np.max(np.abs(delta)) / (1.0 + np.max(np.abs(y1)))
        # converged, or stagnating at rounding level
        if size <= 10 * EPS or (size <= 1e-12 and size >= prev):
            return y1
        prev = size
    raise ConvergenceError(f"implicit midpoint Newton did not converge in {NEWTON_MAX_ITER} iterations")


def _step_sizes(t: float, step: float) -> list[float]:
    if not step > 0:
        raise PreconditionError("step must be positive")
    count = int(math.floor(abs(t) / step + 1e-9))
    sizes = [step] * count
    rest = abs(t) - count * step
    if rest > 1e-12 * max(1.0, abs(t)):
        sizes.append(rest)
    sign = 1.0 if t >= 0 else -1.0
    return [sign * s for s in sizes]


def midpoint_integrate(field: VectorField, x0: np.ndarray, t: float, step: float) -> np.ndarray:
    if x0.ndim != 1:
        raise PreconditionError("the implicit midpoint scheme takes a single point")
    f, jac = field.func, field.jac_func()
    y = np.array(x0, dtype=float)
    for h in _step_sizes(t, step):
        y = _midpoint_step(f, jac, y, h)
    return y


@dataclass
class SymplecticRun:
    state: np.ndarray
    max_energy_drift: float
    drift_constant: float  # max |H(z_t) - H(z_0)| / step^2
    steps: int
    energies: np.ndarray = field(repr=False, default=None)


def symplectic_flow(sys: HamiltonianSystem, z0, t: float, step: float = 1e-3) -> SymplecticRun:
    """Fixed-step implicit-midpoint integration of X_H over time ``t``."""
    H = sys.energy
    X = hamiltonian_field(sys)
    z = as_point(z0, sys.dim).copy()
    if z.ndim != 1:
        raise PreconditionError("symplectic_flow takes a single initial point")
    f, jac = X.func, X.jac_func()
    h_func = H.func
    e0 = float(h_func(z))
    sizes = _step_sizes(float(t), float(step))
    energies = np.empty(len(sizes) + 1)
    energies[0] = e0
    for i, h in enumerate(sizes, start=1):
        z = _midpoint_step(f, jac, z, h)
        energies[i] = h_func(z)
    drift = float(np.max(np.abs(energies - e0))) if len(energies) else 0.0
    return SymplecticRun(z, drift, drift / step**2, len(sizes), energies)
