"""Independent reference values frozen into the test-suite.

Run ``python3 tests/oracles/compute.py`` to regenerate.  Nothing here
imports centerlab: derivatives come from sympy, flows from scipy's DOP853
at tight tolerance, and periodic orbits from scipy's fsolve.
"""

import math

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp
from scipy.optimize import fsolve

x, y, z = sp.symbols("x y z")
SIGMA, R, B = 10.0, 28.0, 8.0 / 3.0


def lorenz_rhs(t, u):
    return [SIGMA * (u[1] - u[0]), u[0] * (R - u[2]) - u[1], u[0] * u[1] - B * u[2]]


def ivp(f, u0, t, **kw):
    return solve_ivp(f, (0.0, t), u0, method="DOP853", rtol=1e-13, atol=1e-13, **kw)


def symbolic():
    L = sp.Matrix([sp.Rational(10) * (y - x), x * (28 - z) - y, x * y - sp.Rational(8, 3) * z])
    print("lorenz jacobian at 0:", L.jacobian([x, y, z]).subs({x: 0, y: 0, z: 0}).tolist())
    Y1 = y + x * (1 - x**2 - y**2)
    print("d/dx Y1 at (1,0):", sp.diff(Y1, x).subs({x: 1, y: 0}))
    K = sp.Rational(1, 2) * (x**2 + y**2) ** 2
    print("grad K at (1,0):", [sp.diff(K, v).subs({x: 1, y: 0}) for v in (x, y)])
    eq = sp.solve(list(L), [x, y, z], dict=True)
    print("lorenz equilibria:", [tuple(float(e[v]) for v in (x, y, z)) for e in eq])
    print("origin eigenvalues:", sorted(float(v) for v in sp.Matrix(L.jacobian([x, y, z]).subs({x: 0, y: 0, z: 0})).eigenvals()))
    print("(-11 +- sqrt(1201))/2:", (-11 + math.sqrt(1201)) / 2, (-11 - math.sqrt(1201)) / 2)

    # bracket of the rotation with a general linear field, DZ.X - DX.Z
    a, b, c, d = sp.symbols("a b c d")
    X = sp.Matrix([-y, x])
    Z = sp.Matrix([a * x + b * y, c * x + d * y])
    br = Z.jacobian([x, y]) * X - X.jacobian([x, y]) * Z
    print("[rotation, Z]:", sp.simplify(br).T)

    # canonical J = [[0, I], [-I, 0]]: X_H = (H_y, -H_x); {H,K} = H_x K_y - H_y K_x
    def XH(H):
        return sp.Matrix([sp.diff(H, y), -sp.diff(H, x)])

    def pb(H, K):
        return sp.diff(H, x) * sp.diff(K, y) - sp.diff(H, y) * sp.diff(K, x)

    H1 = sp.Rational(1, 2) * (x**2 + y**2)
    for H, K in ((x, y), (H1, K), (x**3 * y, sp.sin(x) + y**2)):
        lhs = XH(K).jacobian([x, y]) * XH(H) - XH(H).jacobian([x, y]) * XH(K)  # [X_K, X_H]
        print("[X_K, X_H] - X_{H,K}:", sp.simplify(lhs - XH(pb(H, K))).T)
    print("X_H for H=r^2/2:", XH(H1).T, " H=x:", XH(x).T, " X_K(1,0):", XH(K).subs({x: 1, y: 0}).T)


def flows():
    print("exp(-4 pi):", math.exp(-4 * math.pi))
    print("exp(-(sigma+1+b)):", math.exp(-(SIGMA + 1 + B)))
    r0, t = 0.1, 30.0
    r = 1 / math.sqrt(1 + (1 / r0**2 - 1) * math.exp(-2 * t))
    print("limit cycle |x(30)| from (0.1,0):", r, " angle:", -t)
    sol = ivp(lorenz_rhs, [1.0, 1.0, 1.0], 1.0, dense_output=True)
    pts = sol.sol(np.linspace(0, 1, 101))
    print("lorenz [0,1] max |coord|:", float(np.abs(pts).max()))
    print("defect constant vs (x,0) at s=t=1:", 1.0 * (math.e - 1))


def lorenz_orbit():
    burn = ivp(lorenz_rhs, [1.0, 1.0, 1.0], 50.0).y[:, -1]
    sol = ivp(lorenz_rhs, burn, 100.0, dense_output=True)
    ts = np.arange(0.0, 100.0, 0.01)
    S = sol.sol(ts).T
    lag = np.arange(140, 171)
    best = min(
        ((np.linalg.norm(S[i + L] - S[i]), i, L) for i in range(0, len(S) - 171, 3) for L in lag),
        key=lambda q: q[0],
    )
    _, i, L = best
    seed, T0 = S[i], L * 0.01
    f0 = np.array(lorenz_rhs(0, seed))

    def F(v):
        u, T = v[:3], v[3]
        end = ivp(lorenz_rhs, u, T).y[:, -1]
        return np.concatenate([end - u, [f0 @ (u - seed)]])

    v = fsolve(F, np.concatenate([seed, [T0]]), xtol=1e-13)
    print("lorenz shortest orbit period:", v[3], " residual:", np.linalg.norm(F(v)))

    # first crossing of z = 27 from a point near the attractor
    ev = lambda t, u: u[2] - 27.0  # noqa: E731
    ev.terminal = True
    start = ivp(lorenz_rhs, [1.0, 1.0, 1.0], 50.0).y[:, -1]
    if abs(start[2] - 27.0) < 1e-9:
        start = ivp(lorenz_rhs, start, 0.01).y[:, -1]
    crossing = solve_ivp(lorenz_rhs, (0, 100), start, method="DOP853", rtol=1e-12, atol=1e-12, events=ev)
    print("lorenz z=27 first crossing time from Phi_50(1,1,1):", crossing.t_events[0][0])
    p1 = crossing.y_events[0][0]
    up = lorenz_rhs(0, p1)[2] > 0
    ev2 = lambda t, u: u[2] - 27.0  # noqa: E731
    ev2.terminal = True
    ev2.direction = 1 if up else -1
    ret = solve_ivp(lorenz_rhs, (0, 100), p1, method="DOP853", rtol=1e-12, atol=1e-12,
                    events=ev2, first_step=1e-6)
    times = [t for t in ret.t_events[0] if t > 1e-6]
    print("  crossing point:", p1.tolist(), "upward:", up)
    print("  next same-direction return time:", times[0], "point:", ret.y_events[0][-1].tolist())


if __name__ == "__main__":
    symbolic()
    flows()
    lorenz_orbit()
