"""Recompute reference values with exact or high-precision arithmetic.

Writes ``tests/data/oracles.json``. Nothing here imports the package under
test: each value comes from sympy algebra or mpmath root finding at 50
digits, so the test suite compares against an independent computation.

    python scripts/freeze_oracles.py
"""

import json
from pathlib import Path

import mpmath as mp
import sympy as sp

mp.mp.dps = 50
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def scalar_fixed_point(expr_of_x):
    x = sp.symbols("x", positive=True)
    (root,) = [r for r in sp.solve(sp.Eq(x, expr_of_x(x)), x) if r >= 1]
    return root


def two_period_c(gamma, delta, psi, beta, R, w):
    g, d, p, b, R_, w_ = (mp.mpf(v) for v in (gamma, delta, psi, beta, R, w))

    def foc(c):
        nxt = R_ * (w_ - c)
        return c ** (-g) - b * R_ * (nxt ** (-g) + p * nxt ** (-d))

    lo, hi = w_ * mp.mpf("1e-40"), w_ * (1 - mp.mpf("1e-40"))
    for _ in range(300):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if foc(mid) > 0 else (lo, mid)
    return mp.findroot(foc, (lo + hi) / 2)


def main():
    half, quarter = sp.Rational(1, 2), sp.Rational(1, 4)
    out = {}

    # F in the linear case: gamma = 1 makes phi(t) = 1 + t
    x2 = scalar_fixed_point(lambda x: 1 + quarter * x)
    x1 = scalar_fixed_point(lambda x: 1 + quarter * (x + 1))
    out["x2_star_beta_quarter"] = float(x2)
    out["mpc_positive_beta_quarter"] = float(1 / x2)
    out["x1_star_beta_quarter_psi1"] = float(x1)
    out["mpc_knife_beta_quarter_psi1"] = float(1 / x1)

    # G fixed points: y = beta R^(1 - delta) (y + psi)
    y = sp.symbols("y")
    out["g_fixed_point_beta_half"] = float(sp.solve(sp.Eq(y, half * (y + 1)), y)[0])
    beta, R = sp.Rational(95, 100), sp.Rational(102, 100)
    y_zero = sp.solve(sp.Eq(y, beta * R ** 0 * (y + 1)), y)[0]
    out["g_fixed_point_zero_mpc"] = float(y_zero)
    out["power_bound_zero_mpc"] = float(sp.N(y_zero ** sp.Rational(-1, 2), 30))

    # one step of T: 1/xi = 0.5 / (w - xi + 1) at w = 4
    xi = sp.symbols("xi", positive=True)
    out["T_step_w4"] = float(sp.solve(sp.Eq(1 / xi, half / (4 - xi + 1)), xi)[0])
    out["threshold_beta_half"] = float(1 / (half * 1))

    # two-period limits
    c = sp.symbols("c", positive=True)
    out["cbar1_log_psi1"] = float(sp.solve(sp.Eq(1 / c, 2 / (1 - c)), c)[0])
    out["cbar2_gamma2_beta09_R11"] = float(
        sp.N(1 / (1 + sp.sqrt(sp.Rational(9, 10) * sp.Rational(11, 10) ** -1)), 30)
    )
    out["cbar2_log_beta_quarter"] = float(1 / (1 + quarter))
    out["two_period_c_gamma2_delta1_w1e6"] = float(two_period_c(2, 1, 1, 1, 1, 10**6))
    out["two_period_c_gamma2_delta3_beta09_R11_w7"] = float(two_period_c(2, 3, 0.5, 0.9, 1.1, 7))

    # spectral radius of a fixed 3x3 matrix via the characteristic polynomial
    A = sp.Matrix([[0, 1, 0], [0, 0, 1], [sp.Rational(1, 2), sp.Rational(1, 4), 0]])
    lam = sp.symbols("lam")
    roots = sp.Poly(A.charpoly(lam).as_expr(), lam).nroots(n=30)
    out["radius_companion_3x3"] = float(max(abs(r) for r in roots))

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(out)} values to {OUT}")


if __name__ == "__main__":
    main()
