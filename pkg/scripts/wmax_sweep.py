"""How the top-decade slope moves as the grid is truncated further out.

Defaults to the zero-MPC instance (gamma=2, delta=1, psi=1, beta=0.95,
R=1.02), where the slope should keep falling and ``c / w**(delta/gamma)``
should stay below the bound from the affine map G.

    python scripts/wmax_sweep.py --wmax 1e3 1e4 1e5 1e6
"""

import argparse

import numpy as np

from wealthmpc.asymptotics import classify, measured_slope
from wealthmpc.model import Preferences, StochasticPrimitives
from wealthmpc.time_iteration import WealthGrid, solve


def main(argv=None):
    ap = argparse.ArgumentParser(description="top-decade slope against grid truncation")
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--psi", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=0.95)
    ap.add_argument("--R", type=float, default=1.02)
    ap.add_argument("--wmax", type=float, nargs="+", default=[1e3, 1e4, 1e5])
    ap.add_argument("--gridn", type=int, default=1000)
    args = ap.parse_args(argv)

    prims = StochasticPrimitives.constant(args.beta, args.R, 1.0)
    prefs = Preferences(args.gamma, args.delta, args.psi)
    rep = classify(prims, prefs)
    power = prefs.delta / prefs.gamma if prefs.delta < prefs.gamma else 1.0
    print(f"regime {rep.regime.value}; predicted MPC {rep.predicted_mpc}; power bound {rep.power_bound}")
    print(f"{'w_max':>10} {'slope':>10} {'exponent':>9} {'max c/w^p':>10} {'iter':>5} {'residual':>9}")
    for w_max in args.wmax:
        grid = WealthGrid.log_spaced(1e-3, w_max, args.gridn)
        pol, diag = solve(prims, prefs, grid, max_iter=5000)
        slope, exponent = measured_slope(pol, 0, decades=1)
        w = grid.points
        top = w >= w[-1] / 10
        ratio = float(np.max(pol.values[top, 0] / w[top] ** power))
        print(f"{w_max:>10.0e} {slope:>10.5f} {exponent:>9.4f} {ratio:>10.5f} {diag.iterations:>5} "
              f"{diag.euler_residual_max:>9.1e}")


if __name__ == "__main__":
    main()
