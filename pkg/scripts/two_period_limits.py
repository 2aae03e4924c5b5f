"""c(w)/w in the two-period model across six decades, one column per regime."""

import numpy as np

from wealthmpc.model import Preferences
from wealthmpc.two_period import TwoPeriodSpec, cbar1, cbar2, solve_two_period

CASES = {
    "delta<gamma (2,1)": TwoPeriodSpec(Preferences(2.0, 1.0, 1.0), 1.0, 1.0),
    "delta=gamma (1,1)": TwoPeriodSpec(Preferences(1.0, 1.0, 1.0), 1.0, 1.0),
    "delta>gamma (1,2)": TwoPeriodSpec(Preferences(1.0, 2.0, 5.0), 0.25, 1.0),
}


def main():
    ws = np.logspace(0, 6, 7)
    print(f"{'w':>8}" + "".join(f"{name:>20}" for name in CASES))
    for w in ws:
        print(f"{w:>8.0e}" + "".join(f"{solve_two_period(s, w) / w:>20.6f}" for s in CASES.values()))
    print(f"{'limit':>8}{0.0:>20.6f}{cbar1(CASES['delta=gamma (1,1)']):>20.6f}{cbar2(1.0, 0.25, 1.0):>20.6f}")


if __name__ == "__main__":
    main()
