"""Predicted against measured asymptotic MPCs for every model in ``models/``.

    python scripts/regime_table.py [--wmax 1e4] [--csv out.csv]
"""

import argparse
import csv
import sys
import time
from pathlib import Path

from wealthmpc.asymptotics import compare
from wealthmpc.model import load_model, validate_assumptions
from wealthmpc.time_iteration import WealthGrid

MODELS = Path(__file__).resolve().parents[1] / "models"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wmax", type=float, default=1e4)
    ap.add_argument("--gridn", type=int, default=1000)
    ap.add_argument("--csv", type=Path, default=None)
    args = ap.parse_args(argv)

    rows = []
    for path in sorted(MODELS.glob("*.json")):
        prims, prefs = load_model(path)
        if not validate_assumptions(prims, prefs).ok:
            print(f"{path.name}: assumptions fail, skipped", file=sys.stderr)
            continue
        t0 = time.perf_counter()
        grid = WealthGrid.log_spaced(1e-3, args.wmax, args.gridn)
        out = compare(prims, prefs, grid)
        elapsed = time.perf_counter() - t0
        for z in range(prims.num_states):
            pred = out["predicted_mpc"][z] if out["predicted_mpc"] else None
            rows.append({
                "model": path.stem,
                "state": z,
                "regime": out["regime"],
                "predicted": pred,
                "measured": out["measured_mpc"][z],
                "exponent": out["measured_exponent"][z],
                "iterations": out["iterations"],
                "seconds": round(elapsed, 2),
            })

    fmt = "{model:<12} {state:>2}  {regime:<26} {predicted:>10} {measured:>10} {exponent:>8} {iterations:>5} {seconds:>6}"
    print(fmt.format(model="model", state="z", regime="regime", predicted="predicted",
                     measured="measured", exponent="exponent", iterations="iter", seconds="sec"))
    for r in rows:
        shown = {k: (f"{v:.5f}" if isinstance(v, float) and k in ("predicted", "measured", "exponent") else
                     ("-" if v is None else v)) for k, v in r.items()}
        print(fmt.format(**shown))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)


if __name__ == "__main__":
    main()
