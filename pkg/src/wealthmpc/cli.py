"""Command-line entry point ``wealthmpc``.

Exit codes: 0 success, 1 internal or numerical error, 2 model fails the
assumptions needed by the solver, 64 bad usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from wealthmpc import asymptotics, two_period
from wealthmpc.model import ModelLoadError, Preferences, load_model, validate_assumptions
from wealthmpc.spectral import build_K, growth_rate, is_irreducible, spectral_radius
from wealthmpc.time_iteration import (
    ConvergenceError,
    WealthGrid,
    policy_to_csv,
    simulate_paths,
    solve,
    tvc_estimate,
)

EXIT_OK, EXIT_ERROR, EXIT_ASSUMPTIONS, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("wealthmpc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass(frozen=True)
class RunConfig:
    model_path: Path
    w_min: float | None = None
    w_max: float | None = None
    n: int = 1000
    tol: float = 1e-10
    max_iter: int = 2000
    seed: int = 0
    output_dir: Path = Path(".")

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.n < 50:
            raise UsageError("--gridn must be at least 50")
        if self.max_iter < 1:
            raise UsageError("--max-iter must be positive")
        if self.w_min is not None and self.w_max is not None and not 0 < self.w_min < self.w_max:
            raise UsageError("need 0 < --wmin < --wmax")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(
            model_path=Path(args.model),
            w_min=args.wmin,
            w_max=args.wmax,
            n=args.gridn,
            tol=args.tol,
            max_iter=args.max_iter,
            seed=args.seed,
            output_dir=Path(args.out),
        )

    def grid(self, prims) -> WealthGrid:
        default = WealthGrid.default_for(prims, self.n)
        lo = default.w_min if self.w_min is None else self.w_min
        hi = default.w_max if self.w_max is None else self.w_max
        if not lo < hi:
            raise UsageError(f"grid bounds out of order: {lo!r} >= {hi!r}")
        return WealthGrid.log_spaced(lo, hi, self.n)


def _dumps(obj) -> str:
    # json writes floats with repr, the shortest round-trip form
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _load_checked(cfg: RunConfig):
    prims, prefs = load_model(cfg.model_path)
    report = validate_assumptions(prims, prefs)
    return prims, prefs, report


def _assumption_failure(report) -> int:
    sys.stdout.write(_dumps(report.to_dict()))
    return EXIT_ASSUMPTIONS


def cmd_validate(args) -> int:
    cfg = RunConfig.from_args(args)
    _, _, report = _load_checked(cfg)
    sys.stdout.write(_dumps(report.to_dict()))
    return EXIT_OK if report.ok else EXIT_ASSUMPTIONS


def _solve(cfg: RunConfig, prims, prefs):
    try:
        return solve(prims, prefs, cfg.grid(prims), tol=cfg.tol, max_iter=cfg.max_iter)
    except ConvergenceError as exc:
        _write(cfg.output_dir / "diagnostics.json", _dumps(exc.diagnostics.to_dict()))
        raise


def cmd_solve(args) -> int:
    cfg = RunConfig.from_args(args)
    prims, prefs, report = _load_checked(cfg)
    if not report.ok:
        return _assumption_failure(report)
    pol, diag = _solve(cfg, prims, prefs)
    _write(cfg.output_dir / "policy.csv", policy_to_csv(pol))
    _write(cfg.output_dir / "diagnostics.json", _dumps(diag.to_dict()))
    print(
        f"converged in {diag.iterations} iterations; "
        f"euler residual {diag.euler_residual_max:.3g}; wrote {cfg.output_dir}"
    )
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    cfg = RunConfig.from_args(args)
    prims, prefs, report = _load_checked(cfg)
    if not report.ok:
        return _assumption_failure(report)
    text = _dumps(asymptotics.classify(prims, prefs).to_dict())
    _write(cfg.output_dir / "asymptotics.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = RunConfig.from_args(args)
    prims, prefs, report = _load_checked(cfg)
    if not report.ok:
        return _assumption_failure(report)
    out = asymptotics.compare(prims, prefs, cfg.grid(prims), tol=cfg.tol, max_iter=cfg.max_iter)
    for z, m in enumerate(out["measured_mpc"]):
        if m is None:
            print(f"state {z}: under {asymptotics.MIN_HEADROOM_DECADES} decades of headroom, "
                  "measured MPC withheld", file=sys.stderr)
    text = _dumps(out)
    _write(cfg.output_dir / "compare.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_spectral(args) -> int:
    cfg = RunConfig.from_args(args)
    prims, _ = load_model(cfg.model_path)
    K = build_K(prims, args.theta)
    out = {
        "theta": K.theta,
        "K": K.entries,
        "finite": K.finite,
        "conventions_applied": K.conventions_applied,
        "irreducible": is_irreducible(np.where(np.isfinite(K.entries), K.entries, 1.0)),
    }
    if K.finite:
        out["r"] = spectral_radius(K.entries)
        out["growth_rate_64"] = growth_rate(K.entries, 64)
    else:
        out["r"] = math.inf
    sys.stdout.write(_dumps(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = RunConfig.from_args(args)
    prims, prefs, report = _load_checked(cfg)
    if not report.ok:
        return _assumption_failure(report)
    if not 0 <= args.z0 < prims.num_states:
        raise UsageError(f"--z0 must be in [0, {prims.num_states})")
    pol, _ = _solve(cfg, prims, prefs)
    panel = simulate_paths(pol, prims, args.w0, args.z0, args.horizon, args.paths, cfg.seed)
    _write(cfg.output_dir / "panel.csv", panel.to_csv())
    tvc = tvc_estimate(panel, prims, prefs)
    print(f"simulated {args.paths} paths x {args.horizon} periods; "
          f"discounted u'(c) s at horizon {tvc[-1]:.6g}")
    return EXIT_OK


def cmd_two_period(args) -> int:
    try:
        prefs = Preferences(args.gamma, args.delta, args.psi)
        spec = two_period.TwoPeriodSpec(prefs, args.beta, args.R)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = ["w,c,c_over_w"]
    for w in args.w:
        c = two_period.solve_two_period(spec, w)
        lines.append(f"{w!r},{c!r},{c / w!r}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise argparse.ArgumentTypeError("wealth values must be positive and finite")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wealthmpc", description="Consumption-savings with wealth in utility.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--model", required=True, help="model JSON file")
    common.add_argument("--wmin", type=float, default=None)
    common.add_argument("--wmax", type=float, default=None)
    common.add_argument("--gridn", type=int, default=1000)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--max-iter", type=int, default=2000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")

    handlers = {
        "validate": (cmd_validate, "check assumptions and print the report"),
        "solve": (cmd_solve, "solve by time iteration; writes policy.csv, diagnostics.json"),
        "asymptotics": (cmd_asymptotics, "classify the asymptotic MPC regime"),
        "compare": (cmd_compare, "predicted vs measured asymptotic MPC"),
        "simulate": (cmd_simulate, "simulate a wealth panel; writes panel.csv"),
        "spectral": (cmd_spectral, "K(theta), its spectral radius and irreducibility"),
    }
    for name, (fn, help_) in handlers.items():
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        if name == "spectral":
            p.add_argument("--theta", type=float, default=1.0)
        if name == "simulate":
            p.add_argument("--horizon", type=int, default=100)
            p.add_argument("--paths", type=int, default=100)
            p.add_argument("--w0", type=float, default=1.0)
            p.add_argument("--z0", type=int, default=0)

    tp = sub.add_parser("two-period", help="two-period consumption c(w) as CSV")
    tp.set_defaults(func=cmd_two_period)
    tp.add_argument("--gamma", type=float, required=True)
    tp.add_argument("--delta", type=float, required=True)
    tp.add_argument("--psi", type=float, default=0.0)
    tp.add_argument("--beta", type=float, required=True)
    tp.add_argument("--R", type=float, required=True)
    tp.add_argument("--w", type=_float_list, required=True, help="comma-separated wealth levels")
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ModelLoadError as exc:
        print(f"wealthmpc: cannot load model: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"wealthmpc: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - report and map to exit code 1
        log.debug("unhandled error", exc_info=True)
        print(f"wealthmpc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
