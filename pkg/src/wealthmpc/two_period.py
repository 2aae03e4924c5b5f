"""Deterministic two-period consumption problem with wealth in utility.

The agent splits wealth ``w`` into consumption ``c`` today and savings that
return ``R`` tomorrow, where terminal wealth is both consumed and valued.
The first-order condition

    c**(-gamma) = beta * R * ([R (w - c)]**(-gamma) + psi * [R (w - c)]**(-delta))

has a unique root in ``(0, w)``, which this module finds by bisection. It
serves as a precise reference for the infinite-horizon solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from wealthmpc.model import Preferences, ValidationError

LOWER_FRAC = 1e-14
_MAX_BISECT = 400


@dataclass(frozen=True)
class TwoPeriodSpec:
    prefs: Preferences
    beta: float
    R: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValidationError(f"beta must be positive, got {self.beta!r}")
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ValidationError(f"R must be positive, got {self.R!r}")

    def foc_residual(self, c: float, w: float) -> float:
        """Left minus right side of the first-order condition."""
        p = self.prefs
        nxt = self.R * (w - c)
        return c ** (-p.gamma) - self.beta * self.R * (nxt ** (-p.gamma) + p.psi * nxt ** (-p.delta))


def _bisect_decreasing(f, lo: float, hi: float, rtol: float = 1e-15) -> float:
    """Root of a strictly decreasing function bracketed by ``f(lo) > 0 > f(hi)``."""
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= rtol * hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_two_period(spec: TwoPeriodSpec, w: float) -> float:
    """First-period consumption ``c(w)``.

    The residual is strictly decreasing in ``c`` and changes sign between
    ``1e-14 w`` and ``(1 - 1e-14) w``, so plain bisection applies. The
    bracket is shrunk to floating-point resolution.
    """
    if not (w > 0 and math.isfinite(w)):
        raise ValueError(f"wealth must be positive and finite, got {w!r}")
    lo, hi = LOWER_FRAC * w, (1.0 - LOWER_FRAC) * w
    return _bisect_decreasing(lambda c: spec.foc_residual(c, w), lo, hi)


def cbar2(gamma: float, beta: float, R: float) -> float:
    """Limiting MPC ``1 / (1 + (beta R^(1-gamma))^(1/gamma))`` when ``delta > gamma``."""
    if gamma <= 0 or beta <= 0 or R <= 0:
        raise ValueError("gamma, beta and R must be positive")
    return 1.0 / (1.0 + (beta * R ** (1.0 - gamma)) ** (1.0 / gamma))


def cbar1(spec: TwoPeriodSpec) -> float:
    """Limiting MPC in the knife-edge case ``delta == gamma``.

    Solved by bisection on the scale-free first-order condition in
    ``(0, 1)``; ``psi`` enters because wealth and consumption share curvature.
    """
    p = spec.prefs
    if p.delta != p.gamma:
        raise ValidationError("cbar1 requires delta == gamma")
    return _bisect_decreasing(lambda c: spec.foc_residual(c, 1.0), LOWER_FRAC, 1.0 - LOWER_FRAC)


def power_bound(spec: TwoPeriodSpec, w):
    """Upper bound ``(psi beta R^(1-delta))^(-1/gamma) w^(delta/gamma)`` on ``c(w)``."""
    p = spec.prefs
    coef = (p.psi * spec.beta * spec.R ** (1.0 - p.delta)) ** (-1.0 / p.gamma)
    return coef * np.asarray(w, dtype=float) ** (p.delta / p.gamma)


@dataclass
class LimitReport:
    regime: str
    w: np.ndarray
    ratios: np.ndarray
    target: float | None
    exponent: float | None
    passed: bool
    offending: list[tuple[float, float]] = field(default_factory=list)
    message: str = ""


def verify_proposition1(spec: TwoPeriodSpec, w_list, tol: float = 0.01) -> LimitReport:
    """Check the limiting behaviour of ``c(w) / w`` along an increasing wealth list.

    With ``delta < gamma`` the ratio must stay under the power bound at the
    top decade and its log-log slope must be within ``tol`` (relative) of
    ``delta/gamma - 1``. Otherwise the ratio must be within ``tol`` of
    ``cbar1`` or ``cbar2`` at every point of the top decade.
    """
    w = np.asarray(w_list, dtype=float)
    if w.ndim != 1 or w.size < 2 or np.any(np.diff(w) <= 0) or w[0] <= 0:
        raise ValueError("w_list must be increasing and positive")
    if math.log10(w[-1] / w[0]) < 6:
        raise ValueError("w_list must span at least six decades")
    p = spec.prefs
    c = np.array([solve_two_period(spec, x) for x in w])
    ratios = c / w
    top = w >= w[-1] / 10.0
    offending: list[tuple[float, float]] = []

    if p.delta < p.gamma:
        regime = "delta_lt_gamma"
        bound = power_bound(spec, w) / w
        for x, r, b in zip(w[top], ratios[top], bound[top]):
            if r > b * (1 + tol):
                offending.append((float(x), float(r)))
        expected = p.delta / p.gamma - 1.0
        if top.sum() >= 2:
            exponent = float(np.polyfit(np.log(w[top]), np.log(ratios[top]), 1)[0])
        else:
            exponent = float(np.log(ratios[-1] / ratios[0]) / np.log(w[-1] / w[0]))
        ok_exp = abs(exponent - expected) <= tol * abs(expected)
        passed = not offending and ok_exp
        msg = "" if ok_exp else f"log-slope {exponent!r} differs from {expected!r}"
        return LimitReport(regime, w, ratios, 0.0, exponent, passed, offending, msg)

    if p.delta == p.gamma:
        regime, target = "delta_eq_gamma", cbar1(spec)
    else:
        regime, target = "delta_gt_gamma", cbar2(p.gamma, spec.beta, spec.R)
    for x, r in zip(w[top], ratios[top]):
        if abs(r - target) > tol * target:
            offending.append((float(x), float(r)))
    msg = "" if not offending else f"{len(offending)} ratios outside {tol:.0%} of {target!r}"
    return LimitReport(regime, w, ratios, target, None, not offending, offending, msg)
