"""Asymptotic marginal propensity to consume.

The regime is decided by the curvature ordering of ``delta`` against
``gamma`` together with the spectral radius of ``K(1 - gamma)``. In the
linear regimes the limiting slope ``c(w, z) / w`` is ``x*(z) ** (-1/gamma)``
where ``x*`` is the fixed point of the per-state map ``F``. When wealth is
less curved than consumption the slope is zero, and ``c`` grows no faster
than ``w ** (delta/gamma)`` with a constant given by the fixed point of the
affine map ``G``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from wealthmpc.model import Preferences, StochasticPrimitives
from wealthmpc.spectral import build_K, is_irreducible, spectral_radius
from wealthmpc.time_iteration import (
    ConsumptionPolicy,
    WealthGrid,
    _constrained_mask,
    solve,
)

DIVERGENCE_CUTOFF = 1e12
MIN_HEADROOM_DECADES = 3


class Regime(str, enum.Enum):
    ZERO_DELTA_LT_GAMMA = "ZeroMPC_delta_lt_gamma"
    ZERO_SPECTRAL = "ZeroMPC_spectral"
    KNIFE_EDGE = "KnifeEdge_delta_eq_gamma"
    POSITIVE = "Positive_delta_gt_gamma"
    UNCLASSIFIED = "Unclassified"

    @property
    def zero_mpc(self) -> bool:
        return self in (Regime.ZERO_DELTA_LT_GAMMA, Regime.ZERO_SPECTRAL)


class NoFixedPointError(ArithmeticError):
    """Fixed-point iteration of F diverged: no finite fixed point."""


class GridTooSmallError(ValueError):
    pass


@dataclass
class AsymptoticReport:
    regime: Regime
    r_K1mg: float
    irreducible: bool
    x_star: np.ndarray | None = None
    predicted_mpc: np.ndarray | None = None
    g_fixed_point: np.ndarray | None = None
    power_bound: np.ndarray | None = None
    measured_mpc: np.ndarray | None = None
    messages: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def vec(a):
            return None if a is None else [float(v) for v in a]

        return {
            "regime": self.regime.value,
            "r_K1mg": float(self.r_K1mg),
            "irreducible": self.irreducible,
            "x_star": vec(self.x_star),
            "predicted_mpc": vec(self.predicted_mpc),
            "g_fixed_point": vec(self.g_fixed_point),
            "power_bound": vec(self.power_bound),
            "measured_mpc": None if self.measured_mpc is None else [
                None if v is None or not math.isfinite(v) else float(v) for v in self.measured_mpc
            ],
            "messages": list(self.messages),
        }


def _settled(step: float, prev: float, tol: float) -> bool:
    """A-posteriori stop: ``step * q / (1 - q) < tol`` with ``q`` the observed step ratio."""
    if step == 0.0:
        return True
    if not (0 < prev < math.inf) or step >= prev:
        return False
    q = step / prev
    return step * q / (1.0 - q) < tol and step < tol


def _matvec(K: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``K @ x`` for ``x`` in ``[0, inf]`` with ``0 * inf = 0``."""
    with np.errstate(invalid="ignore"):
        prod = np.where(K > 0, K * x[None, :], 0.0)
    return prod.sum(axis=1)


def phi(t, gamma: float):
    """``(1 + t**(1/gamma)) ** gamma``, the scalar map inside ``F``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        return (1.0 + t ** (1.0 / gamma)) ** gamma


def apply_F(x, prims: StochasticPrimitives, prefs: Preferences) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 1):
        raise ValueError("F is defined on [1, inf]^Z")
    if prefs.delta < prefs.gamma:
        return np.full(prims.num_states, math.inf)
    K = build_K(prims, 1.0 - prefs.gamma).entries
    arg = x + prefs.psi if prefs.delta == prefs.gamma else x
    return phi(_matvec(K, arg), prefs.gamma)


def fixed_point_F(
    prims: StochasticPrimitives, prefs: Preferences, tol: float = 1e-12, max_iter: int = 1_000_000
) -> np.ndarray:
    """Iterate ``x_n = F x_{n-1}`` from ``x_0 = 1``; the sequence is nondecreasing."""
    if prefs.delta < prefs.gamma:
        raise ValueError("F has no finite fixed point when delta < gamma")
    if _radius(build_K(prims, 1.0 - prefs.gamma).entries) >= 1:
        raise NoFixedPointError("no finite fixed point: r(K(1 - gamma)) >= 1")
    x = np.ones(prims.num_states)
    prev = math.inf
    for _ in range(max_iter):
        x_new = apply_F(x, prims, prefs)
        if np.any(x_new < x * (1 - 1e-14)):
            raise ArithmeticError("F iterates failed to increase monotonically")
        if not np.all(np.isfinite(x_new)) or np.any(x_new > DIVERGENCE_CUTOFF):
            raise NoFixedPointError("no finite fixed point: iterates of F diverge")
        step = float(np.max(np.abs(x_new - x)))
        x = x_new
        if _settled(step, prev, tol):
            return x
        prev = step
    raise NoFixedPointError(f"F iteration did not settle within {max_iter} steps")


def apply_G(y, prims: StochasticPrimitives, prefs: Preferences) -> np.ndarray:
    """``(G y)(z) = E_z beta' R'^(1 - delta) (y(z') + psi)``."""
    y = np.asarray(y, dtype=float)
    K = build_K(prims, 1.0 - prefs.delta).entries
    return _matvec(K, y + prefs.psi)


def _divergent_states(K: np.ndarray) -> np.ndarray:
    """States from which a strongly connected class with radius >= 1 is reachable."""
    n = K.shape[0]
    _, labels = connected_components(K > 0, directed=True, connection="strong")
    bad_class = np.zeros(n, dtype=bool)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        if spectral_radius(K[np.ix_(idx, idx)]) >= 1:
            bad_class[idx] = True
    reach = np.eye(n, dtype=bool) | (K > 0)
    for _ in range(n):
        reach = reach | ((reach.astype(float) @ reach.astype(float)) > 0)
    return (reach & bad_class[None, :]).any(axis=1)


def fixed_point_G(prims: StochasticPrimitives, prefs: Preferences) -> np.ndarray:
    """Least fixed point of ``G`` in ``[0, inf]^Z``, the limit of ``G^n 0``.

    ``G^n 0 = sum_{m=1..n} K^m psi 1`` with ``K = K(1 - delta)``. It is
    infinite exactly at states that reach a class with radius at least one
    (when ``psi > 0``). The remaining states form a closed set on which the
    affine system ``(I - K) y = K psi 1`` is solved directly.
    """
    K = build_K(prims, 1.0 - prefs.delta).entries
    n = K.shape[0]
    if prefs.psi == 0:
        return np.zeros(n)
    if not np.all(np.isfinite(K)):
        raise ValueError("K(1 - delta) has infinite entries")
    inf_states = _divergent_states(K)
    y = np.full(n, math.inf)
    fin = np.flatnonzero(~inf_states)
    if fin.size:
        Kf = K[np.ix_(fin, fin)]
        y[fin] = np.linalg.solve(np.eye(fin.size) - Kf, Kf @ np.full(fin.size, prefs.psi))
    return y


def _positive_betaR(prims: StochasticPrimitives) -> np.ndarray:
    live = (prims.prob > 0) & (prims.beta_tab * prims.R_tab > 0)
    return np.where(live, prims.prob, 0.0).sum(axis=(1, 2)) > 0


def _radius(K: np.ndarray) -> float:
    return spectral_radius(K) if np.all(np.isfinite(K)) else math.inf


def classify(prims: StochasticPrimitives, prefs: Preferences) -> AsymptoticReport:
    """Decide the asymptotic-MPC regime and the predicted limiting slopes."""
    gamma, delta = prefs.gamma, prefs.delta
    K = build_K(prims, 1.0 - gamma).entries
    r = _radius(K)
    irreducible = is_irreducible(K)
    nz = prims.num_states
    report = AsymptoticReport(regime=Regime.UNCLASSIFIED, r_K1mg=r, irreducible=irreducible)
    positive = _positive_betaR(prims)

    if delta < gamma:
        if positive.all():
            y = fixed_point_G(prims, prefs)
            with np.errstate(divide="ignore"):
                bound = np.where(np.isfinite(y), y ** (-1.0 / gamma), 0.0)
            report.regime = Regime.ZERO_DELTA_LT_GAMMA
            report.x_star = np.full(nz, math.inf)
            report.predicted_mpc = np.zeros(nz)
            report.g_fixed_point = y
            report.power_bound = bound
        else:
            report.messages.append(
                f"delta < gamma but Pr[beta R > 0] = 0 in states {np.flatnonzero(~positive).tolist()}"
            )
        return report

    if irreducible and r >= 1:
        report.regime = Regime.ZERO_SPECTRAL
        report.x_star = np.full(nz, math.inf)
        report.predicted_mpc = np.zeros(nz)
        return report
    if r >= 1:
        report.messages.append("r(K(1-gamma)) >= 1 with K(1-gamma) reducible")
        return report

    if delta > gamma:
        live = prims.prob > 0
        if not np.all(prims.Y_tab[live] > 0):
            report.messages.append("income is not bounded away from zero")
            return report
        report.regime = Regime.POSITIVE
    else:
        report.regime = Regime.KNIFE_EDGE
    x = fixed_point_F(prims, prefs)
    report.x_star = x
    report.predicted_mpc = x ** (-1.0 / gamma)
    return report


def measured_slope(pol: ConsumptionPolicy, z: int, decades: float = 1) -> tuple[float, float]:
    """Empirical MPC and growth exponent over the top decade of the grid.

    ``slope`` is the median of ``c / w`` over grid nodes in
    ``[w_max / 10, w_max]``; ``exponent`` is the least-squares slope of
    ``log c`` on ``log w`` there. The grid must span at least ``decades``
    decades above the last borrowing-constrained node.
    """
    w = pol.grid.points
    c = pol.values[:, z]
    bound = pol.grid.w_min
    binding = np.flatnonzero(_constrained_mask(pol)[:, z])
    if binding.size:
        bound = max(bound, w[binding[-1]])
    headroom = math.log10(w[-1] / bound)
    if headroom < decades:
        raise GridTooSmallError(
            f"grid spans {headroom:.2f} decades above the binding region, need {decades}"
        )
    top = w >= w[-1] / 10.0
    if top.sum() < 2:
        raise GridTooSmallError("fewer than two grid nodes in the top decade")
    slope = float(np.median(c[top] / w[top]))
    exponent = float(np.polyfit(np.log(w[top]), np.log(c[top]), 1)[0])
    return slope, exponent


def compare(
    prims: StochasticPrimitives,
    prefs: Preferences,
    grid: WealthGrid | None = None,
    tol: float = 1e-10,
    max_iter: int = 2000,
) -> dict:
    """Solve the model and put predicted and measured asymptotic MPCs side by side.

    A measured value is withheld (``None``) for a state whose grid has fewer
    than three decades of headroom above the binding threshold.
    """
    report = classify(prims, prefs)
    pol, diag = solve(prims, prefs, grid, tol=tol, max_iter=max_iter)
    w_max = pol.grid.w_max
    measured, gaps, exponents = [], [], []
    for z in range(prims.num_states):
        thr = diag.threshold[z]
        if not (thr < w_max and math.log10(w_max / thr) >= MIN_HEADROOM_DECADES):
            measured.append(None)
            exponents.append(None)
            gaps.append(None)
            continue
        slope, exponent = measured_slope(pol, z, decades=MIN_HEADROOM_DECADES)
        measured.append(slope)
        exponents.append(exponent)
        pred = None if report.predicted_mpc is None else float(report.predicted_mpc[z])
        gaps.append(None if pred is None else abs(slope - pred))
    report.measured_mpc = np.array([math.nan if m is None else m for m in measured])
    return {
        "regime": report.regime.value,
        "predicted_mpc": None if report.predicted_mpc is None else [float(v) for v in report.predicted_mpc],
        "measured_mpc": measured,
        "abs_gap": gaps,
        "measured_exponent": exponents,
        "iterations": diag.iterations,
        "euler_residual_max": diag.euler_residual_max,
        "w_max": w_max,
    }
