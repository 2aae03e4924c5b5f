"""Time iteration on a wealth grid.

Policies are stored as consumption levels on a log-spaced wealth grid, one
column per exogenous state, and evaluated by linear interpolation. The
operator ``T`` maps a policy ``c`` to the policy whose value at ``(w, z)``
is the ``xi`` in ``(0, w]`` solving

    u'(xi) = max{ g(xi), u'(w) },
    g(xi)  = E_z beta' R' [u'(c(w', z')) + v'(w')],  w' = R' (w - xi) + Y'.

``g`` is nondecreasing in ``xi`` and ``u'`` strictly decreasing, so the root
is bracketed and found by bisection.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from wealthmpc.model import Preferences, StochasticPrimitives
from wealthmpc.spectral import build_K, spectral_radius

log = logging.getLogger(__name__)

MIN_GRID_POINTS = 50
BISECT_MAX_ITER = 200
BISECT_MU_TOL = 1e-12
CONSTRAINED_TOL = 1e-9
_EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    """Time iteration hit ``max_iter`` before reaching ``tol``."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConsistencyError(RuntimeError):
    """An invariant that must hold by construction was violated."""


@dataclass(frozen=True)
class WealthGrid:
    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float).reshape(-1)
        if p.size < MIN_GRID_POINTS:
            raise ValueError(f"wealth grid needs at least {MIN_GRID_POINTS} points, got {p.size}")
        if not p[0] > 0:
            raise ValueError("wealth grid must start above zero")
        if np.any(np.diff(p) <= 0) or not np.all(np.isfinite(p)):
            raise ValueError("wealth grid must be finite and strictly increasing")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @classmethod
    def log_spaced(cls, w_min: float, w_max: float, n: int = 1000) -> "WealthGrid":
        if not 0 < w_min < w_max:
            raise ValueError("need 0 < w_min < w_max")
        return cls(np.geomspace(w_min, w_max, n))

    @classmethod
    def default_for(cls, prims: StochasticPrimitives, n: int = 1000) -> "WealthGrid":
        scale = float(np.median(prims.Y_tab))
        if scale <= 0:
            scale = 1.0
        return cls.log_spaced(1e-3 * scale, 1e4 * scale, n)

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def w_min(self) -> float:
        return float(self.points[0])

    @property
    def w_max(self) -> float:
        return float(self.points[-1])


def tail_exponent(points, values):
    """Elasticity of consumption over the top decade of the grid, per state.

    Clipped to ``[0, 1]`` so the power-law tail stays feasible and keeps
    savings nondecreasing.
    """
    j = min(int(np.searchsorted(points, points[-1] / 10.0)), points.size - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.log(values[-1] / values[j]) / math.log(points[-1] / points[j])
    return np.clip(np.nan_to_num(e, nan=1.0), 0.0, 1.0)


def growth_exponent(prims: StochasticPrimitives, prefs: Preferences) -> float | None:
    """Known rate at which consumption grows with wealth, if the model pins it down.

    ``delta / gamma`` when wealth utility is less curved than consumption
    utility, 1 when ``r(K(1 - gamma)) < 1`` (asymptotically linear
    consumption), ``None`` otherwise. Used as the tail exponent of solver
    iterates so the discretised operator stays monotone.
    """
    if prefs.delta < prefs.gamma:
        return prefs.delta / prefs.gamma
    K = build_K(prims, 1.0 - prefs.gamma).entries
    if np.all(np.isfinite(K)) and spectral_radius(K) < 1:
        return 1.0
    return None


@dataclass(frozen=True)
class ConsumptionPolicy:
    """Consumption on ``grid`` (``values[i, z]``) with a power-law tail above ``w_max``.

    Beyond the grid ``c(w, z) = c(w_max, z) * (w / w_max) ** tail[z]``. The
    constructor asserts feasibility ``0 < c <= w`` and that both consumption
    and savings are nondecreasing in wealth, allowing only round-off slack.
    """

    grid: WealthGrid
    values: np.ndarray
    tail: np.ndarray = None
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.n:
            raise ValueError(f"values shape {v.shape} does not match grid of {self.grid.n} points")
        tail = tail_exponent(self.grid.points, v) if self.tail is None else np.array(self.tail, dtype=float)
        tail = np.broadcast_to(tail, (v.shape[1],)).copy()
        if np.any(tail < 0) or np.any(tail > 1):
            raise ValueError("tail exponents must lie in [0, 1]")
        v.setflags(write=False)
        tail.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tail", tail)
        if self.check:
            self.assert_invariants()

    @property
    def num_states(self) -> int:
        return self.values.shape[1]

    @property
    def savings(self) -> np.ndarray:
        return self.grid.points[:, None] - self.values

    def assert_invariants(self, rtol: float = 1e-12):
        w = self.grid.points[:, None]
        c = self.values
        if not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise ConsistencyError("consumption must be finite and positive")
        if np.any(c > w * (1 + rtol)):
            raise ConsistencyError("consumption exceeds wealth")
        slack = rtol * w[1:]
        if np.any(np.diff(c, axis=0) < -slack):
            raise ConsistencyError("consumption decreases in wealth")
        if np.any(np.diff(w - c, axis=0) < -slack):
            raise ConsistencyError("savings decrease in wealth")

    def __call__(self, w, z):
        return eval_policy(self, w, z)

    @classmethod
    def consume_all(cls, grid: WealthGrid, num_states: int) -> "ConsumptionPolicy":
        """``c(w, z) = w``, the starting point of time iteration."""
        return cls(grid, np.repeat(grid.points[:, None], num_states, axis=1), np.ones(num_states))


def _eval_column(points, column, tail, x):
    """Interpolate one state's policy at wealth array ``x``."""
    c = np.interp(x, points, column)
    c = np.where(x < points[0], x, c)
    above = x > points[-1]
    if np.any(above):
        ext = column[-1] * (np.where(above, x, points[-1]) / points[-1]) ** tail
        c = np.where(above, np.minimum(ext, x), c)
    return c


def eval_policy(pol: ConsumptionPolicy, w, z: int):
    """Policy value at wealth ``w`` in state ``z``.

    Linear interpolation on the grid, ``c = w`` below ``w_min`` and the
    power-law tail (clamped to ``c <= w``) above ``w_max``.
    """
    x = np.asarray(w, dtype=float)
    out = _eval_column(pol.grid.points, pol.values[:, z], pol.tail[z], x)
    return float(out) if out.ndim == 0 else out


class _ExpectationKernel:
    """Evaluates ``g(xi)`` for every grid node and state at once.

    Terms are accumulated zhat-major, then over shocks, in a fixed order.
    Triples with ``P * weight * beta * R == 0`` are skipped, which is the
    ``0 * inf = 0`` convention.
    """

    def __init__(self, prims: StochasticPrimitives, prefs: Preferences):
        self.prims = prims
        self.prefs = prefs
        coef = prims.prob * prims.beta_tab * prims.R_tab
        self.coef = coef
        self.terms = [
            (zh, k)
            for zh in range(prims.num_states)
            for k in range(prims.shocks.size)
            if np.any(coef[:, zh, k] > 0)
        ]
        bad = np.argwhere((coef > 0) & (prims.Y_tab == 0))
        if bad.size:
            z, zh, k = (int(i) for i in bad[0])
            raise ValueError(
                f"expected marginal value is infinite: Y = 0 with positive weight at "
                f"(z={z}, zhat={zh}, k={k})"
            )

    def __call__(self, pol: ConsumptionPolicy, savings: np.ndarray) -> np.ndarray:
        """``savings`` has shape ``(n, Z)``; returns ``g`` of the same shape."""
        prims, prefs = self.prims, self.prefs
        points = pol.grid.points
        out = np.zeros_like(savings)
        for zh, k in self.terms:
            coef = self.coef[:, zh, k]
            w_next = prims.R_tab[:, zh, k] * savings + prims.Y_tab[:, zh, k]
            c_next = _eval_column(points, pol.values[:, zh], pol.tail[zh], w_next)
            with np.errstate(divide="ignore", invalid="ignore"):
                mv = c_next ** (-prefs.gamma)
                if prefs.psi:
                    mv = mv + prefs.psi * w_next ** (-prefs.delta)
            with np.errstate(invalid="ignore"):
                out += np.where(coef > 0, coef * mv, 0.0)
        return out


def _solve_euler(pol, prims, prefs, points, kernel=None):
    """Vectorised bisection for the Euler root at every ``(w_i, z)``."""
    kernel = kernel or _ExpectationKernel(prims, prefs)
    gamma = prefs.gamma
    n, nz = points.size, prims.num_states
    w = np.broadcast_to(points[:, None], (n, nz))
    g_corner = kernel(pol, np.zeros((n, nz)))
    mu_w = w ** (-gamma)
    constrained = g_corner <= mu_w
    xi = w.copy()
    if np.all(constrained):
        return xi

    # g is nondecreasing in xi, so u'(xi) = g(w) gives a point where u' >= g
    with np.errstate(divide="ignore"):
        lo = np.where(constrained, w, np.minimum(g_corner ** (-1.0 / gamma), w))
    hi = w.copy()
    active = ~constrained
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        mid = np.where(active, mid, xi)
        g = kernel(pol, w - mid)
        mu = mid ** (-gamma)
        resid = mu - g
        up = resid >= 0
        lo = np.where(active & up, mid, lo)
        hi = np.where(active & ~up, mid, hi)
        xi = np.where(active, mid, xi)
        done = (np.abs(resid) <= BISECT_MU_TOL * np.minimum(1.0, mu)) | (hi - lo <= 2 * _EPS * hi)
        active &= ~done
        if not active.any():
            break
    return xi


def apply_T(
    pol: ConsumptionPolicy, prims: StochasticPrimitives, prefs: Preferences, _kernel=None, tail=None
):
    """One application of the time iteration operator.

    ``tail`` fixes the exponent of the output's power-law tail; by default it
    is estimated from the top decade of the new values.
    """
    if pol.num_states != prims.num_states:
        raise ValueError("policy and primitives disagree on the number of states")
    points = pol.grid.points
    xi = _solve_euler(pol, prims, prefs, points, _kernel)
    return ConsumptionPolicy(pol.grid, xi, tail)


def rho_distance(p1: ConsumptionPolicy, p2: ConsumptionPolicy, gamma: float):
    """Sup distance between marginal utilities on the grid.

    Returns ``(scalar, per_state)`` where ``per_state[z]`` is the maximum over
    grid nodes of ``|c1^-gamma - c2^-gamma|``.
    """
    if p1.grid.n != p2.grid.n or not np.array_equal(p1.grid.points, p2.grid.points):
        raise ValueError("policies live on different grids")
    if p1.num_states != p2.num_states:
        raise ValueError("policies have different numbers of states")
    diff = np.abs(p1.values ** (-gamma) - p2.values ** (-gamma))
    per_state = diff.max(axis=0)
    return float(per_state.max()), per_state


@dataclass
class SolveDiagnostics:
    iterations: int
    rho_history: list[float]
    contraction_estimate: float
    euler_residual_max: float
    threshold: np.ndarray
    r_K1: float = math.nan
    threshold_empirical: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "rho_history": [float(x) for x in self.rho_history],
            "contraction_estimate": float(self.contraction_estimate),
            "r_K1": float(self.r_K1),
            "euler_residual_max": float(self.euler_residual_max),
            "threshold": [float(x) for x in self.threshold],
        }


def _contraction_estimate(history, window=10, floor=0.0):
    """Geometric mean of successive rho ratios over the last ``window`` steps.

    Distances at or below ``floor`` (round-off in marginal utility) are
    dropped, since their ratios carry no information about the rate.
    """
    h = [x for x in history if x > floor]
    if len(h) < 2:
        return 0.0
    m = min(window, len(h) - 1)
    return (h[-1] / h[-1 - m]) ** (1.0 / m)


def _rho_floor(pol: ConsumptionPolicy, prefs: Preferences) -> float:
    return 64 * _EPS * float(np.max(pol.values ** (-prefs.gamma)))


def solve(
    prims: StochasticPrimitives,
    prefs: Preferences,
    grid: WealthGrid | None = None,
    tol: float = 1e-10,
    max_iter: int = 2000,
    rtol: float | None = None,
    monotone_rtol: float = 1e-9,
    tail: float | None = None,
):
    """Iterate ``T`` from ``c0(w, z) = w`` to its fixed point.

    Stops once the rho distance between successive iterates is below ``tol``
    and the largest relative change in marginal utility is below ``rtol``
    (default: ``tol``). The second test matters at high wealth, where ``u'``
    is small and an absolute tolerance says little.

    Above ``w_max`` iterates follow a power law with exponent ``tail``,
    defaulting to ``growth_exponent(prims, prefs)``; when that is unknown the
    exponent is re-estimated from each iterate.

    The iterates must be pointwise nonincreasing; a rise larger than
    ``monotone_rtol`` (relative) raises ``ConsistencyError``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rtol = tol if rtol is None else rtol
    tail = growth_exponent(prims, prefs) if tail is None else tail
    grid = grid or WealthGrid.default_for(prims)
    kernel = _ExpectationKernel(prims, prefs)
    c = ConsumptionPolicy.consume_all(grid, prims.num_states)
    history = []
    r_K1 = spectral_radius(build_K(prims, 1.0).entries)
    for it in range(1, max_iter + 1):
        c_new = apply_T(c, prims, prefs, kernel, tail)
        rise = c_new.values - c.values
        if np.any(rise > monotone_rtol * c.values):
            i, z = np.unravel_index(np.argmax(rise / c.values), rise.shape)
            raise ConsistencyError(
                f"iterate {it} increased at node {i}, state {z}: "
                f"{c.values[i, z]!r} -> {c_new.values[i, z]!r}"
            )
        rho, _ = rho_distance(c_new, c, prefs.gamma)
        history.append(rho)
        rel = float(np.max(np.abs(c_new.values / c.values) ** (-prefs.gamma) - 1.0))
        c = c_new
        if rho < tol and rel < rtol:
            break
    else:
        diag = SolveDiagnostics(
            iterations=max_iter,
            rho_history=history,
            contraction_estimate=_contraction_estimate(history, floor=_rho_floor(c, prefs)),
            euler_residual_max=math.nan,
            threshold=np.full(prims.num_states, math.nan),
            r_K1=r_K1,
        )
        raise ConvergenceError(f"no convergence after {max_iter} iterations (rho={history[-1]!r})", diag)

    log.debug("time iteration converged in %d steps, rho=%g", it, history[-1])
    analytic, empirical = threshold_wealth(c, prims, prefs)
    diag = SolveDiagnostics(
        iterations=it,
        rho_history=history,
        contraction_estimate=_contraction_estimate(history, floor=_rho_floor(c, prefs)),
        euler_residual_max=euler_residual(c, prims, prefs),
        threshold=analytic,
        r_K1=r_K1,
        threshold_empirical=empirical,
    )
    return c, diag


def _constrained_mask(pol: ConsumptionPolicy) -> np.ndarray:
    w = pol.grid.points[:, None]
    return np.abs(pol.values - w) <= CONSTRAINED_TOL * np.maximum(1.0, w)


def threshold_wealth(
    pol: ConsumptionPolicy, prims: StochasticPrimitives, prefs: Preferences, check: bool = True
):
    """Wealth level below which the borrowing constraint binds, per state.

    Returns ``(analytic, empirical)``: ``analytic[z]`` is
    ``(u')^-1 E_z beta' R' (u'(c(Y', z')) + v'(Y'))`` (``inf`` when the
    expectation is zero) and ``empirical[z]`` the largest grid node with
    ``c = w`` (0 when there is none). With ``check`` set, raises
    ``ConsistencyError`` when the two are more than one grid cell apart, which
    is only meaningful for a converged policy.
    """
    kernel = _ExpectationKernel(prims, prefs)
    points = pol.grid.points
    expect = kernel(pol, np.zeros((1, prims.num_states)))[0]
    with np.errstate(divide="ignore"):
        analytic = expect ** (-1.0 / prefs.gamma)
    mask = _constrained_mask(pol)
    empirical = np.zeros(prims.num_states)
    for z in range(prims.num_states):
        idx = np.flatnonzero(mask[:, z])
        j = int(idx[-1]) if idx.size else -1
        empirical[z] = points[j] if j >= 0 else 0.0
        lower = points[j - 1] if j >= 1 else 0.0
        upper = points[j + 2] if j + 2 < points.size else math.inf
        if check and not lower <= analytic[z] < upper and not (j == points.size - 1 and analytic[z] >= lower):
            raise ConsistencyError(
                f"state {z}: threshold {analytic[z]!r} inconsistent with last constrained node "
                f"{empirical[z]!r}"
            )
    return analytic, empirical


def euler_residual(pol: ConsumptionPolicy, prims: StochasticPrimitives, prefs: Preferences) -> float:
    """Largest relative Euler-equation error over unconstrained grid nodes."""
    kernel = _ExpectationKernel(prims, prefs)
    w = pol.grid.points[:, None]
    c = pol.values
    interior = ~_constrained_mask(pol)
    if not interior.any():
        return 0.0
    g = kernel(pol, w - c)
    mu = c ** (-prefs.gamma)
    rhs = np.maximum(g, w ** (-prefs.gamma))
    rel = np.abs(mu - rhs) / mu
    return float(rel[interior].max())


@dataclass
class Panel:
    """Simulated paths; arrays are ``(n_paths, horizon + 1)``.

    ``k[:, t]`` is the shock index drawn for the transition into period ``t``
    (``-1`` at ``t = 0``).
    """

    w: np.ndarray
    c: np.ndarray
    z: np.ndarray
    k: np.ndarray

    @property
    def horizon(self) -> int:
        return self.w.shape[1] - 1

    @property
    def n_paths(self) -> int:
        return self.w.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["path", "t", "z", "k", "w", "c"])
        for p in range(self.n_paths):
            for t in range(self.horizon + 1):
                out.writerow(
                    [p, t, int(self.z[p, t]), int(self.k[p, t]), repr(float(self.w[p, t])), repr(float(self.c[p, t]))]
                )
        return buf.getvalue()


def simulate_paths(
    pol: ConsumptionPolicy,
    prims: StochasticPrimitives,
    w0: float,
    z0: int,
    horizon: int,
    n_paths: int,
    seed: int,
) -> Panel:
    """Simulate ``w_{t+1} = R_{t+1} (w_t - c_t) + Y_{t+1}`` under ``pol``.

    Each path draws from its own generator spawned from ``seed``, so path
    ``p`` is the same whatever ``n_paths`` is.
    """
    if horizon < 1 or n_paths < 1:
        raise ValueError("horizon and n_paths must be at least 1")
    if not w0 > 0:
        raise ValueError("initial wealth must be positive")
    children = np.random.SeedSequence(seed).spawn(n_paths)
    draws = np.stack([np.random.default_rng(s).random((horizon, 2)) for s in children])
    P_cdf = np.cumsum(prims.P, axis=1)
    k_cdf = np.cumsum(prims.shocks.weights)
    nz, nk = prims.num_states, prims.shocks.size

    w = np.empty((n_paths, horizon + 1))
    c = np.empty_like(w)
    z = np.empty((n_paths, horizon + 1), dtype=np.int64)
    k = np.full((n_paths, horizon + 1), -1, dtype=np.int64)
    w[:, 0] = w0
    z[:, 0] = z0
    for t in range(horizon + 1):
        for s in range(nz):
            on = z[:, t] == s
            if on.any():
                c[on, t] = eval_policy(pol, w[on, t], s)
        if t == horizon:
            break
        zt = z[:, t]
        z_next = np.minimum((draws[:, t, 0][:, None] > P_cdf[zt]).sum(axis=1), nz - 1)
        k_next = np.minimum(np.searchsorted(k_cdf, draws[:, t, 1], side="right"), nk - 1)
        R = prims.R_tab[zt, z_next, k_next]
        Y = prims.Y_tab[zt, z_next, k_next]
        w[:, t + 1] = R * (w[:, t] - c[:, t]) + Y
        z[:, t + 1] = z_next
        k[:, t + 1] = k_next
    if np.any(w <= 0):
        raise ConsistencyError("simulated wealth hit zero")
    return Panel(w=w, c=c, z=z, k=k)


def tvc_estimate(panel: Panel, prims: StochasticPrimitives, prefs: Preferences, horizon: int | None = None):
    """Monte Carlo estimate of ``E[(prod beta_i) u'(c_t) (w_t - c_t)]`` for ``t = 1..horizon``."""
    horizon = panel.horizon if horizon is None else horizon
    if horizon > panel.horizon:
        raise ValueError("panel is shorter than the requested horizon")
    discount = np.ones(panel.n_paths)
    out = []
    for t in range(1, horizon + 1):
        discount = discount * prims.beta_tab[panel.z[:, t - 1], panel.z[:, t], panel.k[:, t]]
        s = panel.w[:, t] - panel.c[:, t]
        # c_t^-gamma * 0 is 0 even when the discount is 0
        term = np.where((discount > 0) & (s > 0), discount * panel.c[:, t] ** (-prefs.gamma) * s, 0.0)
        out.append(float(term.mean()))
    return out


def policy_to_csv(pol: ConsumptionPolicy) -> str:
    """CSV with header ``w,z,c,s,constrained``, one row per node and state."""
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["w", "z", "c", "s", "constrained"])
    mask = _constrained_mask(pol)
    points = pol.grid.points
    for z in range(pol.num_states):
        for i, w in enumerate(points):
            c = pol.values[i, z]
            out.writerow([repr(float(w)), z, repr(float(c)), repr(float(w - c)), int(mask[i, z])])
    return buf.getvalue()
