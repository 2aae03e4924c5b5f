"""Preferences, stochastic primitives and assumption checks.

A model instance is a finite Markov chain ``Z`` with transition matrix ``P``,
a finite iid shock grid with probability weights, and tables of the discount
factor ``beta``, gross return ``R`` and income ``Y`` indexed by
``(z, zhat, k)``: current state, next state, shock index.

Period utility is ``u(c) + v(w)`` with ``u = p(.; gamma)`` and
``v = psi * p(.; delta)`` where ``p`` is CRRA.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ROW_SUM_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when model inputs violate a structural invariant."""


class ModelLoadError(ValidationError):
    """Raised when a model JSON document cannot be turned into a model."""


def crra_utility(c, gamma):
    """CRRA utility ``(c**(1-gamma) - 1) / (1 - gamma)``, ``log c`` at ``gamma == 1``.

    Works elementwise on arrays. Non-positive consumption raises ``ValueError``.
    """
    c_arr = np.asarray(c, dtype=float)
    if np.any(~(c_arr > 0)):
        raise ValueError("crra_utility is defined for c > 0 only")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if gamma == 1:
        out = np.log(c_arr)
    else:
        out = np.expm1((1.0 - gamma) * np.log(c_arr)) / (1.0 - gamma)
    return float(out) if out.ndim == 0 else out


def crra_marginal(c, gamma):
    """Marginal utility ``c**(-gamma)``."""
    c_arr = np.asarray(c, dtype=float)
    if np.any(~(c_arr > 0)):
        raise ValueError("crra_marginal is defined for c > 0 only")
    out = c_arr ** (-gamma)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Preferences:
    """CRRA curvature for consumption (``gamma``) and wealth (``delta``),
    and the weight ``psi`` on wealth utility."""

    gamma: float
    delta: float
    psi: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "delta", "psi"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        if self.delta <= 0:
            raise ValidationError("delta must be positive")
        if self.psi < 0:
            raise ValidationError("psi must be nonnegative")

    def u_prime(self, c):
        return np.asarray(c, dtype=float) ** (-self.gamma)

    def v_prime(self, w):
        w = np.asarray(w, dtype=float)
        if self.psi == 0:
            return np.zeros_like(w)
        return self.psi * w ** (-self.delta)

    def u_prime_inv(self, m):
        """Inverse marginal utility; maps 0 to +inf."""
        m = np.asarray(m, dtype=float)
        with np.errstate(divide="ignore"):
            return m ** (-1.0 / self.gamma)

    def implied_psi(self) -> float:
        # v'(1) / u'(1) under the CRRA pair; equals psi by construction
        return float(self.v_prime(1.0) / self.u_prime(1.0)) if self.psi else 0.0


@dataclass(frozen=True)
class ShockGrid:
    """Finite iid shock distribution: labels ``0..K-1`` with probabilities."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise ValidationError("shock grid needs at least one point")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("shock weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > ROW_SUM_TOL:
            raise ValidationError(f"shock weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def points(self) -> list[int]:
        return list(range(self.size))


@dataclass(frozen=True)
class StochasticPrimitives:
    """Markov chain plus tabulated ``beta``, ``R``, ``Y`` on ``(z, zhat, k)``."""

    P: np.ndarray
    shocks: ShockGrid
    beta_tab: np.ndarray
    R_tab: np.ndarray
    Y_tab: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise ValidationError(f"P must be a nonempty square matrix, got shape {P.shape}")
        if np.any(~np.isfinite(P)) or np.any(P < 0):
            raise ValidationError("P must have finite nonnegative entries")
        bad = np.flatnonzero(np.abs(P.sum(axis=1) - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise ValidationError(f"rows {bad.tolist()} of P do not sum to 1")
        n, k = P.shape[0], self.shocks.size
        for name in ("beta_tab", "R_tab", "Y_tab"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n, n, k):
                raise ValidationError(f"{name} has shape {arr.shape}, expected {(n, n, k)}")
            if np.any(~np.isfinite(arr)) or np.any(arr < 0):
                raise ValidationError(f"{name} must be finite and nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def num_states(self) -> int:
        return self.P.shape[0]

    @property
    def prob(self) -> np.ndarray:
        """Joint probability of ``(zhat, k)`` given ``z``, shape ``(Z, Z, K)``."""
        return self.P[:, :, None] * self.shocks.weights[None, None, :]

    def with_income(self, Y_tab) -> "StochasticPrimitives":
        return StochasticPrimitives(self.P, self.shocks, self.beta_tab, self.R_tab, Y_tab)

    @classmethod
    def constant(cls, beta: float, R: float, Y: float = 1.0) -> "StochasticPrimitives":
        """Single state, single shock model."""
        one = np.ones((1, 1, 1))
        return cls(np.eye(1), ShockGrid(np.ones(1)), beta * one, R * one, Y * one)


@dataclass
class AssumptionReport:
    a1_ok: bool
    a2i_ok: bool
    a2ii_ok: bool
    a4_ok: bool
    positive_betaR_ok: bool
    r_K1: float
    r_K1mg: float
    m1: float | None = None
    m2: float | None = None
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Conditions needed for existence and convergence of time iteration."""
        return self.a1_ok and self.a2i_ok and self.a2ii_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "a1_ok": self.a1_ok,
            "a2i_ok": self.a2i_ok,
            "a2ii_ok": self.a2ii_ok,
            "a4_ok": self.a4_ok,
            "positive_betaR_ok": self.positive_betaR_ok,
            "r_K1": self.r_K1,
            "r_K1mg": self.r_K1mg,
            "m1": self.m1,
            "m2": self.m2,
            "messages": list(self.messages),
        }


def validate_assumptions(prims: StochasticPrimitives, prefs: Preferences) -> AssumptionReport:
    """Check the integrability, spectral and income-floor conditions on a model."""
    from wealthmpc.spectral import build_K, spectral_radius

    messages = []
    # CRRA u, v always satisfy the regularity conditions once Preferences validated
    a1_ok = True
    if prefs.psi and not math.isclose(prefs.implied_psi(), prefs.psi, rel_tol=1e-12):
        a1_ok = False
        messages.append("psi inconsistent with v'(1)/u'(1)")

    prob = prims.prob
    live = prob > 0
    bR = prims.beta_tab * prims.R_tab
    weighted = live & (bR > 0)

    a2i_ok = True
    for z in range(prims.num_states):
        bad = np.argwhere(weighted[z] & (prims.Y_tab[z] == 0))
        if bad.size:
            zhat, k = bad[0]
            a2i_ok = False
            messages.append(
                f"E[beta R u'(Y)] infinite in state {z}: Y=0 at (z={z}, zhat={zhat}, k={k})"
            )

    r_K1 = _radius_or_inf(build_K(prims, 1.0), spectral_radius)
    a2ii_ok = r_K1 < 1.0
    if not a2ii_ok:
        messages.append(f"r(K(1)) = {r_K1!r} >= 1")
    r_K1mg = _radius_or_inf(build_K(prims, 1.0 - prefs.gamma), spectral_radius)

    R_live = prims.R_tab[live]
    pos_R = R_live[R_live > 0]
    m1 = float(pos_R.min()) if pos_R.size else None
    m2 = float(prims.Y_tab[live].min())
    a4_ok = m2 > 0
    if not a4_ok:
        messages.append("income is not bounded away from zero")
        m2 = None

    mass = np.where(weighted, prob, 0.0).sum(axis=(1, 2))
    positive_betaR_ok = bool(np.all(mass > 0))
    if not positive_betaR_ok:
        messages.append(f"Pr[beta R > 0] = 0 in states {np.flatnonzero(mass == 0).tolist()}")

    return AssumptionReport(
        a1_ok=a1_ok,
        a2i_ok=a2i_ok,
        a2ii_ok=bool(a2ii_ok),
        a4_ok=bool(a4_ok),
        positive_betaR_ok=positive_betaR_ok,
        r_K1=r_K1,
        r_K1mg=r_K1mg,
        m1=m1,
        m2=m2,
        messages=messages,
    )


def _radius_or_inf(K, radius) -> float:
    if not np.all(np.isfinite(K.entries)):
        return math.inf
    return radius(K.entries)


def _array(doc, key, shape):
    try:
        arr = np.array(doc[key], dtype=float)
    except KeyError:
        raise ModelLoadError(f"missing field {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(f"field {key!r} is not a numeric array: {exc}") from None
    if arr.shape != shape:
        raise ModelLoadError(f"field {key!r} has shape {arr.shape}, expected {shape}")
    return arr


def model_from_dict(doc: dict) -> tuple[StochasticPrimitives, Preferences]:
    """Build primitives and preferences from the JSON model schema.

    ``P`` may be given nested (``[[...], ...]``) or flat in row-major order.
    """
    try:
        n = doc["states"]
        weights = doc["shocks"]["weights"]
        pref = doc["preferences"]
    except (KeyError, TypeError) as exc:
        raise ModelLoadError(f"missing field {exc}") from None
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ModelLoadError("'states' must be a positive integer")
    try:
        weights = np.array(weights, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(f"shock weights not numeric: {exc}") from None
    if weights.ndim != 1:
        raise ModelLoadError("shocks.weights must be a flat array")
    k = weights.size
    try:
        P = np.array(doc["P"], dtype=float)
    except KeyError:
        raise ModelLoadError("missing field 'P'") from None
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(f"P not numeric: {exc}") from None
    if P.shape == (n * n,):
        P = P.reshape(n, n)
    if P.shape != (n, n):
        raise ModelLoadError(f"P has shape {P.shape}, expected {(n, n)} or {(n * n,)}")
    tabs = {key: _array(doc, key, (n, n, k)) for key in ("beta", "R", "Y")}
    try:
        prefs = Preferences(
            gamma=float(pref["gamma"]), delta=float(pref["delta"]), psi=float(pref.get("psi", 0.0))
        )
        prims = StochasticPrimitives(P, ShockGrid(weights), tabs["beta"], tabs["R"], tabs["Y"])
    except KeyError as exc:
        raise ModelLoadError(f"missing preference {exc}") from None
    except ValidationError as exc:
        raise ModelLoadError(str(exc)) from None
    return prims, prefs


def model_to_dict(prims: StochasticPrimitives, prefs: Preferences) -> dict:
    return {
        "states": prims.num_states,
        "P": prims.P.tolist(),
        "shocks": {"weights": prims.shocks.weights.tolist()},
        "beta": prims.beta_tab.tolist(),
        "R": prims.R_tab.tolist(),
        "Y": prims.Y_tab.tolist(),
        "preferences": {"gamma": prefs.gamma, "delta": prefs.delta, "psi": prefs.psi},
    }


def load_model(path) -> tuple[StochasticPrimitives, Preferences]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelLoadError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)
