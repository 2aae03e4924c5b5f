"""Nonnegative matrices K(theta), spectral radii and irreducibility."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from wealthmpc.model import StochasticPrimitives

# number of squarings in spectral_radius: ||A^(2^k)||^(2^-k) with k = 60
_SQUARINGS = 60


@dataclass(frozen=True)
class KMatrix:
    theta: float
    entries: np.ndarray
    conventions_applied: bool

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.entries)))


def build_K(prims: StochasticPrimitives, theta: float) -> KMatrix:
    """``K[z, zhat] = P(z, zhat) * sum_k weight_k * beta * R**theta``.

    ``R**theta`` is read as ``R * R**(theta - 1)`` with ``0 * inf = 0`` and
    ``0**0 = 1``, so a triple with ``R = 0`` never contributes.
    """
    R = prims.R_tab
    beta = prims.beta_tab
    zero_R = R == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        powered = np.where(zero_R, 0.0, R ** theta)
    term = np.where(beta == 0, 0.0, beta * powered)
    entries = prims.P * np.einsum("k,ijk->ij", prims.shocks.weights, term)
    live = (prims.prob > 0) & (beta > 0)
    triggered = bool(np.any(zero_R & live) and theta <= 0)
    return KMatrix(theta=float(theta), entries=entries, conventions_applied=triggered)


def _check_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.any(A < 0):
        raise ValueError("matrix must be entrywise nonnegative")
    return A


def spectral_radius(A) -> float:
    """Spectral radius of a nonnegative matrix.

    Uses the Gelfand formula on repeated squares, ``r = lim ||A^n||^(1/n)``
    with ``n = 2**60`` and the max-row-sum norm, tracking the scale in log
    space. Unlike vector power iteration this converges on defective and
    periodic matrices alike.
    """
    A = _check_square(A)
    if np.any(np.isinf(A)):
        raise ValueError("spectral radius undefined on infinite entries")
    if np.any(np.isnan(A)):
        raise ValueError("matrix has NaN entries")
    M = A.copy()
    log_r = 0.0
    scale = 1.0
    for _ in range(_SQUARINGS + 1):
        norm = M.sum(axis=1).max()
        if norm == 0.0:
            return 0.0
        M /= norm
        log_r += scale * math.log(norm)
        M = M @ M
        scale *= 0.5
    r = math.exp(log_r)
    # ||A^n 1||_inf^(1/n) bounds r from above for every n
    bound = growth_rate(A, 64)
    if r > bound * (1 + 1e-9):
        raise ArithmeticError(f"spectral radius {r!r} exceeds growth-rate bound {bound!r}")
    return r


def growth_rate(A, n: int) -> float:
    """``(max_z (A^n 1)(z))^(1/n)``, computed with log-space rescaling."""
    A = _check_square(A)
    if n < 1:
        raise ValueError("n must be a positive integer")
    v = np.ones(A.shape[0])
    log_scale = 0.0
    for _ in range(n):
        v = A @ v
        m = v.max()
        if m == 0.0:
            return 0.0
        v /= m
        log_scale += math.log(m)
    return math.exp(log_scale / n)


def is_irreducible(A) -> bool:
    """Strong connectivity of the graph ``z -> zhat`` where ``A[z, zhat] > 0``.

    A 1x1 matrix is irreducible whatever its entry.
    """
    A = _check_square(A)
    if A.shape[0] == 1:
        return True
    n_comp, _ = connected_components(A > 0, directed=True, connection="strong")
    return n_comp == 1
