import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import single, solved, two_state
from wealthmpc.asymptotics import (
    GridTooSmallError,
    NoFixedPointError,
    Regime,
    apply_F,
    apply_G,
    classify,
    fixed_point_F,
    fixed_point_G,
    measured_slope,
    phi,
)
from wealthmpc.model import Preferences, ShockGrid, StochasticPrimitives
from wealthmpc.spectral import build_K, spectral_radius
from wealthmpc.time_iteration import ConsumptionPolicy, WealthGrid


def markov(seed, n=3, k=2, beta_scale=0.9):
    """Random chain with shocks; beta * R^(1-gamma) kept well inside the unit disk."""
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(n), size=n)
    w = rng.dirichlet(np.ones(k))
    beta = beta_scale * rng.uniform(0.3, 0.9, (n, n, k))
    R = rng.uniform(0.9, 1.1, (n, n, k))
    Y = rng.uniform(0.5, 1.5, (n, n, k))
    return StochasticPrimitives(P, ShockGrid(w), beta, R, Y)


class TestF:
    def test_zero_discount(self):
        prims = single(0.0, 1.0)
        out = apply_F(np.array([7.0]), prims, Preferences(1, 2, 1))
        assert out[0] == 1.0
        assert fixed_point_F(prims, Preferences(1, 2, 1))[0] == 1.0

    def test_linear_step(self):
        assert apply_F(np.array([2.0]), single(0.25, 1.0), Preferences(1, 2, 1))[0] == pytest.approx(1.5)

    def test_delta_below_gamma_is_infinite(self):
        out = apply_F(np.ones(3), markov(0), Preferences(2, 1, 1))
        assert np.all(np.isinf(out))

    def test_infinite_input_propagates(self):
        prims = StochasticPrimitives(
            np.array([[0.5, 0.5], [0.0, 1.0]]), ShockGrid(np.ones(1)), np.full((2, 2, 1), 0.5), np.ones((2, 2, 1)), np.ones((2, 2, 1))
        )
        out = apply_F(np.array([1.0, np.inf]), prims, Preferences(1, 2, 0))
        assert np.isinf(out[0]) and np.isinf(out[1])
        out = apply_F(np.array([np.inf, 1.0]), prims, Preferences(1, 2, 0))
        # state 1 never reaches state 0, so 0 * inf = 0 there
        assert np.isinf(out[0]) and out[1] == pytest.approx(1.5)

    def test_domain(self):
        with pytest.raises(ValueError):
            apply_F(np.array([0.5]), single(0.25, 1.0), Preferences(1, 2, 1))

    def test_fixed_points(self, oracle):
        x2 = fixed_point_F(single(0.25, 1.0), Preferences(1, 2, 1))
        x1 = fixed_point_F(single(0.25, 1.0), Preferences(1, 1, 1))
        assert x2[0] == pytest.approx(oracle["x2_star_beta_quarter"], abs=1e-10)
        assert x1[0] == pytest.approx(oracle["x1_star_beta_quarter_psi1"], abs=1e-10)

    def test_divergence(self):
        with pytest.raises(NoFixedPointError, match="no finite fixed point"):
            fixed_point_F(single(1.0, 1.0), Preferences(1, 2, 1))

    @given(st.integers(0, 10_000), st.floats(0.2, 4.0), st.floats(0.0, 2.0))
    def test_monotone(self, seed, gamma, bump):
        prims = markov(seed)
        rng = np.random.default_rng(seed)
        x = 1 + rng.exponential(2.0, 3)
        xp = x + bump * rng.uniform(0, 1, 3)
        for delta in (gamma, gamma + 0.5):
            prefs = Preferences(gamma, delta, 0.7)
            assert np.all(apply_F(x, prims, prefs) <= apply_F(xp, prims, prefs) * (1 + 1e-14))

    @given(st.integers(0, 10_000), st.floats(0.5, 3.0))
    def test_fixed_point_is_fixed(self, seed, gamma):
        prims = markov(seed, beta_scale=0.5)
        prefs = Preferences(gamma, gamma + 1.0, 0.3)
        if spectral_radius(build_K(prims, 1 - gamma).entries) >= 0.95:
            return
        x = fixed_point_F(prims, prefs)
        assert np.all(x >= 1)
        np.testing.assert_allclose(apply_F(x, prims, prefs), x, rtol=1e-10)


class TestG:
    def test_value(self):
        assert apply_G(np.zeros(1), single(0.5, 1.0), Preferences(2, 1, 1))[0] == 0.5

    def test_zero_discount(self):
        assert apply_G(np.array([5.0]), single(0.0, 1.0), Preferences(2, 1, 1))[0] == 0.0

    def test_fixed_point(self, oracle):
        y = fixed_point_G(single(0.5, 1.0), Preferences(2, 0.5, 1))
        assert y[0] == pytest.approx(oracle["g_fixed_point_beta_half"], rel=1e-12)

    def test_divergent(self):
        assert np.isinf(fixed_point_G(single(1.0, 1.0), Preferences(2, 1, 1))[0])

    def test_partial_divergence(self):
        # state 0 feeds the explosive state 1; state 2 is closed and contracting
        P = np.array([[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        beta = np.array([0.5, 1.2, 0.5])[:, None, None] * np.ones((3, 3, 1))
        prims = StochasticPrimitives(P, ShockGrid(np.ones(1)), beta, np.ones((3, 3, 1)), np.ones((3, 3, 1)))
        y = fixed_point_G(prims, Preferences(2, 1, 1))
        assert np.isinf(y[0]) and np.isinf(y[1])
        assert y[2] == pytest.approx(1.0)

    @given(st.integers(0, 10_000))
    def test_matches_iteration(self, seed):
        prims = markov(seed, beta_scale=0.8)
        prefs = Preferences(2.0, 1.0, 0.8)
        y = np.zeros(3)
        for _ in range(3000):
            y = apply_G(y, prims, prefs)
        np.testing.assert_allclose(fixed_point_G(prims, prefs), y, rtol=1e-9)


class TestClassify:
    def test_zero_mpc(self, oracle):
        rep = classify(single(0.95, 1.02), Preferences(2, 1, 1))
        assert rep.regime is Regime.ZERO_DELTA_LT_GAMMA
        assert rep.predicted_mpc[0] == 0.0
        assert rep.g_fixed_point[0] == pytest.approx(oracle["g_fixed_point_zero_mpc"], rel=1e-12)
        assert rep.power_bound[0] == pytest.approx(oracle["power_bound_zero_mpc"], rel=1e-12)

    def test_knife_edge(self, oracle):
        rep = classify(single(0.25, 1.0), Preferences(1, 1, 1))
        assert rep.regime is Regime.KNIFE_EDGE
        assert rep.predicted_mpc[0] == pytest.approx(oracle["mpc_knife_beta_quarter_psi1"], rel=1e-10)

    @pytest.mark.parametrize("psi", [0.0, 1.0, 7.0])
    def test_positive_independent_of_psi(self, psi, oracle):
        rep = classify(single(0.25, 1.0), Preferences(1, 2, psi))
        assert rep.regime is Regime.POSITIVE
        assert rep.predicted_mpc[0] == pytest.approx(oracle["mpc_positive_beta_quarter"], rel=1e-10)

    def test_spectral_zero(self):
        rep = classify(single(1.0, 1.0), Preferences(2, 3, 1))
        assert rep.regime is Regime.ZERO_SPECTRAL
        assert rep.regime.zero_mpc
        assert rep.predicted_mpc[0] == 0.0 and math.isinf(rep.x_star[0])

    def test_reducible_unclassified(self):
        P = np.array([[0.5, 0.5], [0.0, 1.0]])
        beta = np.full((2, 2, 1), 1.0)
        prims = StochasticPrimitives(P, ShockGrid(np.ones(1)), beta, np.ones((2, 2, 1)), np.ones((2, 2, 1)))
        rep = classify(prims, Preferences(1, 2, 1))
        assert rep.regime is Regime.UNCLASSIFIED
        assert rep.messages

    def test_no_positive_return_unclassified(self):
        P = np.eye(2)
        beta = np.zeros((2, 2, 1))
        beta[0, 0, 0] = 0.5
        prims = StochasticPrimitives(P, ShockGrid(np.ones(1)), beta, np.ones((2, 2, 1)), np.ones((2, 2, 1)))
        rep = classify(prims, Preferences(2, 1, 1))
        assert rep.regime is Regime.UNCLASSIFIED

    def test_report_invariants(self):
        prims, prefs = two_state()
        rep = classify(prims, prefs)
        assert rep.regime is Regime.POSITIVE
        assert np.all(rep.x_star >= 1)
        np.testing.assert_allclose(rep.predicted_mpc, rep.x_star ** (-1 / prefs.gamma))
        d = rep.to_dict()
        assert d["regime"] == "Positive_delta_gt_gamma"

    @given(st.integers(0, 10_000), st.floats(0.5, 3.0), st.floats(0.1, 5.0), st.floats(0.0, 3.0))
    def test_psi_monotone_at_knife_edge(self, seed, gamma, psi, bump):
        prims = markov(seed, beta_scale=0.5)
        if spectral_radius(build_K(prims, 1 - gamma).entries) >= 0.95:
            return
        lo = fixed_point_F(prims, Preferences(gamma, gamma, psi))
        hi = fixed_point_F(prims, Preferences(gamma, gamma, psi + bump + 0.01))
        assert np.all(hi >= lo)

    @given(st.integers(0, 10_000), st.floats(0.5, 3.0), st.floats(0.0, 5.0))
    def test_knife_edge_below_positive(self, seed, gamma, psi):
        prims = markov(seed, beta_scale=0.5)
        if spectral_radius(build_K(prims, 1 - gamma).entries) >= 0.95:
            return
        x1 = fixed_point_F(prims, Preferences(gamma, gamma, psi))
        x2 = fixed_point_F(prims, Preferences(gamma, gamma + 1, psi))
        assert np.all(x1 >= x2 * (1 - 1e-12))


class TestPhiBound:
    @given(st.floats(0.3, 4.0), st.floats(0.05, 0.9), st.floats(0.01, 0.99))
    def test_linear_majorant(self, gamma, r, frac):
        """For a in (1, 1/r) some intercept b makes a t + b dominate phi."""
        a = 1 + frac * (1 / r - 1)
        t = np.geomspace(1e-6, 1e6, 400)
        gap = phi(t, gamma) - a * t
        b = gap.max() + 1.0
        assert np.isfinite(b)
        assert np.all(phi(t, gamma) < a * t + b)

    def test_phi_values(self):
        assert phi(0.0, 2.0) == 1.0
        assert phi(4.0, 1.0) == 5.0
        assert phi(4.0, 2.0) == pytest.approx(9.0)


class TestMeasuredSlope:
    def test_linear(self):
        grid = WealthGrid.log_spaced(1e-3, 1e4, 500)
        pol = ConsumptionPolicy(grid, 0.3 * grid.points)
        slope, exponent = measured_slope(pol, 0, decades=3)
        assert slope == pytest.approx(0.3)
        assert exponent == pytest.approx(1.0)

    def test_square_root(self):
        grid = WealthGrid.log_spaced(1.0, 1e6, 500)
        pol = ConsumptionPolicy(grid, np.sqrt(grid.points))
        _, exponent = measured_slope(pol, 0, decades=3)
        assert exponent == pytest.approx(0.5)

    def test_headroom_required(self):
        grid = WealthGrid.log_spaced(1e-3, 1e4, 500)
        c = np.where(grid.points > 100, 100 + 0.5 * (grid.points - 100), grid.points)
        pol = ConsumptionPolicy(grid, c)
        with pytest.raises(GridTooSmallError):
            measured_slope(pol, 0, decades=3)
        measured_slope(pol, 0, decades=1)

    def test_knife_edge_solve(self, oracle):
        _, _, pol, _ = solved(0.25, 1.0, 1.0, 1.0, 1.0)
        slope, exponent = measured_slope(pol, 0, decades=3)
        assert slope == pytest.approx(oracle["mpc_knife_beta_quarter_psi1"], rel=0.02)
        assert exponent == pytest.approx(1.0, abs=0.01)

    def test_sublinear_solve_under_bound(self, oracle):
        _, prefs, pol, _ = solved(0.95, 1.02, 2.0, 1.0, 1.0)
        w = pol.grid.points
        top = w >= w[-1] / 10
        ratio = pol.values[top, 0] / w[top] ** (prefs.delta / prefs.gamma)
        assert ratio.max() <= oracle["power_bound_zero_mpc"] + 1e-3
        _, exponent = measured_slope(pol, 0, decades=3)
        assert exponent < 1.0
