import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wealthmpc.model import Preferences, ValidationError
from wealthmpc.two_period import TwoPeriodSpec, cbar1, cbar2, power_bound, solve_two_period, verify_proposition1

W_LIST = np.geomspace(1.0, 1e6, 61)


def spec(gamma, delta, psi, beta=1.0, R=1.0):
    return TwoPeriodSpec(Preferences(gamma, delta, psi), beta, R)


@pytest.mark.parametrize("w", [0.5, 1.0, 3.0, 10.0, 1e6])
def test_log_case_one_third(w):
    assert solve_two_period(spec(1, 1, 1), w) == pytest.approx(w / 3, rel=1e-12)


def test_no_wealth_utility_halves():
    assert solve_two_period(spec(1, 1, 0), 2.0) == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0.3, 5), st.floats(0.3, 5), st.floats(0, 10), st.floats(0.1, 2), st.floats(0.5, 2), st.floats(1e-3, 1e6))
def test_foc_residual_small(gamma, delta, psi, beta, R, w):
    s = spec(gamma, delta, psi, beta, R)
    c = solve_two_period(s, w)
    assert 0 < c < w
    # relative to the size of either side of the condition
    assert abs(s.foc_residual(c, w)) <= 1e-10 * c ** (-gamma)


def test_against_high_precision(oracle):
    assert solve_two_period(spec(2, 1, 1), 1e6) == pytest.approx(oracle["two_period_c_gamma2_delta1_w1e6"], rel=1e-12)
    s = spec(2, 3, 0.5, 0.9, 1.1)
    assert solve_two_period(s, 7.0) == pytest.approx(oracle["two_period_c_gamma2_delta3_beta09_R11_w7"], rel=1e-12)


def test_cbar2_values(oracle):
    for g in (0.5, 1.0, 3.0):
        assert cbar2(g, 1.0, 1.0) == pytest.approx(0.5)
    assert cbar2(1.0, 0.25, 1.0) == pytest.approx(oracle["cbar2_log_beta_quarter"])
    assert cbar2(2.0, 0.9, 1.1) == pytest.approx(oracle["cbar2_gamma2_beta09_R11"], rel=1e-12)


def test_cbar2_matches_bisection():
    # with psi = 0 the scale-free condition is the cbar2 equation
    assert cbar1(spec(2, 2, 0.0, 0.9, 1.1)) == pytest.approx(cbar2(2.0, 0.9, 1.1), rel=1e-12)


def test_cbar1(oracle):
    assert cbar1(spec(1, 1, 1)) == pytest.approx(oracle["cbar1_log_psi1"], rel=1e-12)
    assert cbar1(spec(1, 1, 0)) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValidationError):
        cbar1(spec(1, 2, 1))


@given(st.floats(0.3, 5), st.floats(0.01, 10), st.floats(0.1, 2), st.floats(0.5, 2))
def test_cbar1_below_cbar2(gamma, psi, beta, R):
    assert cbar1(spec(gamma, gamma, psi, beta, R)) < cbar2(gamma, beta, R)


@pytest.mark.parametrize("prefs", [(2, 1, 1), (1, 1, 1), (1, 2, 5)])
def test_consumption_increasing(prefs):
    s = spec(*prefs, beta=0.9, R=1.05)
    c = np.array([solve_two_period(s, w) for w in np.geomspace(1e-3, 1e6, 200)])
    assert np.all(np.diff(c) > 0)


def test_power_bound_example():
    s = spec(2, 1, 1)
    assert solve_two_period(s, 1e6) / 1e6 <= 1e-3
    assert power_bound(s, 1e6) / 1e6 == pytest.approx(1e-3)


def test_limit_regimes():
    for s, regime in [(spec(2, 1, 1), "delta_lt_gamma"), (spec(1, 1, 1), "delta_eq_gamma"), (spec(1, 2, 5, 0.25), "delta_gt_gamma")]:
        rep = verify_proposition1(s, W_LIST)
        assert rep.regime == regime
        assert rep.passed, rep.message


def test_limits_need_six_decades():
    with pytest.raises(ValueError):
        verify_proposition1(spec(1, 1, 1), np.geomspace(1, 1e5, 20))


def test_limits_report_offenders():
    # with a bad target the knife-edge ratios are all reported
    rep = verify_proposition1(spec(1, 1, 1), W_LIST, tol=-1.0)
    assert not rep.passed
    assert len(rep.offending) == int((W_LIST >= 1e5).sum())


def test_spec_validation():
    with pytest.raises(ValidationError):
        spec(1, 1, 1, beta=0.0)
    with pytest.raises(ValidationError):
        spec(1, 1, 1, R=-1.0)
