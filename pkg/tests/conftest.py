import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wealthmpc.model import Preferences, StochasticPrimitives, model_from_dict
from wealthmpc.time_iteration import ConsumptionPolicy, WealthGrid, solve

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def oracle():
    return json.loads((ROOT / "tests" / "data" / "oracles.json").read_text())


@pytest.fixture(scope="session")
def models_dir():
    return ROOT / "models"


def single(beta, R, Y=1.0):
    return StochasticPrimitives.constant(beta, R, Y)


def two_state():
    return model_from_dict(json.loads((ROOT / "models" / "two_state.json").read_text()))


def random_policy(grid: WealthGrid, nz: int, rng, lo=0.05, hi=1.0) -> ConsumptionPolicy:
    """A policy in the candidate class: slopes of c and of w - c both in [0, 1]."""
    w = grid.points
    dw = np.diff(w, prepend=0.0)
    lam = rng.uniform(lo, hi, (w.size, nz))
    return ConsumptionPolicy(grid, np.cumsum(lam * dw[:, None], axis=0))


_SOLVED = {}


def solved(beta, R, gamma, delta, psi, w_max=1e4, Y=1.0):
    """Cached full solve on a log grid from 1e-3 to ``w_max`` with 1000 nodes."""
    key = (beta, R, gamma, delta, psi, w_max, Y)
    if key not in _SOLVED:
        prims = single(beta, R, Y)
        prefs = Preferences(gamma, delta, psi)
        grid = WealthGrid.log_spaced(1e-3, w_max, 1000)
        _SOLVED[key] = (prims, prefs) + solve(prims, prefs, grid, tol=1e-10, max_iter=2000)
    return _SOLVED[key]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
