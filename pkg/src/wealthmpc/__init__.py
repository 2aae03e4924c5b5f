"""Consumption-savings with utility over wealth: solver and asymptotic MPCs."""

from wealthmpc.asymptotics import (
    AsymptoticReport,
    Regime,
    apply_F,
    apply_G,
    classify,
    fixed_point_F,
    fixed_point_G,
    measured_slope,
)
from wealthmpc.model import (
    AssumptionReport,
    Preferences,
    ShockGrid,
    StochasticPrimitives,
    load_model,
    validate_assumptions,
)
from wealthmpc.spectral import build_K, is_irreducible, spectral_radius
from wealthmpc.time_iteration import (
    ConsumptionPolicy,
    WealthGrid,
    apply_T,
    rho_distance,
    simulate_paths,
    solve,
)
from wealthmpc.two_period import TwoPeriodSpec, cbar1, cbar2, solve_two_period, verify_proposition1

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "AsymptoticReport",
    "ConsumptionPolicy",
    "Preferences",
    "Regime",
    "ShockGrid",
    "StochasticPrimitives",
    "TwoPeriodSpec",
    "WealthGrid",
    "apply_F",
    "apply_G",
    "apply_T",
    "build_K",
    "cbar1",
    "cbar2",
    "classify",
    "fixed_point_F",
    "fixed_point_G",
    "is_irreducible",
    "load_model",
    "measured_slope",
    "rho_distance",
    "simulate_paths",
    "solve",
    "solve_two_period",
    "spectral_radius",
    "validate_assumptions",
    "verify_proposition1",
]
