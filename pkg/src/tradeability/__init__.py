"""Tradeability premiums and illiquidity factors in exponential Levy markets."""

__version__ = "0.1.0"

from .levy_core import (
    AdmissibilityError,
    AssetAggregates,
    Deterministic,
    EffectiveModel,
    Exponential,
    ProjectModel,
    esscher_shift,
    inverse_laplace_roots,
    laplace_y,
    laplace_y1,
    validate,
)
from .european import euro_price, euro_price_fourier, full_euro_price
from .american_pide import GridSpec, premium_det, solve_american
from .randomized import amer_randomized, euro_randomized, premium_stoch, solve_randomized
from .premium import illiquidity_factor_det, illiquidity_factor_stoch

__all__ = [
    "AdmissibilityError", "AssetAggregates", "Deterministic", "EffectiveModel", "Exponential",
    "ProjectModel", "esscher_shift", "inverse_laplace_roots", "laplace_y", "laplace_y1", "validate",
    "euro_price", "euro_price_fourier", "full_euro_price", "GridSpec", "premium_det",
    "solve_american", "amer_randomized", "euro_randomized", "premium_stoch", "solve_randomized",
    "illiquidity_factor_det", "illiquidity_factor_stoch",
]
