import math

import numpy as np
import pytest
from scipy.stats import norm

from tradeability.american_pide import solve_american
from tradeability.european import euro_price
from tradeability.levy_core import AssetAggregates, EffectiveModel, ProjectModel, esscher_shift
from tradeability.mc_oracle import (
    CheckResult,
    SimConfig,
    mc_american_ls,
    mc_martingale_check,
    mc_randomized_euro,
    mc_single_asset_euro,
    mc_two_asset_euro,
)
from tradeability.randomized import euro_randomized

from conftest import JUMPS, make_em

CFG = SimConfig(n_paths=100_000)


def test_config_validation():
    for kw in (dict(n_paths=0), dict(n_steps_per_year=0), dict(seed=-1)):
        with pytest.raises(ValueError):
            SimConfig(**kw)


def test_seed_determinism():
    em = make_em(jump="log(0.7)")
    cfg = SimConfig(n_paths=40_000, seed=7)
    assert mc_single_asset_euro(1.0, 1.1, em, cfg) == mc_single_asset_euro(1.0, 1.1, em, cfg)
    assert mc_randomized_euro(1.0, 1.1, em, cfg) == mc_randomized_euro(1.0, 1.1, em, cfg)
    assert mc_single_asset_euro(1.0, 1.1, em, cfg) != mc_single_asset_euro(1.0, 1.1, em, SimConfig(n_paths=40_000, seed=8))


def test_trivial_cases():
    m, a = ProjectModel(-0.04, 0.2), AssetAggregates(0.005, 0.2, -0.5, 0.0225)
    em = esscher_shift(m, a)
    assert mc_two_asset_euro(1.0, 2.0, 0.0, m, a, CFG) == (0.0, 0.0)
    assert mc_two_asset_euro(0.0, 2.0, 1.3, m, a, CFG) == (pytest.approx(0.6), 0.0)
    assert mc_single_asset_euro(0.0, 1.3, em, CFG) == (pytest.approx(0.3), 0.0)
    assert mc_american_ls(0.0, 1.3, em, CFG) == (pytest.approx(0.3), 0.0)
    assert mc_randomized_euro(1.0, 0.0, em, CFG) == (0.0, 0.0)


def test_no_jump_matches_black_scholes():
    em = EffectiveModel(-0.06, 0.2, 0.0, 0.0, 0.0175)
    T, x = 1.5, 1.1
    fwd = x * math.exp(em.b_tilde * T)
    s = em.sigma * math.sqrt(T)
    d1 = (math.log(fwd) + 0.5 * s * s) / s
    bs = math.exp(-em.r_tilde * T) * (fwd * norm.cdf(d1) - norm.cdf(d1 - s))
    est, se = mc_single_asset_euro(T, x, em, CFG)
    assert abs(est - bs) <= 3 * se


@pytest.mark.parametrize("jump", ["none", "log(0.85)", "log(0.7)"])
def test_two_asset_matches_scaled_price(jump):
    phi, lam = JUMPS[jump]
    m = ProjectModel(-0.04, 0.2, phi, lam)
    a = AssetAggregates(0.005, 0.3, -0.5, 0.0225)
    est, se = mc_two_asset_euro(2.5, 1.7, 1.05, m, a, CFG)
    assert abs(est - 1.7 * euro_price(2.5, 1.05, esscher_shift(m, a)).price) <= 3 * se


def test_antithetic_reduces_error():
    em = make_em(jump="log(0.85)")
    _, se_a = mc_single_asset_euro(1.0, 1.3, em, SimConfig(n_paths=50_000))
    _, se_p = mc_single_asset_euro(1.0, 1.3, em, SimConfig(n_paths=50_000, antithetic=False))
    assert se_a < se_p


def test_martingale():
    em = make_em(jump="log(0.7)")
    est, se = mc_martingale_check(2.0, em, CFG)
    assert abs(est - 1.0) <= 3 * se


def test_randomized_matches_quadrature():
    em = make_em(jump="log(0.7)")
    est, se = mc_randomized_euro(0.7, 1.05, em, CFG)
    assert abs(est - euro_randomized(1.05, 0.7, em)[0]) <= 3 * se
    est, _ = mc_randomized_euro(1e4, 1.2, em, SimConfig(n_paths=20_000))
    assert est == pytest.approx(0.2, abs=1e-3)


def test_randomized_warns_without_condinf():
    em = make_em(b=0.0, rho=0.5, sigma_x=0.4)
    with pytest.warns(RuntimeWarning, match="infinite"):
        mc_randomized_euro(0.01, 1.0, em, SimConfig(n_paths=1000))


def test_ls_is_a_lower_bound_and_close():
    em = make_em(b=-0.04, rho=-0.5, sigma_x=0.2)
    cfg = SimConfig(n_paths=100_000, n_steps_per_year=100)
    est, se = mc_american_ls(0.5, 0.9, em, cfg)
    sol = solve_american(0.5, em)
    ref = sol.american_price(0.9)
    assert est <= ref + 3 * se
    ce = euro_price(0.5, 0.9, em).price
    assert ce / est == pytest.approx(ce / ref, abs=0.01)


def test_ls_zero_premium_is_european():
    em = make_em(b=0.0, rho=0.5, jump="log(0.85)")
    est, se = mc_american_ls(0.5, 1.0, em, SimConfig(n_paths=100_000))
    assert abs(est - euro_price(0.5, 1.0, em).price) <= 3 * se


def test_ls_rejects_small_basis():
    with pytest.raises(ValueError):
        mc_american_ls(1.0, 1.0, make_em(), CFG, basis_degree=1)


def test_check_line_format():
    line = CheckResult("x", 1.0, 0.1, 1.05, 0.3, True).line()
    assert line.startswith("PASS x: mc=1.000000")
