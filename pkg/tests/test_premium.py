import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tradeability.american_pide import GridSpec
from tradeability.levy_core import AdmissibilityError, AssetAggregates, ProjectModel
from tradeability.premium import (
    BaseScenario,
    FactorError,
    FactorTable,
    JumpCase,
    ScenarioGrid,
    compare_tables,
    figure_series,
    generate_table,
    illiquidity_factor_det,
    illiquidity_factor_stoch,
    load_scenarios,
    reference_grid,
    read_reference_csv,
    reference_table,
    value_det,
    value_stoch,
    zero_premium_rho,
)

from conftest import det_table

A = lambda sx, rho: AssetAggregates(0.005, sx, rho, 0.0225)
NOJUMP = JumpCase("none", 0.0, 0.0)
J85 = JumpCase("log(0.85)", math.log(0.85), 0.5)


def test_zero_premium_factor_is_one():
    m = ProjectModel(0.0, 0.2, math.log(0.7), 0.5)
    r = value_det(2.5, 1.1, m, A(0.2, 0.5))
    assert r.factor == 1.0 and r.zero_premium and r.premium == 0.0
    assert illiquidity_factor_stoch(0.4, 1.1, m, A(0.4, 0.5)) == 1.0


def test_reference_det_examples():
    m = ProjectModel(0.0, 0.2)
    assert illiquidity_factor_det(0.5, 0.9, m, A(0.2, -0.5)) == pytest.approx(0.986, abs=0.005)
    assert illiquidity_factor_det(5.0, 1.2, m, A(0.4, -0.5)) == pytest.approx(0.683, abs=0.005)


def test_reference_stoch_examples():
    assert illiquidity_factor_stoch(2.0, 0.9, ProjectModel(0.0, 0.2), A(0.2, -0.5)) == pytest.approx(0.986, abs=0.005)
    assert illiquidity_factor_stoch(0.2, 1.2, ProjectModel(-0.04, 0.2), A(0.4, -0.5)) == pytest.approx(0.473, abs=0.005)
    m = ProjectModel(-0.04, 0.2)
    for e0 in (0.9, 1.0):
        assert illiquidity_factor_stoch(2.0, e0, m, A(0.2, -0.5)) == pytest.approx(0.933, abs=0.005)


def test_valuation_consistency():
    m = ProjectModel(-0.04, 0.2, math.log(0.85), 0.5)
    for r in (value_det(1.5, 1.1, m, A(0.2, -0.5)), value_stoch(1.0, 1.1, m, A(0.2, -0.5))):
        assert r.amer == pytest.approx(r.euro + r.premium, abs=1e-15)
        assert r.rel_premium == pytest.approx(r.premium / r.euro)
        assert r.factor == pytest.approx(1.0 / (1.0 + r.rel_premium), abs=1e-15)
        assert 0 < r.factor < 1


def test_factor_error_when_euro_vanishes():
    with pytest.raises(FactorError):
        value_det(0.01, 1e-3, ProjectModel(-0.04, 0.2), A(0.2, -0.5))


def test_inadmissible_inputs_raise():
    with pytest.raises(AdmissibilityError):
        value_det(1.0, 1.0, ProjectModel(0.03, 0.2), A(0.2, 0.0))
    with pytest.raises(AdmissibilityError):
        value_stoch(0.01, 1.0, ProjectModel(0.0, 0.2), A(0.4, 0.5))


@settings(max_examples=15)
@given(st.floats(0.2, 4.0), st.floats(0.7, 1.5), st.sampled_from([-0.5, 0.0, 0.5]),
       st.sampled_from([0.0, -0.04]), st.sampled_from([0.2, 0.4]))
def test_factor_in_unit_interval(T, e0, rho, b, sx):
    m = ProjectModel(b, 0.2, math.log(0.85), 0.5)
    f = illiquidity_factor_det(T, e0, m, A(sx, rho), GridSpec(n_space=301))
    assert 0.0 < f <= 1.0 + 1e-9


@settings(max_examples=15)
@given(st.floats(0.2, 4.0), st.floats(0.7, 1.5), st.sampled_from([-0.5, 0.0, 0.5]),
       st.sampled_from([0.0, -0.04]))
def test_stoch_factor_in_unit_interval(vartheta, e0, rho, b):
    f = illiquidity_factor_stoch(vartheta, e0, ProjectModel(b, 0.2), A(0.2, rho))
    assert 0.0 < f <= 1.0 + 1e-9


@pytest.mark.parametrize("which", ["det-b0", "det-bneg"])
def test_det_table_monotonicity(which):
    tab, _ = det_table(which)
    assert not tab.errors
    v = tab.values.reshape(2, 4, 4, 3, 3)  # sigma_x, T, e0, jump, rho (0.5, 0, -0.5)
    assert np.all((v > 0) & (v <= 1 + 1e-9))
    assert np.diff(v, axis=1).max() <= 1e-9  # non-increasing in T
    assert np.diff(v, axis=2).max() <= 1e-9  # non-increasing in E0
    assert np.diff(v, axis=4).max() <= 1e-9  # non-decreasing in rho
    assert np.array_equal(v[0, ..., 1], v[1, ..., 1])  # rho=0: sigma_x plays no role
    assert np.all(tab.values[tab.zero_premium] == 1.0)


@given(st.floats(0.05, 0.8), st.floats(0.05, 0.8), st.floats(0.3, 3.0))
def test_sigma_x_irrelevant_when_uncorrelated(sx1, sx2, vartheta):
    m = ProjectModel(-0.04, 0.2)
    assert illiquidity_factor_stoch(vartheta, 1.1, m, A(sx1, 0.0)) == illiquidity_factor_stoch(vartheta, 1.1, m, A(sx2, 0.0))


def _small_grid(**kw):
    d = dict(horizons=(0.5, 1.5), e0_list=(0.9, 1.2), rho_list=(0.5, -0.5), sigma_x_list=(0.2,),
             jump_cases=(NOJUMP, J85), b=0.0)
    d.update(kw)
    return ScenarioGrid(**d)


def test_one_by_one_grid_equals_scalar():
    g = GridSpec(n_space=401)
    grid = _small_grid(horizons=(1.5,), e0_list=(1.1,), rho_list=(-0.5,), jump_cases=(J85,))
    m = ProjectModel(0.0, 0.2, J85.phi, J85.lambda_)
    assert generate_table(grid, "det", g).values[0, 0] == illiquidity_factor_det(1.5, 1.1, m, A(0.2, -0.5), g)
    assert generate_table(grid, "exp").values[0, 0] == illiquidity_factor_stoch(1 / 1.5, 1.1, m, A(0.2, -0.5))


@pytest.mark.parametrize("kind", ["det", "exp"])
def test_iteration_order_is_irrelevant(kind):
    g = GridSpec(n_space=301)
    a = generate_table(_small_grid(), kind, g)
    b = generate_table(_small_grid(horizons=(1.5, 0.5), e0_list=(1.2, 0.9), rho_list=(-0.5, 0.5),
                                   jump_cases=(J85, NOJUMP)), kind, g)
    for sx, h, e0 in a.rows:
        for lab, rho in a.columns:
            assert a.cell(sx, h, e0, lab, rho) == b.cell(sx, h, e0, lab, rho)
    assert np.all(a.values[a.zero_premium] == 1.0)
    assert a.zero_premium[:, [0, 2]].all() and not a.zero_premium[:, [1, 3]].any()


def test_parallel_matches_serial():
    g = GridSpec(n_space=301)
    a = generate_table(_small_grid(), "det", g)
    b = generate_table(_small_grid(), "det", g, jobs=2)
    assert np.array_equal(a.values, b.values)


def test_cell_errors_are_recorded():
    bad = _small_grid(b=0.03)  # b >= r - phi_x1: project value undefined
    tab = generate_table(bad, "det", GridSpec(n_space=101))
    assert np.isnan(tab.values).all()
    assert len(tab.errors) == tab.values.size
    assert "AdmissibilityError" in next(iter(tab.errors.values()))


def test_table_round_trips():
    tab = generate_table(_small_grid(), "exp")
    back = FactorTable.from_json(tab.to_json())
    assert np.array_equal(back.values, tab.values)
    assert back.rows == tab.rows and back.columns == tab.columns
    assert np.array_equal(back.zero_premium, tab.zero_premium)
    csv_back = read_reference_csv(tab.to_csv(decimals=17))
    assert np.array_equal(csv_back.values, tab.values)
    assert read_reference_csv(tab.to_csv()).values == pytest.approx(np.round(tab.values, 3), abs=0)
    assert tab.to_csv().splitlines()[0] == (
        "block,sigma_x,mean_horizon,e0,none@+0.5,none@-0.5,log(0.85)@+0.5,log(0.85)@-0.5")


def test_compare_tables_against_itself_and_reference():
    ref = reference_table("det-b0")
    assert ref.values.shape == (32, 9)
    assert ref.cell(0.2, 0.5, 0.9, "none", -0.5) == 0.986
    same = compare_tables(ref, ref)
    assert same["max_abs_delta"] == 0.0 and same["n_nan"] == 0 and len(same["cells"]) == 288


def test_scenario_data():
    p = load_scenarios()
    for which in ("det-b0", "det-bneg", "exp-b0", "exp-bneg"):
        grid, kind = reference_grid(which)
        assert kind == which[:3]
        assert grid.validate(kind) == []
        assert reference_table(which).rows == [(sx, h, e0) for sx in grid.sigma_x_list
                                               for h in grid.horizons for e0 in grid.e0_list]
    assert p["r"] == 0.0225
    with pytest.raises(KeyError):
        reference_grid("det-b1")
    with pytest.raises(ValueError):
        ScenarioGrid((), (1.0,), (0.0,), (0.2,), (NOJUMP,), 0.0)


def test_zero_premium_rho():
    rho_star = zero_premium_rho(-0.04, 0.2, 0.2, 0.0225, 0.005)
    assert rho_star == pytest.approx(1.4375)
    assert zero_premium_rho(0.0, 0.2, 0.2, 0.0225, 0.005) == pytest.approx(0.4375)


def test_correlation_sweep_pins_at_threshold():
    base = BaseScenario(b=0.0)
    rho_star = zero_premium_rho(base.b, base.sigma, base.sigma_x, base.r, base.phi_x1)
    rhos = [-0.5, 0.0, 0.4, rho_star + 1e-9, 0.6, 0.9]
    rec = figure_series("correlation", rhos, base, GridSpec(n_space=301))
    for r in rec:
        if r["value"] >= rho_star:
            assert r["det"] == 1.0 and r["stoch"] == 1.0
        elif r["value"] <= 0.0:
            # the premium fades continuously, so only well below the threshold is it visible
            assert r["det"] < 1.0 and r["stoch"] < 1.0
    for key in ("det", "stoch"):
        f = [r[key] for r in rec]
        assert f == sorted(f)
        assert all(type(v) is float for v in f)


def test_horizon_sweep_is_non_increasing():
    rec = figure_series("horizon", [0.25, 0.5, 1.0, 2.0, 4.0], BaseScenario(), GridSpec(n_space=401))
    det = [r["det"] for r in rec]
    assert all(b <= a + 1e-9 for a, b in zip(det, det[1:]))


def test_single_point_sweep_matches_scalar_ops():
    base = BaseScenario()
    (rec,) = figure_series("jump_size", [math.log(0.7)], base)
    m = ProjectModel(base.b, base.sigma, math.log(0.7), base.lambda_)
    a = A(base.sigma_x, base.rho)
    assert rec["det"] == illiquidity_factor_det(base.horizon, base.e0, m, a)
    assert rec["stoch"] == illiquidity_factor_stoch(1 / base.horizon, base.e0, m, a)


def test_sweep_skips_invalid_points():
    with pytest.warns(RuntimeWarning, match="skipped"):
        rec = figure_series("jump_size", [0.2, math.log(0.85)], BaseScenario(), GridSpec(n_space=201))
    assert rec[0]["skipped"] and math.isnan(rec[0]["det"])
    assert not rec[1]["skipped"]
    with pytest.raises(ValueError):
        figure_series("jump_size", [], BaseScenario())
    with pytest.raises(ValueError):
        figure_series("volatility", [0.1], BaseScenario())


def test_base_scenarios_from_data():
    lo, hi = BaseScenario.from_data(), BaseScenario.from_data(high_intensity=True)
    assert lo == BaseScenario()
    assert (hi.lambda_, hi.horizon) == (1.0, 1.5)
