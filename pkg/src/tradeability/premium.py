"""Premiums, illiquidity factors, factor tables and figure sweeps.

The illiquidity factor is ``C_E / C_A``, the value of the illiquid claim as a
fraction of its tradeable twin. All quantities are in scaled form (``S_t = 1``)
and evaluated at ``x = E_0``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Literal, Sequence

import numpy as np

from .american_pide import GridSpec, solve_american
from .european import euro_price
from .levy_core import (
    AdmissibilityError,
    AssetAggregates,
    Deterministic,
    Exponential,
    ProjectModel,
    esscher_shift,
    validate,
)
from .randomized import amer_randomized, euro_randomized, solve_randomized

log = logging.getLogger(__name__)

HorizonKind = Literal["det", "exp"]


class FactorError(ArithmeticError):
    """The European value vanishes, so the factor is undefined."""


@dataclass(frozen=True)
class ValuationResult:
    euro: float
    amer: float
    premium: float
    rel_premium: float
    factor: float
    zero_premium: bool
    diagnostics: dict = field(default_factory=dict)


def _result(ce: float, prem: float, zero: bool, diag: dict) -> ValuationResult:
    ce, prem = float(ce), float(prem)
    if not ce > 0:
        raise FactorError(f"European value is {ce:.3e}; the factor C_E/C_A is undefined")
    if zero:
        return ValuationResult(ce, ce, 0.0, 0.0, 1.0, True, diag)
    return ValuationResult(ce, ce + prem, prem, prem / ce, ce / (ce + prem), False, diag)


def _checked(m: ProjectModel, a: AssetAggregates, h=None):
    rep = validate(m, a, h)
    if not rep.ok:
        raise AdmissibilityError("; ".join(rep.violations))
    return esscher_shift(m, a)


def value_det(T: float, e0: float, m: ProjectModel, a: AssetAggregates,
              g: GridSpec | None = None) -> ValuationResult:
    """Deterministic-horizon valuation at ``x = e0``."""
    em = _checked(m, a, Deterministic(T))
    ce = euro_price(T, e0, em).price
    if em.zero_premium:
        return _result(ce, 0.0, True, {"regime": "ZeroPremium"})
    sol = solve_american(T, em, g)
    prem = sol.premium(e0)
    g = sol.grid
    b_T = float(sol.boundary.boundary[-1])
    diag = {"regime": "Standard", "boundary": b_T, "n_space": g.n_space,
            "n_time": len(sol.tau) - 1, "x_max": float(sol.x[-1]), "scheme": g.scheme}
    return _result(ce, prem, False, diag)


def value_stoch(vartheta: float, e0: float, m: ProjectModel, a: AssetAggregates) -> ValuationResult:
    """Exponential-horizon valuation at ``x = e0``."""
    em = _checked(m, a, Exponential(vartheta))
    sol = solve_randomized(vartheta, em)
    ce, _ = euro_randomized(e0, vartheta, em, sol.quad)
    diag = {"regime": sol.regime.value, "b_R": sol.b_R, "gamma_plus": sol.gamma_plus,
            "c1_plus": sol.c1_plus}
    if em.zero_premium:
        return _result(ce, 0.0, True, diag)
    return _result(ce, amer_randomized(e0, sol) - ce, False, diag)


def illiquidity_factor_det(T: float, e0: float, m: ProjectModel, a: AssetAggregates,
                           g: GridSpec | None = None) -> float:
    if _checked(m, a, Deterministic(T)).zero_premium:
        return 1.0
    return value_det(T, e0, m, a, g).factor


def illiquidity_factor_stoch(vartheta: float, e0: float, m: ProjectModel, a: AssetAggregates) -> float:
    # the regime test is analytic, so the horizon quadrature is only built when needed
    if _checked(m, a, Exponential(vartheta)).zero_premium:
        return 1.0
    return value_stoch(vartheta, e0, m, a).factor


# ---------------------------------------------------------------- scenario data

def load_scenarios() -> dict:
    """Baked parameter sets for the reference tables and figures."""
    text = resources.files("tradeability").joinpath("data/scenarios.json").read_text()
    return json.loads(text, parse_constant=None)


def _num(v) -> float:
    # data files write log jump sizes as "log(0.85)"
    if isinstance(v, str) and v.startswith("log(") and v.endswith(")"):
        return math.log(float(v[4:-1]))
    return float(v)


@dataclass(frozen=True)
class JumpCase:
    label: str
    phi: float
    lambda_: float


@dataclass(frozen=True)
class ScenarioGrid:
    horizons: tuple  # T values, or mean horizons 1/vartheta for the exponential case
    e0_list: tuple
    rho_list: tuple
    sigma_x_list: tuple
    jump_cases: tuple
    b: float
    sigma: float = 0.2
    r: float = 0.0225
    phi_x1: float = 0.005

    def __post_init__(self):
        for name in ("horizons", "e0_list", "rho_list", "sigma_x_list", "jump_cases"):
            if not len(getattr(self, name)):
                raise ValueError(f"{name} must be non-empty")

    def models(self, sigma_x: float, rho: float, jc: JumpCase, e0: float = 1.0):
        return (ProjectModel(self.b, self.sigma, jc.phi, jc.lambda_, e0),
                AssetAggregates(self.phi_x1, sigma_x, rho, self.r))

    def validate(self, kind: HorizonKind) -> list[str]:
        bad = []
        for sx in self.sigma_x_list:
            for rho in self.rho_list:
                for jc in self.jump_cases:
                    for h in self.horizons:
                        m, a = self.models(sx, rho, jc)
                        spec = Deterministic(h) if kind == "det" else Exponential(1.0 / h)
                        rep = validate(m, a, spec)
                        bad += [f"sigma_x={sx} rho={rho} {jc.label} h={h}: {v}" for v in rep.violations]
        return bad


def reference_grid(which: str) -> tuple[ScenarioGrid, HorizonKind]:
    """Grid and horizon kind for one of ``det-b0``, ``det-bneg``, ``exp-b0``, ``exp-bneg``."""
    p = load_scenarios()
    if which not in p["tables"]:
        raise KeyError(f"unknown table {which!r}; choose from {sorted(p['tables'])}")
    t = p["tables"][which]
    jcs = tuple(JumpCase(j["label"], _num(j["phi"]), float(j["lambda"])) for j in p["jump_cases"])
    grid = ScenarioGrid(tuple(p["horizons"]), tuple(p["e0"]), tuple(p["rho"]), tuple(p["sigma_x"]),
                        jcs, t["b"], p["sigma"], p["r"], p["phi_x1"])
    return grid, t["kind"]


# ---------------------------------------------------------------- tables

@dataclass
class FactorTable:
    """Rows keyed by ``(sigma_x, horizon, e0)``, columns by ``(jump label, rho)``."""

    kind: HorizonKind
    rows: list
    columns: list
    values: np.ndarray
    zero_premium: np.ndarray
    errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def horizon_header(self) -> str:
        return "T" if self.kind == "det" else "mean_horizon"

    def column_names(self) -> list[str]:
        return [f"{lab}@{rho:+.1f}" for lab, rho in self.columns]

    def to_csv(self, decimals: int = 3) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block", "sigma_x", self.horizon_header, "e0"] + self.column_names())
        blocks = _block_labels(self.rows)
        for (sx, h, e0), blk, vals in zip(self.rows, blocks, self.values):
            w.writerow([blk, repr(float(sx)), repr(float(h)), repr(float(e0))]
                       + ["nan" if np.isnan(v) else f"{v:.{decimals}f}" for v in vals])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "rows": [list(map(float, r)) for r in self.rows],
            "columns": [[lab, float(rho)] for lab, rho in self.columns],
            "values": [[None if np.isnan(v) else float(v) for v in row] for row in self.values],
            "zero_premium": self.zero_premium.tolist(),
            "errors": {f"{i},{j}": msg for (i, j), msg in self.errors.items()},
            "meta": self.meta,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FactorTable":
        d = json.loads(text)
        vals = np.array([[np.nan if v is None else v for v in row] for row in d["values"]], float)
        errs = {tuple(int(k) for k in key.split(",")): msg for key, msg in d["errors"].items()}
        return cls(d["kind"], [tuple(r) for r in d["rows"]], [tuple(c) for c in d["columns"]],
                   vals, np.array(d["zero_premium"], bool), errs, d.get("meta", {}))

    def cell(self, sigma_x: float, horizon: float, e0: float, label: str, rho: float) -> float:
        i = self.rows.index((sigma_x, horizon, e0))
        j = self.columns.index((label, rho))
        return float(self.values[i, j])


def _block_labels(rows) -> list[str]:
    sxs = sorted({r[0] for r in rows})
    hs = sorted({r[1] for r in rows})
    return [f"{sxs.index(sx) + 1}.{hs.index(h) + 1}" for sx, h, _ in rows]


def read_reference_csv(text: str) -> FactorTable:
    """Parse a table in the CSV layout written by ``FactorTable.to_csv``."""
    rdr = csv.reader(io.StringIO(text))
    header = next(rdr)
    kind = "det" if header[2] == "T" else "exp"
    cols = []
    for name in header[4:]:
        lab, rho = name.rsplit("@", 1)
        cols.append((lab, float(rho)))
    rows, vals = [], []
    for rec in rdr:
        if not rec:
            continue
        rows.append((float(rec[1]), float(rec[2]), float(rec[3])))
        vals.append([float(v) for v in rec[4:]])
    v = np.array(vals, float)
    return FactorTable(kind, rows, cols, v, np.zeros(v.shape, bool))


def reference_table(which: str) -> FactorTable:
    name = "reference_" + which.replace("-", "_") + ".csv"
    return read_reference_csv(resources.files("tradeability").joinpath("data/" + name).read_text())


def _column_task(args):
    """All ``e0`` rows of one (sigma_x, horizon, jump, rho) column slice.

    One solve serves every ``e0``; results are identical to per-cell solves
    because each solve is deterministic and independent of the others.
    """
    grid, kind, sx, h, jc, rho, g = args
    m, a = grid.models(sx, rho, jc)
    out = []
    try:
        em = esscher_shift(m, a)
        if kind == "det":
            rep = validate(m, a, Deterministic(h))
            if not rep.ok:
                raise AdmissibilityError("; ".join(rep.violations))
            if em.zero_premium:
                return [(1.0, True, None) for _ in grid.e0_list]
            sol = solve_american(h, em, g)
            for e0 in grid.e0_list:
                try:
                    r = _result(euro_price(h, e0, em).price, sol.premium(e0), False, {})
                    out.append((r.factor, False, None))
                except Exception as exc:  # recorded in-table
                    out.append((math.nan, False, f"{type(exc).__name__}: {exc}"))
        else:
            th = 1.0 / h
            rep = validate(m, a, Exponential(th))
            if not rep.ok:
                raise AdmissibilityError("; ".join(rep.violations))
            if em.zero_premium:
                return [(1.0, True, None) for _ in grid.e0_list]
            sol = solve_randomized(th, em)
            for e0 in grid.e0_list:
                try:
                    ce, _ = euro_randomized(e0, th, em, sol.quad)
                    r = _result(ce, amer_randomized(e0, sol) - ce, em.zero_premium, {})
                    out.append((r.factor, r.zero_premium, None))
                except Exception as exc:
                    out.append((math.nan, False, f"{type(exc).__name__}: {exc}"))
    except Exception as exc:
        msg = f"{type(exc).__name__}: {exc}"
        out = [(math.nan, False, msg) for _ in grid.e0_list]
    return out


def generate_table(grid: ScenarioGrid, kind: HorizonKind, g: GridSpec | None = None,
                   jobs: int = 1) -> FactorTable:
    """Evaluate every cell; failures become NaN with the message in ``errors``."""
    if kind not in ("det", "exp"):
        raise ValueError(f"kind must be 'det' or 'exp', got {kind!r}")
    rows = [(sx, h, e0) for sx in grid.sigma_x_list for h in grid.horizons for e0 in grid.e0_list]
    cols = [(jc.label, rho) for jc in grid.jump_cases for rho in grid.rho_list]
    tasks, where = [], []
    for si, sx in enumerate(grid.sigma_x_list):
        for hi, h in enumerate(grid.horizons):
            for ji, jc in enumerate(grid.jump_cases):
                for ri, rho in enumerate(grid.rho_list):
                    tasks.append((grid, kind, sx, h, jc, rho, g))
                    where.append(((si * len(grid.horizons) + hi) * len(grid.e0_list),
                                  ji * len(grid.rho_list) + ri))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_column_task, tasks))
    else:
        results = [_column_task(t) for t in tasks]
    vals = np.full((len(rows), len(cols)), np.nan)
    zero = np.zeros(vals.shape, bool)
    errors = {}
    for (i0, j), res in zip(where, results):
        for k, (f, z, err) in enumerate(res):
            vals[i0 + k, j] = f
            zero[i0 + k, j] = z
            if err is not None:
                errors[(i0 + k, j)] = err
                log.warning("cell %s / %s failed: %s", rows[i0 + k], cols[j], err)
    meta = {"b": grid.b, "sigma": grid.sigma, "r": grid.r, "phi_x1": grid.phi_x1,
            "grid": asdict(g or GridSpec()) if kind == "det" else None}
    return FactorTable(kind, rows, cols, vals, zero, errors, meta)


def compare_tables(ours: FactorTable, ref: FactorTable) -> dict:
    """Per-cell deviations ``ours - ref`` over the cells both tables contain."""
    dev = []
    for i, rk in enumerate(ours.rows):
        if rk not in ref.rows:
            continue
        ri = ref.rows.index(rk)
        for j, ck in enumerate(ours.columns):
            if ck not in ref.columns:
                continue
            rj = ref.columns.index(ck)
            dev.append({"sigma_x": rk[0], "horizon": rk[1], "e0": rk[2], "jump": ck[0], "rho": ck[1],
                        "ours": float(ours.values[i, j]), "reference": float(ref.values[ri, rj]),
                        "delta": float(ours.values[i, j] - ref.values[ri, rj])})
    finite = [abs(d["delta"]) for d in dev if not math.isnan(d["delta"])]
    return {"cells": dev, "max_abs_delta": max(finite) if finite else math.nan,
            "n_nan": sum(math.isnan(d["delta"]) for d in dev)}


# ---------------------------------------------------------------- figures

SweepParam = Literal["horizon", "jump_size", "correlation"]


@dataclass(frozen=True)
class BaseScenario:
    r: float = 0.0225
    phi_x1: float = 0.005
    sigma_x: float = 0.2
    rho: float = -0.5
    b: float = -0.04
    sigma: float = 0.2
    phi: float = math.log(0.85)
    lambda_: float = 0.5
    e0: float = 1.0
    horizon: float = 0.5  # T, and 1/vartheta for the exponential horizon

    @classmethod
    def from_data(cls, high_intensity: bool = False) -> "BaseScenario":
        p = load_scenarios()
        d = dict(p["figure_base"])
        if high_intensity:
            d.update(p["figure_base_high_intensity"])
        return cls(r=d["r"], phi_x1=d["phi_x1"], sigma_x=d["sigma_x"], rho=d["rho"], b=d["b"],
                   sigma=d["sigma"], phi=_num(d["phi"]), lambda_=d["lambda"], e0=d["e0"],
                   horizon=d["horizon"])

    def models(self):
        return (ProjectModel(self.b, self.sigma, self.phi, self.lambda_, self.e0),
                AssetAggregates(self.phi_x1, self.sigma_x, self.rho, self.r))


_SWEEP_FIELD = {"horizon": "horizon", "jump_size": "phi", "correlation": "rho"}


def figure_series(param: SweepParam, values: Sequence[float], base: BaseScenario | None = None,
                  g: GridSpec | None = None) -> list[dict]:
    """Deterministic and exponential-horizon factors along one parameter sweep.

    Invalid sweep points are skipped; they appear in the output with a
    ``skipped`` message and NaN factors, and a warning is emitted.
    """
    if param not in _SWEEP_FIELD:
        raise ValueError(f"unknown sweep parameter {param!r}")
    if len(values) == 0:
        raise ValueError("empty sweep range")
    base = base or BaseScenario()
    out = []
    for v in values:
        sc = _replace(base, **{_SWEEP_FIELD[param]: float(v)})
        rec = {"param": param, "value": float(v), "det": math.nan, "stoch": math.nan, "skipped": ""}
        try:
            m, a = sc.models()
            rec["det"] = illiquidity_factor_det(sc.horizon, sc.e0, m, a, g)
            rec["stoch"] = illiquidity_factor_stoch(1.0 / sc.horizon, sc.e0, m, a)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            rec["skipped"] = f"{type(exc).__name__}: {exc}"
            warnings.warn(f"sweep point {param}={v} skipped: {exc}", RuntimeWarning, stacklevel=2)
        out.append(rec)
    return out


def _replace(sc: BaseScenario, **kw) -> BaseScenario:
    d = asdict(sc)
    d.update(kw)
    return BaseScenario(**d)


def zero_premium_rho(b: float, sigma: float, sigma_x: float, r: float, phi_x1: float) -> float:
    """Correlation above which the premium vanishes: ``r - phi_x1 = b + rho sigma_x sigma``."""
    if sigma_x == 0:
        return math.inf if r - phi_x1 > b else -math.inf
    return (r - phi_x1 - b) / (sigma_x * sigma)
