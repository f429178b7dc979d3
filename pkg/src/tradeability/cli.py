"""Command-line front end.

    tradeability price euro --T 0.5 --e0 1.2
    tradeability price amer --horizon exp --vartheta 2
    tradeability table det-b0 --compare-baked
    tradeability figure --param correlation --range -0.9 0.9 19
    tradeability verify --paths 100000

Invalid input exits with status 2 and a JSON error object on stderr; a failed
``verify`` exits with status 1. Set ``TRADEABILITY_LOG`` to a logging level
name to see progress messages.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
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
from .mc_oracle import SimConfig, oracle_suite
from .premium import (
    BaseScenario,
    FactorTable,
    compare_tables,
    figure_series,
    generate_table,
    reference_grid,
    read_reference_csv,
    reference_table,
    value_det,
    value_stoch,
)
from .randomized import amer_randomized, euro_randomized, solve_randomized

log = logging.getLogger("tradeability")

TABLES = ("det-b0", "det-bneg", "exp-b0", "exp-bneg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Scenario parameters; defaults are the figure base scenario."""

    b: float = -0.04
    sigma: float = 0.2
    phi: float = math.log(0.85)
    lambda_: float = 0.5
    e0: float = 1.0
    r: float = 0.0225
    phi_x1: float = 0.005
    sigma_x: float = 0.2
    rho: float = -0.5
    T: float = 0.5
    vartheta: float | None = None
    s0: float = 1.0
    n_space: int = 800
    n_time: int | None = None
    scheme: str = "imex-cn"
    format: str = "json"
    out: str | None = None

    @classmethod
    def from_mapping(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        alias = {"lambda": "lambda_", "sigma-x": "sigma_x", "phi-x1": "phi_x1"}
        clean = {}
        for k, v in d.items():
            k = alias.get(k, k)
            if k not in names:
                raise UsageError(f"unknown config key {k!r}")
            clean[k] = v
        return cls(**clean)

    def models(self):
        return (ProjectModel(self.b, self.sigma, self.phi, self.lambda_, self.e0),
                AssetAggregates(self.phi_x1, self.sigma_x, self.rho, self.r))

    @property
    def theta(self) -> float:
        return self.vartheta if self.vartheta is not None else 1.0 / self.T

    def grid(self) -> GridSpec:
        return GridSpec(n_space=self.n_space, n_time=self.n_time, scheme=self.scheme)


_SCENARIO_FLAGS = [
    ("--b", "b", float), ("--sigma", "sigma", float), ("--phi", "phi", float),
    ("--lambda", "lambda_", float), ("--e0", "e0", float), ("--r", "r", float),
    ("--phi-x1", "phi_x1", float), ("--sigma-x", "sigma_x", float), ("--rho", "rho", float),
    ("--T", "T", float), ("--vartheta", "vartheta", float), ("--s0", "s0", float),
    ("--n-space", "n_space", int), ("--n-time", "n_time", int),
]


def _add_common(p: argparse.ArgumentParser, scenario: bool = True):
    p.add_argument("--config", help="JSON file with scenario keys")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    if scenario:
        for flag, dest, typ in _SCENARIO_FLAGS:
            p.add_argument(flag, dest=dest, type=typ, default=None)
        p.add_argument("--scheme", choices=("imex-cn", "implicit-psor"), default=None)


def _config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise UsageError("config must be a JSON object")
    cfg = RunConfig.from_mapping(base)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return None if math.isnan(v) else (v if math.isinf(v) else round(float(v), 6))
    if isinstance(v, dict):
        return {k: _fmt(x) for k, x in v.items()}
    return v


def _records(recs: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([_fmt(r) for r in recs], indent=2) + "\n"
    buf = io.StringIO()
    keys = list(recs[0].keys()) if recs else []
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in recs:
        w.writerow({k: (f"{v:.6f}" if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def _check_valid(cfg: RunConfig, horizon: str):
    m, a = cfg.models()
    h = Deterministic(cfg.T) if horizon == "det" else Exponential(cfg.theta)
    rep = validate(m, a, h)
    if not rep.ok:
        raise AdmissibilityError("; ".join(rep.violations))
    return m, a, esscher_shift(m, a), rep


# ---------------------------------------------------------------- commands

def cmd_price(args) -> int:
    cfg = _config(args)
    m, a, em, rep = _check_valid(cfg, args.horizon)
    rec = {"style": args.style, "horizon": args.horizon, "e0": cfg.e0, "s0": cfg.s0}
    if args.horizon == "det":
        rec["T"] = cfg.T
        q = euro_price(cfg.T, cfg.e0, em)
        if args.style == "euro":
            rec.update(scaled=q.price, full=cfg.s0 * q.price, delta=q.delta, n_terms=q.n_terms)
        else:
            if em.zero_premium:
                price, diag = q.price, {"regime": "ZeroPremium", "boundary": math.inf}
            else:
                sol = solve_american(cfg.T, em, cfg.grid())
                price = sol.american_price(cfg.e0)
                diag = {"regime": "Standard", "boundary": float(sol.boundary.boundary[-1]),
                        "up_connected": sol.boundary.up_connected, "n_space": sol.grid.n_space,
                        "n_time": len(sol.tau) - 1, "x_max": float(sol.x[-1])}
            rec.update(scaled=price, full=cfg.s0 * price, euro=q.price, **diag)
    else:
        rec["vartheta"] = cfg.theta
        sol = solve_randomized(cfg.theta, em)
        ce, de = euro_randomized(cfg.e0, cfg.theta, em, sol.quad)
        if args.style == "euro":
            rec.update(scaled=ce, full=cfg.s0 * ce, delta=de)
        else:
            ca = amer_randomized(cfg.e0, sol)
            rec.update(scaled=ca, full=cfg.s0 * ca, euro=ce, regime=sol.regime.value,
                       b_R=sol.b_R, gamma_plus=sol.gamma_plus, c1_plus=sol.c1_plus)
    rec["zero_premium"] = rep.zero_premium
    _emit(_records([rec], cfg.format), cfg.out)
    return 0


def cmd_premium(args) -> int:
    cfg = _config(args)
    m, a, em, _ = _check_valid(cfg, args.horizon)
    if args.horizon == "det":
        res = value_det(cfg.T, cfg.e0, m, a, cfg.grid())
        rec = {"horizon": "det", "T": cfg.T}
    else:
        res = value_stoch(cfg.theta, cfg.e0, m, a)
        rec = {"horizon": "exp", "vartheta": cfg.theta}
    rec.update(e0=cfg.e0, euro=res.euro, amer=res.amer, premium=res.premium,
               rel_premium=res.rel_premium, factor=res.factor, zero_premium=res.zero_premium)
    rec.update({k: v for k, v in res.diagnostics.items()})
    _emit(_records([rec], cfg.format), cfg.out)
    return 0


def cmd_boundary(args) -> int:
    cfg = _config(args)
    _, _, em, _ = _check_valid(cfg, "det")
    sol = solve_american(cfg.T, em, cfg.grid())
    recs = [{"tau": float(t), "boundary": float(b)} for t, b in zip(sol.tau, sol.boundary.boundary)]
    fmt = cfg.format if args.format else "csv"
    _emit(_records(recs, fmt), cfg.out)
    if not sol.boundary.up_connected:
        log.warning("stopping set is not up-connected on the grid")
    return 0


def cmd_surface(args) -> int:
    cfg = _config(args)
    _, _, em, _ = _check_valid(cfg, "det")
    sol = solve_american(cfg.T, em, cfg.grid())
    step = max(1, len(sol.x) // max(1, args.points))
    recs = []
    for k, t in enumerate(sol.tau):
        for i in range(0, len(sol.x), step):
            recs.append({"tau": float(t), "x": float(sol.x[i]), "amer": float(sol.value_surface[k, i]),
                         "euro": float(sol.euro_surface[k, i]),
                         "premium": float(sol.premium_surface[k, i])})
    fmt = cfg.format if args.format else "csv"
    _emit(_records(recs, fmt), cfg.out)
    return 0


def cmd_table(args) -> int:
    if args.which not in TABLES:
        raise UsageError(f"unknown table {args.which!r}; choose from {', '.join(TABLES)}")
    grid, kind = reference_grid(args.which)
    g = GridSpec(n_space=args.n_space) if args.n_space else None
    tab = generate_table(grid, kind, g=g, jobs=max(1, args.jobs))
    for (i, j), msg in sorted(tab.errors.items()):
        log.error("cell %s %s: %s", tab.rows[i], tab.columns[j], msg)
    fmt = args.format or "csv"
    body = tab.to_csv(decimals=3) if fmt == "csv" else tab.to_json()
    _emit(body, args.out)
    ref = None
    if args.compare:
        try:
            with open(args.compare, encoding="utf-8") as fh:
                ref = read_reference_csv(fh.read())
        except (OSError, ValueError, StopIteration) as exc:
            raise UsageError(f"cannot read reference table {args.compare}: {exc}") from exc
    elif args.compare_baked:
        ref = reference_table(args.which)
    if ref is not None:
        cmp = compare_tables(tab, ref)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sigma_x", "horizon", "e0", "jump", "rho", "ours", "reference", "delta"])
        for c in cmp["cells"]:
            w.writerow([c["sigma_x"], c["horizon"], c["e0"], c["jump"], f"{c['rho']:+.1f}",
                        f"{c['ours']:.3f}", f"{c['reference']:.3f}", f"{c['delta']:+.3f}"])
        w.writerow(["max_abs_delta", "", "", "", "", "", "", f"{cmp['max_abs_delta']:.3f}"])
        sys.stderr.write(buf.getvalue())
    return 0


def _sweep_values(args) -> list[float]:
    if args.values is not None:
        try:
            vals = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --values: {exc}") from exc
    elif args.range is not None:
        lo, hi, n = args.range
        n = int(n)
        vals = list(np.linspace(lo, hi, n)) if n > 0 else []
    else:
        vals = {"horizon": [0.25, 0.5, 1, 1.5, 2, 2.5, 3, 4, 5],
                "jump_size": list(np.log([0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99])),
                "correlation": list(np.linspace(-0.9, 0.9, 13))}[args.param]
    if not vals:
        raise UsageError("empty sweep range")
    return [float(v) for v in vals]


def cmd_figure(args) -> int:
    base = BaseScenario.from_data(high_intensity=args.intensity == "high")
    over = {k: getattr(args, d) for k, d in (("b", "b"), ("rho", "rho"), ("sigma_x", "sigma_x"),
                                               ("e0", "e0"), ("phi", "phi"), ("lambda_", "lambda_"))
            if getattr(args, d, None) is not None}
    if args.T is not None:
        over["horizon"] = args.T
    if over:
        d = asdict(base)
        d.update(over)
        base = BaseScenario(**d)
    recs = figure_series(args.param, _sweep_values(args), base)
    fmt = args.format or "csv"
    _emit(_records(recs, fmt), args.out)
    return 0


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else SimConfig().seed
    cfg = SimConfig(n_paths=args.paths, seed=seed)
    results = oracle_suite(cfg)
    lines = [r.line() for r in results]
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tradeability", description="Tradeability premiums and illiquidity factors.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("price", help="scaled and full European/American prices")
    sp.add_argument("style", choices=("euro", "amer"))
    sp.add_argument("--horizon", choices=("det", "exp"), default="det")
    _add_common(sp)
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("premium", help="premium, relative premium and illiquidity factor")
    sp.add_argument("--horizon", choices=("det", "exp"), default="det")
    _add_common(sp)
    sp.set_defaults(func=cmd_premium)

    sp = sub.add_parser("boundary", help="exercise boundary per time level (CSV)")
    _add_common(sp)
    sp.set_defaults(func=cmd_boundary)

    sp = sub.add_parser("surface", help="American, European and premium surfaces (CSV)")
    sp.add_argument("--points", type=int, default=100, help="approximate nodes per level")
    _add_common(sp)
    sp.set_defaults(func=cmd_surface)

    sp = sub.add_parser("table", help="reproduce a reference factor table")
    sp.add_argument("which")
    sp.add_argument("--compare", help="reference CSV; per-cell deviations go to stderr")
    sp.add_argument("--compare-baked", action="store_true", help="compare with the shipped reference")
    sp.add_argument("--n-space", type=int, default=None)
    _add_common(sp, scenario=False)
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("figure", help="deterministic and exponential-horizon factor sweeps")
    sp.add_argument("--param", choices=("horizon", "jump_size", "correlation"), required=True)
    sp.add_argument("--values", help="comma separated sweep values")
    sp.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "N"))
    sp.add_argument("--intensity", choices=("base", "high"), default="base",
                    help="high: jump intensity 1.0 and horizon 1.5")
    _add_common(sp)
    sp.set_defaults(func=cmd_figure)

    sp = sub.add_parser("verify", help="Monte Carlo oracle checks")
    sp.add_argument("--paths", type=int, default=100_000)
    _add_common(sp, scenario=False)
    sp.set_defaults(func=cmd_verify)
    return p


def _setup_logging():
    level = os.environ.get("TRADEABILITY_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ValueError, ArithmeticError, KeyError, TypeError) as exc:
        kind = "AdmissibilityError" if isinstance(exc, AdmissibilityError) else type(exc).__name__
        sys.stderr.write(json.dumps({"error": kind, "message": str(exc).strip("'\"")}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
