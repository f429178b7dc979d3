"""Monte Carlo cross-checks for the analytic and grid pricers.

Random numbers come from counter-based Philox generators. Every estimator uses
its own stream family and draws paths in fixed-size batches, batch ``k`` keyed
by ``(seed, stream, k)``, so results depend only on the configuration and not
on how batches are scheduled. Antithetic pairs share jump counts and flip the
Gaussian draws; standard errors are computed from pair means.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .levy_core import AssetAggregates, EffectiveModel, ProjectModel

BATCH = 1 << 14

_STREAM_SINGLE = 1
_STREAM_TWO_ASSET = 2
_STREAM_RANDOMIZED = 3
_STREAM_LS_FIT = 4
_STREAM_LS_PRICE = 5
_STREAM_MARTINGALE = 6


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    n_steps_per_year: int = 50
    seed: int = 20240611
    antithetic: bool = True

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.n_steps_per_year < 1:
            raise ValueError("n_steps_per_year must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _rng(cfg: SimConfig, stream: int, batch: int) -> np.random.Generator:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(stream, batch))
    return np.random.Generator(np.random.Philox(ss))


def _batches(cfg: SimConfig):
    """Sizes of successive batches; with antithetics each size counts pairs."""
    n = (cfg.n_paths + 1) // 2 if cfg.antithetic else cfg.n_paths
    k = 0
    while n > 0:
        m = min(BATCH, n)
        yield k, m
        n -= m
        k += 1


def _normals(rng, m, shape_tail=(), antithetic=True):
    z = rng.standard_normal((m,) + shape_tail)
    if antithetic:
        return np.concatenate([z, -z])
    return z


def _mean_se(samples: np.ndarray, antithetic: bool) -> tuple[float, float]:
    if antithetic:
        half = samples.shape[0] // 2
        samples = 0.5 * (samples[:half] + samples[half:])
    n = samples.shape[0]
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return mean, se


def _collect(cfg: SimConfig, stream: int, draw) -> tuple[float, float]:
    # ``draw(rng, m)`` returns 2m (antithetic) or m samples laid out as [z | -z]
    parts = [draw(_rng(cfg, stream, k), m) for k, m in _batches(cfg)]
    if cfg.antithetic:
        first = np.concatenate([p[: p.shape[0] // 2] for p in parts])
        second = np.concatenate([p[p.shape[0] // 2:] for p in parts])
        return _mean_se(np.concatenate([first, second]), True)
    return _mean_se(np.concatenate(parts), False)


def _terminal_log(rng, m, t, em: EffectiveModel, antithetic: bool):
    """Exact sample of ``log(E_t / E_0)`` under the shifted measure; ``t`` may be an array."""
    t = np.broadcast_to(np.asarray(t, float), (m,))
    n_jump = rng.poisson(em.lambda_ * t) if em.lambda_ > 0 else np.zeros(m)
    z = _normals(rng, m, antithetic=antithetic)
    reps = 2 if antithetic else 1
    t2 = np.tile(t, reps)
    return em.drift * t2 + em.sigma * np.sqrt(t2) * z + em.phi * np.tile(n_jump, reps), t2


def mc_single_asset_euro(T: float, e0: float, em: EffectiveModel,
                         cfg: SimConfig = SimConfig()) -> tuple[float, float]:
    """``E[e^{-r_tilde T} (E_T - 1)^+]`` by exact terminal sampling."""
    if T < 0 or e0 < 0:
        raise ValueError("need T >= 0 and e0 >= 0")
    if T == 0 or e0 == 0:
        return max(e0 - 1.0, 0.0), 0.0

    def draw(rng, m):
        ly, _ = _terminal_log(rng, m, T, em, cfg.antithetic)
        return math.exp(-em.r_tilde * T) * np.maximum(e0 * np.exp(ly) - 1.0, 0.0)

    return _collect(cfg, _STREAM_SINGLE, draw)


def mc_two_asset_euro(T: float, s0: float, e0: float, m: ProjectModel, a: AssetAggregates,
                      cfg: SimConfig = SimConfig()) -> tuple[float, float]:
    """Unscaled exchange value ``E^Q[e^{-rT} S_T (E_T - 1)^+]`` under the original measure.

    The asset is simulated as a geometric Brownian motion with drift
    ``Phi_X(1)`` and volatility ``sigma_X``; its own jumps would only enter the
    price through ``Phi_X(1)``.
    """
    if T < 0 or e0 < 0 or s0 < 0:
        raise ValueError("need T, s0, e0 >= 0")
    if e0 == 0 or s0 == 0:
        return 0.0, 0.0
    if T == 0:
        return s0 * max(e0 - 1.0, 0.0), 0.0
    rho, sx = a.rho, a.sigma_x
    drift_y = m.b - m.lambda_ * math.expm1(m.phi) - 0.5 * m.sigma**2

    def draw(rng, k):
        n_jump = rng.poisson(m.lambda_ * T, k) if m.lambda_ > 0 else np.zeros(k)
        z = _normals(rng, k, (2,), cfg.antithetic)
        if cfg.antithetic:
            n_jump = np.tile(n_jump, 2)
        wx = math.sqrt(T) * z[:, 0]
        wy = math.sqrt(T) * (rho * z[:, 0] + math.sqrt(max(0.0, 1.0 - rho * rho)) * z[:, 1])
        s_t = s0 * np.exp((a.phi_x1 - 0.5 * sx * sx) * T + sx * wx)
        e_t = e0 * np.exp(drift_y * T + m.sigma * wy + m.phi * n_jump)
        return math.exp(-a.r * T) * s_t * np.maximum(e_t - 1.0, 0.0)

    return _collect(cfg, _STREAM_TWO_ASSET, draw)


def mc_randomized_euro(vartheta: float, e0: float, em: EffectiveModel,
                       cfg: SimConfig = SimConfig()) -> tuple[float, float]:
    """Scaled European value with an exponential horizon ``T_R ~ Exp(vartheta)``.

    When ``vartheta + r_tilde - b_tilde <= 0`` the estimator has infinite mean;
    a warning is issued and the (meaningless) sample statistics returned.
    """
    if not vartheta > 0:
        raise ValueError("vartheta must be > 0")
    if not vartheta + em.carry > 0:
        warnings.warn("randomized value may be infinite; estimator variance is unbounded",
                      RuntimeWarning, stacklevel=2)
    if e0 == 0:
        return 0.0, 0.0

    def draw(rng, m):
        t = rng.exponential(1.0 / vartheta, m)
        ly, t2 = _terminal_log(rng, m, t, em, cfg.antithetic)
        return np.exp(-em.r_tilde * t2) * np.maximum(e0 * np.exp(ly) - 1.0, 0.0)

    return _collect(cfg, _STREAM_RANDOMIZED, draw)


def mc_martingale_check(T: float, em: EffectiveModel, cfg: SimConfig = SimConfig()):
    """Sample mean of ``e^{-b_tilde T} E_T / E_0``; should be 1 within noise."""

    def draw(rng, m):
        ly, _ = _terminal_log(rng, m, T, em, cfg.antithetic)
        return np.exp(-em.b_tilde * T + ly)

    return _collect(cfg, _STREAM_MARTINGALE, draw)


# ---------------------------------------------------------------- Longstaff-Schwartz

def _paths(cfg: SimConfig, stream: int, n_steps: int, dt: float, e0: float, em: EffectiveModel):
    out = []
    for k, m in _batches(cfg):
        rng = _rng(cfg, stream, k)
        n_jump = rng.poisson(em.lambda_ * dt, (m, n_steps)) if em.lambda_ > 0 else np.zeros((m, n_steps))
        z = rng.standard_normal((m, n_steps))
        if cfg.antithetic:
            z = np.concatenate([z, -z])
            n_jump = np.concatenate([n_jump, n_jump])
        inc = em.drift * dt + em.sigma * math.sqrt(dt) * z + em.phi * n_jump
        lx = np.cumsum(inc, axis=1)
        out.append(e0 * np.exp(lx))
    if cfg.antithetic:
        first = np.concatenate([p[: p.shape[0] // 2] for p in out])
        second = np.concatenate([p[p.shape[0] // 2:] for p in out])
        return np.concatenate([first, second])
    return np.concatenate(out)


def _basis(x: np.ndarray, degree: int) -> np.ndarray:
    return np.vander(x, degree + 1, increasing=True)


def _fit(x, y, degree):
    while degree >= 1:
        A = _basis(x, degree)
        coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        if rank == degree + 1:
            return coef
        warnings.warn(f"regression rank {rank} < {degree + 1}; lowering basis degree",
                      RuntimeWarning, stacklevel=3)
        degree -= 1
    return np.array([float(np.mean(y))]) if len(y) else np.zeros(1)


def mc_american_ls(T: float, e0: float, em: EffectiveModel, cfg: SimConfig = SimConfig(),
                   basis_degree: int = 3) -> tuple[float, float]:
    """Bermudan lower bound for ``C_A*`` on the simulation grid.

    Exercise rules are regressed on one path set (polynomials in ``E`` over
    in-the-money paths) and then applied to an independent set, so the
    estimate is biased low up to Monte Carlo noise.
    """
    if basis_degree < 2:
        raise ValueError("basis_degree must be >= 2")
    if T == 0:
        return max(e0 - 1.0, 0.0), 0.0
    n_steps = max(1, int(math.ceil(cfg.n_steps_per_year * T)))
    dt = T / n_steps
    disc = math.exp(-em.r_tilde * dt)

    # backward induction on the fitting set
    x = _paths(cfg, _STREAM_LS_FIT, n_steps, dt, e0, em)
    cash = np.maximum(x[:, -1] - 1.0, 0.0)
    coefs = [None] * n_steps
    for k in range(n_steps - 2, -1, -1):
        cash *= disc
        xk = x[:, k]
        itm = xk > 1.0
        if itm.sum() > basis_degree + 1:
            c = _fit(xk[itm], cash[itm], basis_degree)
            coefs[k] = c
            cont = _basis(xk[itm], len(c) - 1) @ c
            ex = (xk[itm] - 1.0) >= cont
            idx = np.nonzero(itm)[0][ex]
            cash[idx] = xk[idx] - 1.0
    del x

    # forward pass on fresh paths
    x = _paths(cfg, _STREAM_LS_PRICE, n_steps, dt, e0, em)
    n = x.shape[0]
    value = np.zeros(n)
    alive = np.ones(n, bool)
    for k in range(n_steps - 1):
        c = coefs[k]
        if c is None:
            continue
        xk = x[:, k]
        cand = alive & (xk > 1.0)
        if not cand.any():
            continue
        cont = _basis(xk[cand], len(c) - 1) @ c
        ex = (xk[cand] - 1.0) >= cont
        idx = np.nonzero(cand)[0][ex]
        value[idx] = math.exp(-em.r_tilde * (k + 1) * dt) * (xk[idx] - 1.0)
        alive[idx] = False
    value[alive] = math.exp(-em.r_tilde * T) * np.maximum(x[alive, -1] - 1.0, 0.0)
    mean, se = _mean_se(value, cfg.antithetic)
    if e0 - 1.0 > mean:
        return e0 - 1.0, 0.0
    return mean, se


# ---------------------------------------------------------------- oracle suite

@dataclass(frozen=True)
class CheckResult:
    name: str
    estimate: float
    std_error: float
    reference: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: mc={self.estimate:.6f} se={self.std_error:.6f} "
                f"ref={self.reference:.6f} |diff|={abs(self.estimate - self.reference):.6f} "
                f"tol={self.tolerance:.6f}")


def _check(name, est, se, ref, tol) -> CheckResult:
    return CheckResult(name, est, se, ref, tol, bool(abs(est - ref) <= tol))


# (b, rho, sigma_x, phi, lambda, horizon, e0)
TWO_ASSET_SCENARIOS = [
    (-0.04, -0.5, 0.4, math.log(0.7), 0.5, 1.5, 1.1),
    (0.0, 0.5, 0.2, math.log(0.85), 0.5, 0.5, 0.9),
]
LS_SCENARIOS = [
    (-0.04, -0.5, 0.2, 0.0, 0.0, 0.5, 0.9),
    (-0.04, -0.5, 0.2, 0.0, 0.0, 1.5, 1.1),
    (-0.04, 0.0, 0.4, math.log(0.85), 0.5, 0.5, 1.2),
    (-0.04, -0.5, 0.4, math.log(0.7), 0.5, 1.5, 1.1),
    (0.0, -0.5, 0.4, 0.0, 0.0, 1.5, 1.2),
    (0.0, 0.5, 0.2, math.log(0.85), 0.5, 0.5, 1.0),  # zero-premium regime
]
RANDOMIZED_SCENARIOS = [
    (0.0, -0.5, 0.2, 0.0, 0.0, 0.5, 0.9),
    (-0.04, -0.5, 0.4, 0.0, 0.0, 5.0, 1.2),
    (-0.04, 0.0, 0.2, math.log(0.85), 0.5, 1.5, 1.0),
    (0.0, 0.0, 0.4, math.log(0.7), 0.5, 2.5, 1.1),
]


def _models(sc, r=0.0225, phi_x1=0.005, sigma=0.2):
    b, rho, sx, phi, lam, _, e0 = sc
    return ProjectModel(b, sigma, phi, lam, e0), AssetAggregates(phi_x1, sx, rho, r)


def oracle_suite(cfg: SimConfig = SimConfig(), ls_cfg: SimConfig | None = None) -> list[CheckResult]:
    """Monte Carlo against the analytic, series and grid pricers.

    European legs must agree within 3 standard errors; Longstaff-Schwartz values
    within ``max(3 SE, 1%)`` of the grid American price.
    """
    from .american_pide import solve_american
    from .european import euro_price
    from .levy_core import esscher_shift
    from .randomized import euro_randomized

    ls_cfg = ls_cfg or SimConfig(n_paths=cfg.n_paths, n_steps_per_year=100, seed=cfg.seed,
                                 antithetic=cfg.antithetic)
    out = []
    s0 = 2.0
    for sc in TWO_ASSET_SCENARIOS:
        m, a = _models(sc)
        em = esscher_shift(m, a)
        T, e0 = sc[5], sc[6]
        est, se = mc_two_asset_euro(T, s0, e0, m, a, cfg)
        out.append(_check(f"two-asset euro {sc}", est, se, s0 * euro_price(T, e0, em).price, 3 * se))
        est, se = mc_single_asset_euro(T, e0, em, cfg)
        out.append(_check(f"single-asset euro {sc}", est, se, euro_price(T, e0, em).price, 3 * se))
        est, se = mc_martingale_check(T, em, cfg)
        out.append(_check(f"martingale {sc}", est, se, 1.0, 3 * se))
    for sc in LS_SCENARIOS:
        m, a = _models(sc)
        em = esscher_shift(m, a)
        T, e0 = sc[5], sc[6]
        ref = solve_american(T, em).american_price(e0)
        est, se = mc_american_ls(T, e0, em, ls_cfg)
        out.append(_check(f"longstaff-schwartz {sc}", est, se, ref, max(3 * se, 0.01 * ref)))
    for sc in RANDOMIZED_SCENARIOS:
        m, a = _models(sc)
        em = esscher_shift(m, a)
        th, e0 = 1.0 / sc[5], sc[6]
        est, se = mc_randomized_euro(th, e0, em, cfg)
        out.append(_check(f"randomized euro {sc}", est, se, euro_randomized(e0, th, em)[0], 3 * se))
    return out
