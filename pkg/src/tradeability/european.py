"""Scaled European switching option ``C_E*(tau, x)``.

Two independent routes are provided: a Poisson-conditioned lognormal mixture
(the jump component is a single atom, so conditioning on the jump count gives
Black-Scholes terms) and a Fourier inversion of the modified call price.
The strike is fixed at 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate
from scipy.special import gammaln, ndtr

from .levy_core import EffectiveModel

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class EuroQuote:
    price: float
    delta: float
    method: Literal["series", "fourier"]
    n_terms: int = 0


def poisson_window(lam_t: float, rel_tol: float = 1e-16) -> np.ndarray:
    """Jump counts whose Poisson weights matter at ``rel_tol``.

    Terms are bounded by the zero-jump payoff bound (phi <= 0 only shrinks the
    forward), so weights below ``rel_tol`` of the largest are dropped.
    """
    if lam_t <= 0:
        return np.zeros(1, dtype=int)
    width = 12.0 * math.sqrt(lam_t) + 40.0
    lo = max(0, int(lam_t - width))
    hi = int(lam_t + width) + 1
    n = np.arange(lo, hi)
    logw = n * math.log(lam_t) - lam_t - gammaln(n + 1)
    keep = logw >= logw.max() + math.log(rel_tol)
    return n[keep]


def series_terms(tau, x: float, em: EffectiveModel, order: int = 1):
    """Vectorised mixture price and x-derivatives for an array of maturities.

    Returns ``(price, delta, gamma)`` arrays (``gamma`` only when ``order >= 2``).
    ``tau`` must be strictly positive.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    lam = em.lambda_
    sig = em.sigma
    price = np.zeros_like(tau)
    delta = np.zeros_like(tau)
    gamma = np.zeros_like(tau) if order >= 2 else None
    if x <= 0:
        return price, delta, gamma
    lx = math.log(x)
    # Group maturities to share one Poisson window per unique lam*tau scale.
    lam_max = lam * float(tau.max())
    n = poisson_window(lam_max) if lam > 0 else np.zeros(1, dtype=int)
    if lam > 0:
        n = np.arange(0, int(n.max()) + 1)
    t = tau[:, None]
    nn = n[None, :]
    if lam > 0:
        logw = nn * np.log(lam * t) - lam * t - gammaln(nn + 1)
        w = np.exp(logw)
    else:
        w = np.ones((tau.size, 1))
    s = sig * np.sqrt(t)
    # log forward of E_T given n jumps
    log_f = lx + em.drift * t + nn * em.phi + 0.5 * sig**2 * t
    d1 = (log_f + 0.5 * s**2) / s
    d2 = d1 - s
    disc = np.exp(-em.r_tilde * t)
    fwd = np.exp(log_f)
    nd1 = ndtr(d1)
    price = (disc[:, 0] * np.sum(w * (fwd * nd1 - ndtr(d2)), axis=1))
    a = fwd / x
    delta = disc[:, 0] * np.sum(w * a * nd1, axis=1)
    if order >= 2:
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * d1**2)
        gamma = disc[:, 0] * np.sum(w * a * pdf / (x * s), axis=1)
    return price, delta, gamma


def euro_price(tau: float, x: float, em: EffectiveModel) -> EuroQuote:
    """Scaled European price and delta via the Poisson-conditioned mixture."""
    if tau < 0 or x < 0:
        raise ValueError(f"need tau >= 0 and x >= 0, got tau={tau}, x={x}")
    if x == 0:
        return EuroQuote(0.0, 0.0, "series")
    if tau == 0:
        return EuroQuote(max(x - 1.0, 0.0), 1.0 if x > 1 else (0.5 if x == 1 else 0.0), "series")
    p, d, _ = series_terms(tau, x, em)
    n_terms = len(poisson_window(em.lambda_ * tau)) if em.lambda_ > 0 else 1
    return EuroQuote(float(p[0]), float(d[0]), "series", n_terms)


def full_euro_price(tau: float, s: float, x: float, em: EffectiveModel) -> float:
    """Unscaled European switching value ``S_t * C_E*(tau, E_t)``."""
    if s < 0:
        raise ValueError("asset value must be non-negative")
    if s == 0:
        return 0.0
    return s * euro_price(tau, x, em).price


def modified_call_transform(v, tau: float, em: EffectiveModel):
    """Fourier transform of the discounted modified call price at real ``v``."""
    u = 2.0 + 1j * v
    drift = em.drift
    psi = drift * u + 0.5 * em.sigma**2 * u**2 + em.lambda_ * (np.exp(em.phi * u) - 1.0)
    return np.exp(-em.r_tilde * tau + tau * psi) / ((1j * v + 1.0) * (1j * v + 2.0))


def euro_price_fourier(tau: float, x: float, em: EffectiveModel) -> EuroQuote:
    """Scaled European price by direct quadrature of the inverse transform.

    With ``k = -log x`` the modified call price is
    ``c(k) = (1/pi) int_0^inf Re[exp(-i v k) F(v)] dv`` and the option value is
    ``x**2 c(k)``.
    """
    if not (tau > 0 and x > 0):
        raise ValueError(f"need tau > 0 and x > 0, got tau={tau}, x={x}")
    k = -math.log(x)
    # Gaussian envelope exp(-sigma^2 tau v^2 / 2) is below e^-45 beyond v_max.
    v_max = math.sqrt(90.0 / (em.sigma**2 * tau))

    def f_c(v):
        return (np.exp(-1j * v * k) * modified_call_transform(v, tau, em)).real

    def f_dc(v):
        return (-1j * v * np.exp(-1j * v * k) * modified_call_transform(v, tau, em)).real

    out = []
    for f in (f_c, f_dc):
        val, err, info = _quad(f, v_max)
        out.append(val / math.pi)
    c, dc = out
    price = x * x * c
    # dk/dx = -1/x
    delta = 2.0 * x * c - x * dc
    return EuroQuote(float(price), float(delta), "fourier")


def _quad(f, v_max):
    res = integrate.quad(f, 0.0, v_max, epsabs=1e-14, epsrel=1e-11, limit=2000, full_output=1)
    val, err = res[0], res[1]
    # roundoff warnings are tolerated as long as the error estimate is small
    if len(res) >= 4 and "roundoff" not in res[3]:
        raise QuadratureError(f"quadrature did not converge on [0, {v_max}]: {res[3]}")
    if err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature error {err:.3e} too large on [0, {v_max}]")
    return val, err, None
