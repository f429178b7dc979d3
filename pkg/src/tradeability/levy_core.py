"""Model parameters, Laplace exponents and the Esscher reduction.

The project cash-flow follows ``C_t = C_0 exp(Y_t)`` with

    Y_t = (b - lam (e^phi - 1) - sigma^2 / 2) t + sigma W_t + phi N_t,

so that ``Phi_Y(1) = b``. The asset only enters through ``Phi_X(1)``,
``sigma_X`` and the Brownian correlation ``rho``. After the 1-Esscher change of
measure the project value ``E_t`` is again an exponential Levy process with
drift shifted by ``rho sigma_X sigma`` and is discounted at
``r_tilde = r - Phi_X(1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


class AdmissibilityError(ValueError):
    """Raised when parameters violate a condition required for finite values."""


class RootBracketError(RuntimeError):
    """Raised when a root of the Laplace exponent cannot be bracketed."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(f"{message} (bracket searched: {bracket})")
        self.bracket = bracket


@dataclass(frozen=True)
class ProjectModel:
    """Cash-flow jump-diffusion of the investment project.

    Attributes:
        b: growth rate per year, equal to ``Phi_Y(1)``.
        sigma: diffusion volatility, must be positive.
        phi: log jump size, must be non-positive.
        lambda_: jump intensity per year.
        e0: initial project value ``E_0``.
    """

    b: float
    sigma: float
    phi: float = 0.0
    lambda_: float = 0.0
    e0: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.phi > 0:
            raise ValueError(f"phi must be <= 0, got {self.phi}")
        if self.lambda_ < 0:
            raise ValueError(f"lambda_ must be >= 0, got {self.lambda_}")
        if not self.e0 > 0:
            raise ValueError(f"e0 must be > 0, got {self.e0}")

    def c0(self, r: float) -> float:
        """Initial cash-flow level implied by ``e0`` at rate ``r``."""
        if r <= self.b:
            raise AdmissibilityError(f"need r > b for a finite project value, got r={r}, b={self.b}")
        return self.e0 * (r - self.b)


@dataclass(frozen=True)
class AssetAggregates:
    """Everything the initial asset contributes to the premium."""

    phi_x1: float
    sigma_x: float
    rho: float
    r: float

    def __post_init__(self):
        if abs(self.rho) > 1:
            raise ValueError(f"|rho| must be <= 1, got {self.rho}")
        if self.sigma_x < 0:
            raise ValueError(f"sigma_x must be >= 0, got {self.sigma_x}")


@dataclass(frozen=True)
class EffectiveModel:
    """Dynamics of ``E`` under the Esscher-shifted measure.

    ``b_tilde`` is the growth rate of ``E`` (its Laplace exponent at 1) and
    ``r_tilde`` the effective discount rate.
    """

    b_tilde: float
    sigma: float
    phi: float
    lambda_: float
    r_tilde: float

    @property
    def drift(self) -> float:
        """Drift of ``log E`` between jumps."""
        return self.b_tilde - self.lambda_ * math.expm1(self.phi) - 0.5 * self.sigma**2

    @property
    def zero_premium(self) -> bool:
        """True when discounted ``E`` is a submartingale, so early exercise is worthless."""
        return self.r_tilde <= self.b_tilde

    @property
    def carry(self) -> float:
        """Decay rate ``r_tilde - b_tilde`` of the forward ``x exp(-carry t)``."""
        return self.r_tilde - self.b_tilde


@dataclass(frozen=True)
class Deterministic:
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon T must be > 0, got {self.T}")


@dataclass(frozen=True)
class Exponential:
    vartheta: float

    def __post_init__(self):
        if not self.vartheta > 0:
            raise ValueError(f"vartheta must be > 0, got {self.vartheta}")

    @property
    def mean(self) -> float:
        return 1.0 / self.vartheta


HorizonSpec = Union[Deterministic, Exponential]


def _laplace(theta, b, sigma, phi, lam):
    # Works for real or complex theta.
    drift = b - lam * math.expm1(phi) - 0.5 * sigma**2
    return drift * theta + 0.5 * sigma**2 * theta**2 + lam * (np.exp(phi * theta) - 1.0)


def laplace_y(theta, m: ProjectModel):
    """Laplace exponent ``log E[exp(theta Y_1)]`` of the project under Q."""
    return _laplace(theta, m.b, m.sigma, m.phi, m.lambda_)


def laplace_y1(theta, em: EffectiveModel):
    """Laplace exponent of ``Y`` under the Esscher-shifted measure."""
    return _laplace(theta, em.b_tilde, em.sigma, em.phi, em.lambda_)


def esscher_shift(m: ProjectModel, a: AssetAggregates) -> EffectiveModel:
    return EffectiveModel(
        b_tilde=m.b + a.rho * a.sigma_x * m.sigma,
        sigma=m.sigma,
        phi=m.phi,
        lambda_=m.lambda_,
        r_tilde=a.r - a.phi_x1,
    )


def _dlaplace_y1(theta: float, em: EffectiveModel) -> float:
    return em.drift + em.sigma**2 * theta + em.lambda_ * em.phi * math.exp(em.phi * theta)


def _find_root(y: float, em: EffectiveModel, sign: int) -> float:
    g = lambda th: laplace_y1(th, em) - y
    lo, hi = 0.0, float(sign)
    # g(0) = -y < 0; expand until g changes sign.
    while g(hi) <= 0:
        lo = hi
        hi *= 2.0
        if abs(hi) > 1e12:
            raise RootBracketError("no sign change of Phi(theta) - y", (0.0, hi))
    a, c = (lo, hi) if sign > 0 else (hi, lo)
    for _ in range(200):
        mid = 0.5 * (a + c)
        if g(mid) > 0:
            if sign > 0:
                c = mid
            else:
                a = mid
        else:
            if sign > 0:
                a = mid
            else:
                c = mid
        if c - a <= 1e-12 * max(1.0, abs(mid)):
            break
    root = 0.5 * (a + c)
    for _ in range(5):
        d = _dlaplace_y1(root, em)
        if d == 0:
            break
        step = g(root) / d
        cand = root - step
        if not (min(a, c) - 1e-9 <= cand <= max(a, c) + 1e-9):
            break
        root = cand
        if abs(step) <= 1e-16 * max(1.0, abs(root)):
            break
    return root


def inverse_laplace_roots(y: float, em: EffectiveModel) -> tuple[float, float]:
    """Negative and positive solutions of ``laplace_y1(theta) = y`` for ``y > 0``.

    The exponent is convex with value 0 at the origin, so each half-line holds
    exactly one root.
    """
    if not y > 0:
        raise ValueError(f"y must be > 0, got {y}")
    return _find_root(y, em, -1), _find_root(y, em, +1)


def project_value_from_cashflow(c0: float, r: float, b: float) -> float:
    if r <= b:
        raise AdmissibilityError(f"perpetuity diverges for r <= b (r={r}, b={b})")
    return c0 / (r - b)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    info: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def zero_premium(self) -> bool:
        return "zero-premium regime" in self.info


def validate(m: ProjectModel, a: AssetAggregates, h: HorizonSpec | None = None) -> ValidationReport:
    """Check admissibility conditions; report rather than raise."""
    rep = ValidationReport()
    if a.phi_x1 > a.r:
        rep.violations.append(f"Phi_X(1) <= r violated: Phi_X(1)={a.phi_x1} > r={a.r}")
    if m.b >= a.r:
        rep.violations.append(f"Phi_Y(1) < r violated: b={m.b} >= r={a.r}")
    em = esscher_shift(m, a)
    if isinstance(h, Exponential):
        if not h.vartheta + em.r_tilde - em.b_tilde > 0:
            rep.violations.append(
                "vartheta + r_tilde - Phi_Y1(1) > 0 violated: "
                f"{h.vartheta} + {em.r_tilde} - {em.b_tilde} <= 0"
            )
    if em.zero_premium:
        rep.info.append("zero-premium regime")
    return rep
