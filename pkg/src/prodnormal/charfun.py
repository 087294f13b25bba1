"""Characteristic functions of the product and its sums/divisors.

With (X, Y) bivariate normal, the product Z = XY has characteristic
function

    phi(t) = ([1 - (1+rho) i t][1 + (1-rho) i t])^(-1/2)
             * exp( (-(m1^2+m2^2-2 rho m1 m2) t^2 + 2 m1 m2 i t)
                    / (2 [1 - (1+rho) i t][1 + (1-rho) i t]) )

in standardized units (unit variances, means m1 = mu_x/sigma_x,
m2 = mu_y/sigma_y; general scales enter only through t -> sigma_x sigma_y t
because Z has the same law as sigma_x sigma_y times a standardized
product).  Raising phi to a real power nu > 0 gives the characteristic
function of the order-nu convolution: integer nu = n is the sum of n
independent copies, nu = 1/m is the divisor law whose m-fold convolution
recovers Z.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "BivariateParams",
    "OrderSpec",
    "cf_order",
    "cf_order_grid",
    "cf_order_derivative",
    "partial_fraction_terms",
]


@dataclass(frozen=True)
class BivariateParams:
    """Parameters (mu_x, mu_y, sigma_x, sigma_y, rho) of the normal pair."""

    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    rho: float

    def __post_init__(self) -> None:
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise DomainError("standard deviations must be positive")
        if not -1.0 < self.rho < 1.0:
            raise DomainError(
                "need -1 < rho < 1; at rho = +-1 the product degenerates to a "
                "shifted non-central chi-square variable, which is out of scope")
        for name in ("mu_x", "mu_y", "sigma_x", "sigma_y", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def m1(self) -> float:
        """Standardized mean of X."""
        return self.mu_x / self.sigma_x

    @property
    def m2(self) -> float:
        """Standardized mean of Y."""
        return self.mu_y / self.sigma_y

    @property
    def scale(self) -> float:
        """sigma_x * sigma_y, the natural scale of the product."""
        return self.sigma_x * self.sigma_y

    def reflected(self) -> "BivariateParams":
        """Parameters of (X', Y') with Z = XY equal in law to -X'Y'."""
        return BivariateParams(self.mu_x, -self.mu_y, self.sigma_x,
                               self.sigma_y, -self.rho)


@dataclass(frozen=True)
class OrderSpec:
    """Convolution order nu > 0 (nu = n copies; nu = 1/m divisor order)."""

    nu: float

    def __post_init__(self) -> None:
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise DomainError("order nu must be positive and finite")

    @classmethod
    def copies(cls, n: int) -> "OrderSpec":
        return cls(float(n))

    @classmethod
    def divisor(cls, m: int) -> "OrderSpec":
        return cls(1.0 / m)


def _cf_std(m1: float, m2: float, rho: float, nu: float, t: complex) -> complex:
    w1 = 1.0 - (1.0 + rho) * 1j * t
    w2 = 1.0 + (1.0 - rho) * 1j * t
    # per-factor principal logs: each factor has real part 1, so the log is
    # continuous in t, unlike the log of the product
    power = -0.5 * nu * (cmath.log(w1) + cmath.log(w2))
    m_sq = m1 * m1 + m2 * m2 - 2.0 * rho * m1 * m2
    expo = nu * (-m_sq * t * t + 2.0 * m1 * m2 * 1j * t) / (2.0 * w1 * w2)
    return cmath.exp(power + expo)


def cf_order(params: BivariateParams, order: OrderSpec, t: float) -> complex:
    """Characteristic function of the order-nu convolution at t."""
    if not math.isfinite(t):
        raise DomainError("t must be finite")
    return _cf_std(params.m1, params.m2, params.rho, order.nu,
                   params.scale * t)


def cf_order_grid(params: BivariateParams, order: OrderSpec,
                  t: np.ndarray) -> np.ndarray:
    """Vectorized :func:`cf_order` over an array of t values."""
    ts = params.scale * np.asarray(t, dtype=float)
    m1, m2, rho, nu = params.m1, params.m2, params.rho, order.nu
    w1 = 1.0 - (1.0 + rho) * 1j * ts
    w2 = 1.0 + (1.0 - rho) * 1j * ts
    power = -0.5 * nu * (np.log(w1) + np.log(w2))
    m_sq = m1 * m1 + m2 * m2 - 2.0 * rho * m1 * m2
    expo = nu * (-m_sq * ts * ts + 2.0 * m1 * m2 * 1j * ts) / (2.0 * w1 * w2)
    return np.exp(power + expo)


def cf_order_derivative(params: BivariateParams, order: OrderSpec,
                        t: np.ndarray) -> np.ndarray:
    """d/dt of the characteristic function (analytic, vectorized).

    Used by the inversion oracle for integration-by-parts tail corrections.
    """
    s = params.scale
    ts = s * np.asarray(t, dtype=float)
    m1, m2, rho, nu = params.m1, params.m2, params.rho, order.nu
    w1 = 1.0 - (1.0 + rho) * 1j * ts
    w2 = 1.0 + (1.0 - rho) * 1j * ts
    d1 = -(1.0 + rho) * 1j
    d2 = (1.0 - rho) * 1j
    m_sq = m1 * m1 + m2 * m2 - 2.0 * rho * m1 * m2
    num = -m_sq * ts * ts + 2.0 * m1 * m2 * 1j * ts
    dnum = -2.0 * m_sq * ts + 2.0 * m1 * m2 * 1j
    # logphi = -nu/2 (log w1 + log w2) + nu num/(2 w1 w2)
    dlog = (-0.5 * nu * (d1 / w1 + d2 / w2)
            + 0.5 * nu * (dnum / (w1 * w2)
                          - num * (d1 * w2 + d2 * w1) / (w1 * w2) ** 2))
    phi = np.exp(-0.5 * nu * (np.log(w1) + np.log(w2)) + 0.5 * nu * num / (w1 * w2))
    return s * phi * dlog


def partial_fraction_terms(params: BivariateParams) -> tuple[float, float, float]:
    """Coefficients of the partial-fraction split of the CF exponent.

    In standardized units the rational exponent of the characteristic
    function decomposes as

        constant + coeff_plus / (1 + (1-rho) i t) + coeff_minus / (1 - (1+rho) i t)

    with constant = -(m1^2 + m2^2 - 2 rho m1 m2) / (2 (1-rho^2)),
    coeff_plus   = (1+rho)(m1 - m2)^2 / (4 (1-rho^2)),
    coeff_minus  = (1-rho)(m1 + m2)^2 / (4 (1-rho^2)).
    """
    m1, m2, rho = params.m1, params.m2, params.rho
    r2 = 1.0 - rho * rho
    constant = -(m1 * m1 + m2 * m2 - 2.0 * rho * m1 * m2) / (2.0 * r2)
    coeff_plus = (1.0 + rho) * (m1 - m2) ** 2 / (4.0 * r2)
    coeff_minus = (1.0 - rho) * (m1 + m2) ** 2 / (4.0 * r2)
    return constant, coeff_plus, coeff_minus
