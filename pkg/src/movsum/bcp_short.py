"""Boundary crossing approximations for horizons up to one window (M <= L).

All functions work with the standardized threshold ``h``.  The diffusion
and corrected diffusion approximations condition on the value ``x0`` of
the first standardized sum and map the limiting process onto a Brownian
motion crossing a straight line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .brownian import RHO, _exp_times_cdf
from .core import INV_SQRT_2PI, std_normal_cdf, std_normal_pdf, std_normal_sf
from .errors import DomainError, InvalidInput

#: Lower truncation point of the integrals over the starting value.
X0_LOWER = -8.0
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class ShortHorizonGeometry:
    T: float

    def __post_init__(self):
        if not 0 < self.T <= 1:
            raise DomainError(f"T={self.T} outside (0, 1]; use the long-horizon approximations")

    @property
    def Z(self) -> float:
        return self.T / (2.0 - self.T)


@dataclass(frozen=True)
class ConditionalCrossing:
    h: float
    x0: float
    rho: float = 0.0

    @property
    def a_hat(self) -> float:
        return 0.5 * (self.h - self.x0) + self.rho

    @property
    def b(self) -> float:
        return 0.5 * (self.h + self.x0)


def durbin_bcp(h, T):
    """``h T phi(h)``. Not a probability: exceeds 1 for small ``h`` and large ``T``."""
    if not np.all(np.asarray(T) > 0):
        raise InvalidInput(f"T must be positive, got {T}")
    return h * T * std_normal_pdf(h)


def pch_bcp(h, T):
    if not np.all(np.asarray(T) > 0):
        raise InvalidInput(f"T must be positive, got {T}")
    return -np.expm1(-h * std_normal_pdf(h) * T)


def diffusion_bcp_t1(h):
    """Crossing probability of the limiting process over one window length."""
    P = std_normal_cdf(h)
    f = std_normal_pdf(h)
    return 1.0 - P * P + f * (h * P + f)


def diffusion_bcp_short(h: float, T: float) -> float:
    """Diffusion approximation for ``0 < T <= 1``."""
    if not 0 < T <= 1:
        raise DomainError(f"T={T} outside (0, 1]; use bcp_long.diffusion_bcp_long for T > 1")
    if math.isinf(h):
        return 0.0 if h > 0 else 1.0
    Z = T / (2.0 - T)
    sz = math.sqrt(Z)

    def integrand(x):
        return std_normal_cdf((h * (Z + 1) - x * (1 - Z)) / (2 * sz)) * std_normal_pdf(x)

    lower = min(X0_LOWER, h - 1.0)
    body, _ = integrate.quad(integrand, lower, h, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    # below the cut the integrand is phi(x) times a factor in (0, 1]; tail < Phi(-8)
    body += std_normal_cdf(lower) * std_normal_cdf((h * (Z + 1) - lower * (1 - Z)) / (2 * sz))
    phi_h = std_normal_pdf(h)
    # (sqrt(2 pi) phi(h))^Z / sqrt(2 pi) = exp(-Z h^2 / 2) / sqrt(2 pi)
    extra = 2 * sz / (Z + 1) * phi_h * (h * sz * std_normal_cdf(h * sz) + INV_SQRT_2PI * math.exp(-Z * h * h / 2))
    return float(1.0 - body + extra)


def _q_formula(h, x0, Z, rho):
    a_hat = 0.5 * (h - x0) + rho
    b = 0.5 * (h + x0)
    sz = np.sqrt(Z)
    return 1.0 - std_normal_cdf((b * Z + a_hat) / sz) + _exp_times_cdf(-2.0 * a_hat * b, (b * Z - a_hat) / sz)


def rho_window(M: float, L: int) -> float:
    """Overshoot correction ``rho_{M/Z}`` for ``M`` (possibly non-integer) steps, ``M <= L``."""
    T = M / L
    Z = T / (2.0 - T)
    return RHO * math.sqrt(Z / M)


def q_conditional(h: float, x0: float, M: int, L: int, rho_override: float | None = None) -> float:
    """Probability of reaching ``h`` within ``M`` steps given the first standardized sum is ``x0``.

    ``rho_override`` replaces the overshoot correction; 0 gives the
    uncorrected continuous-time conditional probability.
    """
    if M > L:
        raise DomainError(f"M={M} exceeds L={L}; conditional formula needs M <= L")
    if M <= 0:
        raise InvalidInput(f"M must be positive, got {M}")
    if not x0 < h:
        raise InvalidInput(f"x0={x0} is not below h={h}: crossing is certain at the start")
    if x0 == -math.inf:
        return 0.0
    T = M / L
    Z = T / (2.0 - T)
    rho = rho_window(M, L) if rho_override is None else rho_override
    if rho < 0:
        raise InvalidInput(f"rho must be nonnegative, got {rho}")
    return float(np.clip(_q_formula(h, x0, Z, rho), 0.0, 1.0))


def _cda_integral(h, M, L, rho=None):
    T = M / L
    Z = T / (2.0 - T)
    if rho is None:
        rho = rho_window(M, L)
    lower = min(X0_LOWER, h - 1.0)

    def integrand(x0):
        return _q_formula(h, x0, Z, rho) * std_normal_pdf(x0)

    # the conditional probability varies on the scale sqrt(Z) just below h
    width = math.sqrt(Z)
    points = [p for p in (h - width, h - 5 * width) if lower < p < h]
    val, _ = integrate.quad(integrand, lower, h, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200, points=points or None)
    return val


def cda_bcp_short(h: float, M: float, L: int) -> float:
    """Corrected diffusion approximation for ``1 <= M <= L``.

    ``M`` may be non-integer; the correction is continued smoothly in ``M``.
    """
    if M > L:
        raise DomainError(f"M={M} exceeds L={L}; use bcp_long.cda_bcp_long for M > L")
    if not M > 0:
        raise InvalidInput(f"M must be positive, got {M}")
    if math.isinf(h):
        return 0.0 if h > 0 else 1.0
    return float(min(1.0, _cda_integral(h, M, L) + std_normal_sf(h)))


def cda_explicit(h, rho):
    """Closed form of the corrected approximation over one full window with correction ``rho``."""
    h = np.asarray(h, dtype=float)
    P = std_normal_cdf(h)
    val = (
        1.0
        - std_normal_cdf(h + rho) * P
        + std_normal_pdf(h + rho) * P / rho
        - _exp_times_cdf(-0.5 * h * h - 2.0 * h * rho, h - rho) * INV_SQRT_2PI / rho
    )
    val = np.where(np.isposinf(h), 0.0, val)
    return val if val.ndim else float(val)


def cda_explicit_drho(h, rho):
    """Derivative of :func:`cda_explicit` with respect to ``rho``."""
    h = np.asarray(h, dtype=float)
    P = std_normal_cdf(h)
    f_plus = std_normal_pdf(h + rho)
    # phi(h) exp(-2 h rho) written in log space
    g = _exp_times_cdf(-0.5 * h * h - 2.0 * h * rho, h - rho) * INV_SQRT_2PI
    g_pdf = INV_SQRT_2PI * np.exp(-0.5 * h * h - 2.0 * h * rho) * std_normal_pdf(h - rho)
    val = (
        -f_plus * P
        - P * f_plus * ((h + rho) / rho + 1.0 / rho ** 2)
        + 2.0 * h * g / rho
        + g_pdf / rho
        + g / rho ** 2
    )
    return val if val.ndim else float(val)


def cda_window_explicit(h, L: int):
    if L < 1:
        raise InvalidInput(f"L must be a positive integer, got {L}")
    return cda_explicit(h, RHO / math.sqrt(L))
