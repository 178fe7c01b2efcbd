"""Crossing probabilities of Brownian motion over straight-line boundaries,
killed densities, and the overshoot constant used for discrete-time
correction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import std_normal_cdf, std_normal_logcdf
from .errors import InvalidInput, UnsupportedTolerance

#: Expected overshoot of a standard normal random walk over a far boundary.
RHO = 0.5826


@dataclass(frozen=True)
class SlopedBoundary:
    """The line ``a + b t`` on ``[0, R]``."""

    a: float
    b: float
    R: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidInput(f"intercept a must be positive, got {self.a}")
        if not self.R > 0:
            raise InvalidInput(f"horizon R must be positive, got {self.R}")


@dataclass(frozen=True)
class SurvivalDensityPoint:
    x: float
    density: float


def _exp_times_cdf(log_factor, arg):
    """``exp(log_factor) * Phi(arg)`` evaluated in log space."""
    with np.errstate(divide="ignore", over="ignore"):
        return np.exp(log_factor + std_normal_logcdf(arg))


def _pw(R, a, b):
    sr = np.sqrt(R)
    return 1.0 - std_normal_cdf((b * R + a) / sr) + _exp_times_cdf(-2.0 * a * b, (b * R - a) / sr)


def bcp_sloped(boundary: SlopedBoundary) -> float:
    """Probability that standard Brownian motion reaches ``a + b t`` before ``R``."""
    a, b, R = boundary.a, boundary.b, boundary.R
    if math.isinf(a):
        return 0.0
    return float(np.clip(_pw(R, a, b), 0.0, 1.0))


def drift_survival_cdf(z: float, y: float, R: float, mu: float) -> float:
    """P(W(R) + mu R <= z and the drifted path stays below ``y`` on [0, R])."""
    if not y > 0:
        raise InvalidInput(f"level y must be positive, got {y}")
    if not R > 0:
        raise InvalidInput(f"horizon R must be positive, got {R}")
    # W_mu(R) <= sup <= y, so the joint probability is flat above y
    z = min(z, y)
    if z == -math.inf:
        return 0.0
    sr = math.sqrt(R)
    val = std_normal_cdf((z - mu * R) / sr) - _exp_times_cdf(2.0 * y * mu, (z - mu * R - 2.0 * y) / sr)
    return float(np.clip(val, 0.0, 1.0))


def survival_density(x, boundary: SlopedBoundary):
    """Density of W(R) on paths that never reached ``a + b t`` on [0, R].

    Not normalized: integrates to ``1 - bcp_sloped(boundary)``.
    """
    a, b, R = boundary.a, boundary.b, boundary.R
    x = np.asarray(x, dtype=float)
    dens = (np.exp(-x * x / (2 * R)) - np.exp(-2 * a * b - (x - 2 * a) ** 2 / (2 * R))) / math.sqrt(2 * math.pi * R)
    dens = np.where(x > a + b * R, 0.0, np.maximum(dens, 0.0))
    return dens if dens.ndim else float(dens)


def rho_scaled(steps_per_unit: float) -> float:
    """Overshoot correction for a grid with ``steps_per_unit`` points per unit time."""
    return RHO / math.sqrt(steps_per_unit)


def siegmund_rho() -> float:
    return RHO


_SERIES_CUTOFF = 1e-2
_UPPER = 40.0


def _rho_integrand(lam):
    # lam^-2 * log(2 (1 - exp(-lam^2/2)) / lam^2); removable singularity at 0
    if lam < _SERIES_CUTOFF:
        l2 = lam * lam
        return -0.25 + l2 / 96.0 - l2 ** 3 / 46080.0
    u = 0.5 * lam * lam
    return math.log(-math.expm1(-u) / u) / (lam * lam)


def siegmund_rho_numeric(tolerance: float = 1e-8) -> float:
    """Evaluate the overshoot constant from its integral representation.

    The integral is taken numerically on ``[0, 40]``; beyond that
    ``1 - exp(-lam^2/2)`` equals 1 in double precision and the remaining
    tail ``int (log 2 - 2 log lam) / lam^2`` is added in closed form.
    """
    if not tolerance > 0:
        raise UnsupportedTolerance(f"tolerance must be positive, got {tolerance}")
    if tolerance < 1e-12:
        raise UnsupportedTolerance(f"tolerance {tolerance} is below what the quadrature can deliver (1e-12)")
    body, _ = integrate.quad(_rho_integrand, 0.0, _UPPER, epsabs=tolerance / 10, epsrel=0.0, limit=200)
    tail = (math.log(2.0) - 2.0 * (math.log(_UPPER) + 1.0)) / _UPPER
    return -(body + tail) / math.pi


def discretized_bcp(Z: float, M: int, a: float, b: float) -> float:
    """Crossing probability of Brownian motion observed on ``M`` equally
    spaced points of ``(0, Z]``, via a barrier raised by the scaled
    overshoot constant."""
    if not Z > 0:
        raise InvalidInput(f"Z must be positive, got {Z}")
    if M < 1:
        raise InvalidInput(f"M must be a positive integer, got {M}")
    if not a > 0:
        raise InvalidInput(f"intercept a must be positive, got {a}")
    return bcp_sloped(SlopedBoundary(a + rho_scaled(M / Z), b, Z))
