"""Boundary crossing approximations for horizons longer than one window.

Survival over successive windows is propagated by an integral operator
whose kernel is the killed one-window transition density of the limiting
process.  Its Perron eigenvalue is the per-window survival factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .brownian import RHO
from .core import INV_SQRT_2PI, std_normal_cdf, std_normal_pdf
from .bcp_short import cda_explicit, diffusion_bcp_t1
from .errors import ConvergenceFailure, DomainError, InvalidInput, SingularInput

DEFAULT_NODES = 400
DEFAULT_CUT = 10.0
# below this delta the 0/0 form of kappa is replaced by its Taylor expansion
_KAPPA_SERIES_DELTA = 1e-4


@dataclass(frozen=True)
class KernelSpec:
    h: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.delta >= 0:
            raise InvalidInput(f"delta must be nonnegative, got {self.delta}")

    @classmethod
    def for_window(cls, h: float, L: int) -> "KernelSpec":
        return cls(h, delta_for_window(L))


def delta_for_window(L: int) -> float:
    return RHO / math.sqrt(L)


def kernel(x, x0, spec: KernelSpec):
    """Killed transition density from ``x0`` to ``x`` over one window, corrected by ``delta``."""
    h, d = spec.h, spec.delta
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    expo = -(h - x) * (h - x0) - d * (3 * h - 2 * x - x0 + 2 * d)
    with np.errstate(over="ignore", invalid="ignore"):
        val = std_normal_pdf(x) * -np.expm1(expo)
    val = np.where(x < h, val, 0.0)
    return val if val.ndim else float(val)


def kernel_v(x, x0, h: float, V: float):
    """Killed density of the limiting process after time ``V <= 1`` started at ``x0``.

    Written through the Brownian representation of the process on one
    window: with ``U = V/(2-V)`` the value at time ``V`` is
    ``(2-V) W(U) + x0 (1-V)`` and the barrier ``h`` becomes the line
    ``(h-x0)/2 + t (h+x0)/2`` for ``W``.
    """
    if not 0 < V <= 1:
        raise DomainError(f"V must lie in (0, 1], got {V}")
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    U = V / (2.0 - V)
    a = 0.5 * (h - x0)
    b = 0.5 * (h + x0)
    w = (x - x0 * (1.0 - V)) / (2.0 - V)
    scale = 1.0 / math.sqrt(2 * math.pi * U) / (2.0 - V)
    with np.errstate(over="ignore", invalid="ignore"):
        val = scale * np.exp(-w * w / (2 * U)) * -np.expm1(-2 * a * b - ((w - 2 * a) ** 2 - w * w) / (2 * U))
    val = np.where(x < h, val, 0.0)
    return val if val.ndim else float(val)


def _taylor_exp_cdf(alpha, beta, k, h):
    """Taylor coefficients (orders 0..3) in delta of ``exp(alpha d + beta d^2) Phi(h - k d)``."""
    e = [1.0, alpha, alpha ** 2 / 2 + beta, alpha ** 3 / 6 + alpha * beta]
    P, f = std_normal_cdf(h), std_normal_pdf(h)
    c = [P, -k * f, -(k ** 2) / 2 * h * f, -(k ** 3) / 6 * (h * h - 1) * f]
    return [sum(e[i] * c[n - i] for i in range(n + 1)) for n in range(4)]


def kappa(h: float, delta: float) -> float:
    """The quantity kappa_{h,delta} entering the first two iterates; continuous at delta = 0."""
    if delta < 0:
        raise InvalidInput(f"delta must be nonnegative, got {delta}")
    f = std_normal_pdf(h)
    if delta < _KAPPA_SERIES_DELTA:
        c1 = _taylor_exp_cdf(-h, -1.5, 1.0, h)
        c2 = _taylor_exp_cdf(-2 * h, 0.0, 2.0, h)
        b1, b2, b3 = (c1[n] - c2[n] for n in (1, 2, 3))
        return float(f * (b1 + b2 * delta + b3 * delta ** 2))
    bracket = math.exp(-delta * h - 1.5 * delta ** 2) * std_normal_cdf(h - delta) - math.exp(-2 * delta * h) * std_normal_cdf(h - 2 * delta)
    return float(f * bracket / delta)


@dataclass
class DensityIterate:
    """Stage ``i`` of the survival-density recursion started from the truncated normal."""

    stage: int
    normalizer: float
    spec: KernelSpec
    _unnormalized: object = field(repr=False, default=None)

    def unnormalized(self, x):
        x = np.asarray(x, dtype=float)
        val = np.where(x < self.spec.h, self._unnormalized(x), 0.0)
        return val if val.ndim else float(val)

    def __call__(self, x):
        """Normalized density; zero at and above the threshold."""
        return self.unnormalized(x) / self.normalizer


def _p1_tilde(x, h, d):
    P = std_normal_cdf(h)
    return std_normal_pdf(x) - std_normal_pdf(h) / P * np.exp(-2 * d * h - 1.5 * d * d + d * x) * std_normal_cdf(x - d)


def _p2_tilde(x, h, d, c1):
    P = std_normal_cdf(h)
    f = std_normal_pdf(h)
    num = std_normal_cdf(h - d) * np.exp(-3 * d * h - 3.5 * d * d + 2 * d * x) * std_normal_pdf(x) - f * np.exp(
        0.5 * d * d - 2 * d * h - d * x
    ) * std_normal_cdf(x - 3 * d)
    return std_normal_pdf(x) + f / c1 * (num / (P * (h + 2 * d - x)) - np.exp(-2 * d * h - 1.5 * d * d + d * x) * std_normal_cdf(x - d))


def density_iterates(spec: KernelSpec) -> list[DensityIterate]:
    """Stages 0, 1, 2 of the recursion in closed form.

    Stage 2 is returned unnormalized (normalizer 1): its mass ``c_2`` has no
    closed form.  ``delta = 0`` is supported through the continuous limit of
    ``kappa``; the stage-2 formula needs ``delta > 0``.
    """
    h, d = spec.h, spec.delta
    P = float(std_normal_cdf(h))
    c1 = P - kappa(h, d) / P
    p0 = DensityIterate(0, 1.0, spec, lambda x: std_normal_pdf(x) / P)
    p1 = DensityIterate(1, c1, spec, lambda x: _p1_tilde(x, h, d))
    stages = [p0, p1]
    if d > 0:
        stages.append(DensityIterate(2, 1.0, spec, lambda x: _p2_tilde(x, h, d, c1)))
    return stages


def lambda_hat(h: float, delta: float) -> float:
    """Closed-form approximation of the per-window survival eigenvalue.

    Ratio of the second unnormalized iterate to the first normalized one,
    both evaluated at zero.
    """
    if delta < 0:
        raise InvalidInput(f"delta must be nonnegative, got {delta}")
    if math.isinf(h) and h > 0:
        return 1.0
    s = h + 2 * delta
    if s == 0:
        raise SingularInput(f"h + 2 delta vanishes (h={h}, delta={delta})")
    P = std_normal_cdf(h)
    f = std_normal_pdf(h)
    k = kappa(h, delta)
    num = s * k + f * (
        std_normal_cdf(-3 * delta) * math.exp(0.5 * delta ** 2 - 0.5 * h * h - 2 * delta * h)
        - std_normal_cdf(h - delta) * math.exp(-3 * delta * h - 3.5 * delta ** 2)
    )
    den = s * (P - std_normal_cdf(-delta) * math.exp(-(h + delta) * (h + 3 * delta) / 2))
    if den == 0:
        raise SingularInput(f"denominator vanishes at h={h}, delta={delta}")
    return float(P - num / den)


@dataclass(frozen=True)
class EigenResult:
    lam: float
    grid: np.ndarray
    weights: np.ndarray
    eigenfunction: np.ndarray
    N: int
    C: float
    h: float
    delta: float
    iterations: int = 0

    def __call__(self, x):
        """Nystrom interpolation of the eigenfunction at arbitrary points."""
        spec = KernelSpec(self.h, self.delta)
        x = np.asarray(x, dtype=float)
        return kernel(x[..., None], self.grid, spec) @ (self.weights * self.eigenfunction) / self.lam


@lru_cache(maxsize=64)
def _gauss_legendre(N: int):
    return np.polynomial.legendre.leggauss(N)


def power_iteration(A, tol=1e-12, max_iter=100_000, x0=None):
    """Dominant eigenpair of a matrix with positive entries.

    Stops when successive Rayleigh quotients agree to ``tol`` (relative).
    """
    x = np.ones(A.shape[0]) if x0 is None else np.array(x0, dtype=float)
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = A @ x
        lam_new = float(x @ y)
        x = y / np.linalg.norm(y)
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new, x, it
        lam = lam_new
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} iterations", last=(lam, x))


def lambda_quadrature(h: float, delta: float = 0.0, N: int = DEFAULT_NODES, C: float = DEFAULT_CUT, tol: float = 1e-12) -> EigenResult:
    """Perron eigenvalue of the kernel operator, Gauss-Legendre discretized on ``[-C, h]``."""
    if N < 16:
        raise InvalidInput(f"need at least 16 nodes, got N={N}")
    if not C > 0:
        raise InvalidInput(f"cut C must be positive, got {C}")
    if not -C < h:
        raise InvalidInput(f"threshold h={h} must exceed the lower cut -C={-C}")
    if delta < 0:
        raise InvalidInput(f"delta must be nonnegative, got {delta}")
    t, w = _gauss_legendre(N)
    half = 0.5 * (h + C)
    x = half * t + 0.5 * (h - C)
    w = half * w
    sw = np.sqrt(w)
    K = kernel(x[:, None], x[None, :], KernelSpec(h, delta))
    A = sw[:, None] * K * sw[None, :]
    # truncated normal start, close to the eigenvector
    start = sw * std_normal_pdf(x)
    lam, u, iters = power_iteration(A, tol=tol, x0=start)
    p = u / sw
    p /= np.sum(w * p)
    return EigenResult(lam=lam, grid=x, weights=w, eigenfunction=p, N=N, C=C, iterations=iters, h=h, delta=delta)


@lru_cache(maxsize=1024)
def lambda_zero(h: float, N: int = DEFAULT_NODES, C: float = DEFAULT_CUT) -> float:
    return lambda_quadrature(h, 0.0, N, C).lam


def diffusion_bcp_long(h: float, T: float) -> float:
    """Uncorrected diffusion approximation for ``T > 1``."""
    if not T > 1:
        raise DomainError(f"T={T} is not above 1; use bcp_short.diffusion_bcp_short")
    if math.isinf(h):
        return 0.0 if h > 0 else 1.0
    lam = lambda_zero(float(h))
    return float(1.0 - (1.0 - diffusion_bcp_t1(h)) * lam ** (T - 1))


def cda_bcp_long(h: float, M: float, L: int, eigenvalue: str = "closed_form") -> float:
    """Corrected diffusion approximation for ``M > L``.

    ``eigenvalue="quadrature"`` replaces the closed-form survival factor by
    the Gauss-Legendre one.
    """
    if not M > L:
        raise DomainError(f"M={M} does not exceed L={L}; use bcp_short.cda_bcp_short")
    if math.isinf(h):
        return 0.0 if h > 0 else 1.0
    T = M / L
    delta = delta_for_window(L)
    gamma = delta / T ** 0.25
    survive_first = 1.0 - cda_explicit(h, gamma)
    if eigenvalue == "closed_form":
        lam = lambda_hat(h, delta)
    elif eigenvalue == "quadrature":
        lam = lambda_quadrature(h, delta).lam
    else:
        raise InvalidInput(f"unknown eigenvalue mode {eigenvalue!r}")
    return float(1.0 - survive_first * lam ** (T - 1))
