"""First-passage distribution and average run length of the standardized
moving sums, from the corrected diffusion approximation and from the
product-type (Glaz) approximation with simulated components."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, stats

from .brownian import RHO
from .bcp_long import delta_for_window, lambda_hat, lambda_quadrature
from .bcp_short import _q_formula, cda_explicit, cda_explicit_drho
from .core import ProcessSpec, std_normal_pdf, std_normal_sf
from .errors import DegenerateEstimate, DomainError, InvalidInput, SingularInput
from .estimates import ArlEstimate, BcpEstimate
from . import mc as _mc

ARL_NODES = 1024


def _geometric_panels(length: float, smallest: float = 1e-7, ratio: float = 2.0) -> np.ndarray:
    edges = [0.0]
    w = smallest
    while edges[-1] + w < length:
        edges.append(edges[-1] + w)
        w *= ratio
    edges.append(length)
    return np.asarray(edges)


_GL_ORDER = 24


def _offset_nodes(length: float):
    """Composite Gauss-Legendre nodes on ``(0, length)`` with geometrically growing panels."""
    edges = _geometric_panels(length)
    t, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    lo, hi = edges[:-1, None], edges[1:, None]
    y = (0.5 * (hi - lo) * t + 0.5 * (hi + lo)).ravel()
    wy = (0.5 * (hi - lo) * w).ravel()
    return y, wy


def short_branch_cdf(h: float, L: int, t) -> np.ndarray:
    """CDA c.d.f. of ``tau_h / L`` on ``0 < t <= 1`` (vectorized over ``t``).

    Equals ``cda_bcp_short(h, t L, L)``.  The integral over the first
    standardized value is done on ``x0 = h - y`` with panels that shrink
    geometrically towards ``y = 0``, where the conditional crossing
    probability varies on the scale ``sqrt(t)``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    y, wy = _offset_nodes(h + 8.0 if h > -7 else 1.0)
    x0 = h - y
    T = t[:, None]
    Z = T / (2.0 - T)
    rho = RHO * np.sqrt(Z / (T * L))
    # t underflowing to Z = 0 sends both arguments to +-inf, i.e. q = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        q = _q_formula(h, x0[None, :], Z, rho)
    body = np.clip(q, 0.0, 1.0) @ (wy * std_normal_pdf(x0))
    return body + std_normal_sf(h)


GAMMA_MODES = ("scaled", "frozen")
EIGENVALUE_MODES = ("quadrature", "closed_form")


@dataclass(frozen=True)
class PassageDistribution:
    """CDA law of ``tau_h / L``: an atom at 0 and a density on ``(0, inf)``.

    On ``(0, 1]`` the c.d.f. is the short-horizon CDA at ``M = tL``.  Beyond
    one window it is ``1 - S(t)`` with survival ``S(t) = (1 - P_gamma) lam^(t-1)``.

    ``gamma="scaled"`` uses the first-window correction ``rho_L / t^(1/4)``,
    i.e. the long-horizon CDA evaluated at ``M = tL``; ``"frozen"`` keeps
    ``rho_L`` for all ``t`` and gives a closed-form tail mean.
    ``eigenvalue`` picks the Gauss-Legendre survival factor or its closed-form
    approximation.
    """

    h: float
    L: int
    gamma: str = "scaled"
    eigenvalue: str = "quadrature"

    def __post_init__(self):
        if self.L < 1:
            raise InvalidInput(f"L must be a positive integer, got {self.L}")
        if self.gamma not in GAMMA_MODES:
            raise InvalidInput(f"gamma must be one of {GAMMA_MODES}, got {self.gamma!r}")
        if self.eigenvalue not in EIGENVALUE_MODES:
            raise InvalidInput(f"eigenvalue must be one of {EIGENVALUE_MODES}, got {self.eigenvalue!r}")

    @property
    def delta(self) -> float:
        return delta_for_window(self.L)

    @property
    def atom_at_zero(self) -> float:
        return float(std_normal_sf(self.h))

    @cached_property
    def lam(self) -> float:
        if self.eigenvalue == "quadrature":
            return lambda_quadrature(self.h, self.delta).lam
        return lambda_hat(self.h, self.delta)

    def _gamma(self, t):
        t = np.asarray(t, dtype=float)
        return self.delta / t ** 0.25 if self.gamma == "scaled" else np.full_like(t, self.delta)

    @property
    def survive_first_window(self) -> float:
        return float(1.0 - cda_explicit(self.h, self.delta))

    def survival(self, t):
        """``1 - F(t)`` for ``t >= 1``."""
        t = np.asarray(t, dtype=float)
        return (1.0 - cda_explicit(self.h, self._gamma(t))) * self.lam ** (t - 1.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise InvalidInput("passage time must be nonnegative")
        flat = np.atleast_1d(t).ravel()
        out = np.empty_like(flat)
        zero = flat == 0
        short = (flat > 0) & (flat <= 1)
        long = flat > 1
        out[zero] = self.atom_at_zero
        if short.any():
            out[short] = short_branch_cdf(self.h, self.L, flat[short])
        if long.any():
            out[long] = 1.0 - self.survival(flat[long])
        out = out.reshape(np.shape(t))
        return out if out.ndim else float(out)

    def seam_gap(self) -> float:
        """Jump of the c.d.f. at ``t = 1`` between the two branches."""
        return float(short_branch_cdf(self.h, self.L, [1.0])[0] - (1.0 - self.survive_first_window))

    def long_density(self, t):
        """Density of ``tau_h / L`` for ``t > 1``."""
        t = np.asarray(t, dtype=float)
        lam = self.lam
        g = self._gamma(t)
        dens = (1.0 - cda_explicit(self.h, g)) * -math.log(lam) * lam ** (t - 1.0)
        if self.gamma == "scaled":
            # d/dt of P_gamma(t) with gamma = delta t^(-1/4)
            dens = dens + cda_explicit_drho(self.h, g) * (-0.25 * g / t) * lam ** (t - 1.0)
        return dens

    def tail_mean(self) -> float:
        """``int_1^inf s dF(s)``.

        By parts this is ``S(1) + int_1^inf S(s) ds``; closed form when gamma
        is frozen, adaptive quadrature otherwise.
        """
        lam = self.lam
        if not 0 < lam < 1:
            raise SingularInput(f"survival factor {lam} outside (0, 1); the tail has no finite mean")
        if self.gamma == "frozen":
            return self.survive_first_window * (1.0 + 1.0 / -math.log(lam))
        rest, _ = integrate.quad(lambda s: float(self.survival(s)), 1.0, np.inf, epsabs=0.0, epsrel=1e-11, limit=500)
        return self.survive_first_window + rest

    def head_mean(self, nodes: int = ARL_NODES) -> float:
        """``int_0^1 s dF(s)`` by parts: ``F(1) - int_0^1 F(s) ds``.

        The integral uses the trapezoid rule in ``u = sqrt(s)``, which removes
        the square-root behaviour of ``F`` at the origin.
        """
        u = np.linspace(0.0, 1.0, nodes + 1)
        s = u * u
        F = np.empty_like(s)
        F[0] = self.atom_at_zero
        F[1:] = short_branch_cdf(self.h, self.L, s[1:])
        integral = integrate.trapezoid(F * 2 * u, u)
        return float(F[-1] - integral)

    def mean(self, nodes: int = ARL_NODES) -> float:
        return self.head_mean(nodes) + self.tail_mean()


def passage_cdf(h: float, L: int, t, **options):
    return PassageDistribution(h, L, **options).cdf(t)


def arl_cda(h: float, L: int, nodes: int = ARL_NODES, **options) -> ArlEstimate:
    """Average run length (in standardized-sum indices) under the CDA."""
    return ArlEstimate(L * PassageDistribution(h, L, **options).mean(nodes), "cda")


def glaz_bcp_from_components(P_L: float, P_2L: float, T: float) -> float:
    if P_L >= 1.0:
        raise DegenerateEstimate("crossing probability over one window is 1; the ratio is undefined")
    return 1.0 - (1.0 - P_2L) * ((1.0 - P_2L) / (1.0 - P_L)) ** (T - 2.0)


def glaz_bcp(h: float, M: int, L: int, cfg: _mc.MCConfig, spec: ProcessSpec | None = None) -> BcpEstimate:
    """Product-type approximation from simulated one- and two-window crossing probabilities."""
    if M < 2 * L:
        raise DomainError(f"glaz requires M >= 2L (got M={M}, L={L})")
    spec = spec or ProcessSpec(L)
    counts = _mc.crossing_counts(spec, 2 * L, [h], cfg)[0]
    n = cfg.replications
    p1, p2 = counts[L] / n, counts[2 * L] / n
    T = M / L
    value = glaz_bcp_from_components(p1, p2, T)
    # delta method; crossing by L implies crossing by 2L, so cov = p1 (1 - p2) / n
    s1, s2 = 1.0 - p1, 1.0 - p2
    d2 = (T - 1.0) * (s2 / s1) ** (T - 2.0)
    d1 = -(T - 2.0) * (s2 / s1) ** (T - 1.0)
    var = (d1 * d1 * p1 * s1 + d2 * d2 * p2 * s2 + 2 * d1 * d2 * p1 * s2) / n
    return BcpEstimate(float(value), "glaz", math.sqrt(max(var, 0.0)))


def glaz_arl_from_components(P) -> float:
    """Average run length from crossing probabilities ``P[j] = P(j, h)``, ``j = 0..2L``."""
    P = np.asarray(P, dtype=float)
    L = (P.size - 1) // 2
    denom = P[2 * L] - P[L]
    if not denom > 0:
        raise DegenerateEstimate(f"P(2L,h) - P(L,h) = {denom} is not positive")
    head = np.sum(1.0 - P[: L + 1])
    tail = np.sum(1.0 - P[L + 1 : 2 * L + 1])
    return float(head + (1.0 - P[L]) / denom * tail)


GLAZ_GROUPS = 20


def glaz_arl_many(hs, L: int, cfg: _mc.MCConfig, groups: int = GLAZ_GROUPS, spec: ProcessSpec | None = None) -> list[ArlEstimate]:
    """Glaz ARL for several thresholds; each seed group is one simulation shared by all ``hs``."""
    hs = np.atleast_1d(np.asarray(hs, dtype=float))
    spec = spec or ProcessSpec(L)
    seed = cfg.resolved_seed
    values = np.empty((groups, hs.size))
    for g in range(groups):
        counts = _mc.crossing_counts(spec, 2 * L, hs, cfg.with_seed(_mc.derive_seed(seed, g)))
        P = counts / cfg.replications
        P[:, 0] = std_normal_sf(hs)
        for k in range(hs.size):
            values[g, k] = glaz_arl_from_components(P[k])
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1) if groups > 1 else np.zeros(hs.size)
    se = sd / math.sqrt(groups)
    half = stats.t.ppf(0.975, groups - 1) * se if groups > 1 else np.zeros(hs.size)
    return [ArlEstimate(float(m), "glaz", float(s), float(hw)) for m, s, hw in zip(mean, se, half)]


def glaz_arl(h: float, L: int, cfg: _mc.MCConfig, groups: int = GLAZ_GROUPS) -> ArlEstimate:
    return glaz_arl_many([h], L, cfg, groups)[0]
