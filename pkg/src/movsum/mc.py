"""Seeded Monte Carlo for the moving-sum process.

Every replication owns a counter-based stream: the ``j``-th innovation of
replication ``r`` is a pure function of ``(seed, r, j)``.  Any part of any
stream can be regenerated on demand, so results do not depend on block
sizes, chunking or the number of worker threads.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ProcessSpec, moving_sums, standardize, std_normal_ppf
from .errors import InvalidInput
from .estimates import ArlEstimate

log = logging.getLogger(__name__)

SEED_ENV = "MOVSUM_SEED"
DEFAULT_SEED = 20190801

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MASK64 = (1 << 64) - 1


def default_seed() -> int:
    value = os.environ.get(SEED_ENV)
    return int(value, 0) if value else DEFAULT_SEED


def _mix64(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; operates in place on a uint64 array
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a labelled sub-experiment (e.g. a seed group)."""
    z = np.array([seed & _MASK64], dtype=np.uint64)
    for p in path:
        z = _mix64(z ^ _mix64(np.array([(p + 1) & _MASK64], dtype=np.uint64)))
    return int(z[0])


def stream_keys(seed: int, reps) -> np.ndarray:
    base = _mix64(np.array([seed & _MASK64], dtype=np.uint64))
    r = np.asarray(reps, dtype=np.uint64) + np.uint64(1)
    return _mix64(base ^ _mix64(r * _GOLDEN))


def normals(keys: np.ndarray, start: int, count: int) -> np.ndarray:
    """Standard normal variates at stream positions ``start .. start+count-1``.

    Returns shape ``(len(keys), count)``.  Uniforms come from the SplitMix64
    output sequence of each key, mapped through the normal quantile.
    """
    pos = np.arange(start + 1, start + count + 1, dtype=np.uint64) * _GOLDEN
    z = keys[:, None] + pos[None, :]
    _mix64(z)
    u = (z >> np.uint64(11)).astype(np.float64)
    u += 0.5
    u *= 2.0 ** -53
    return std_normal_ppf(u)


@dataclass(frozen=True)
class MCConfig:
    replications: int = 100_000
    seed: int | None = None
    max_horizon: int | None = None
    thread_hint: int | None = None
    block: int = 2048

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidInput(f"replications must be positive, got {self.replications}")
        if self.seed is not None and not 0 <= self.seed <= _MASK64:
            raise InvalidInput(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.thread_hint is not None and self.thread_hint < 1:
            raise InvalidInput(f"thread_hint must be positive, got {self.thread_hint}")

    @property
    def resolved_seed(self) -> int:
        return default_seed() if self.seed is None else self.seed

    def horizon_cap(self, L: int) -> int:
        cap = self.max_horizon if self.max_horizon is not None else max(10 ** 6, 1000 * L)
        if cap < L:
            raise InvalidInput(f"max_horizon={cap} is below the window length L={L}")
        return cap

    def with_seed(self, seed: int) -> "MCConfig":
        return MCConfig(self.replications, seed, self.max_horizon, self.thread_hint, self.block)


@dataclass(frozen=True)
class MCResult:
    estimate: float
    stderr: float
    replications: int
    truncated_fraction: float = 0.0


def _blocks(cfg: MCConfig):
    n, b = cfg.replications, cfg.block
    return [(s, min(s + b, n)) for s in range(0, n, b)]


def _run_blocks(func, cfg: MCConfig):
    """Apply ``func(lo, hi)`` to replication blocks; results in block order."""
    blocks = _blocks(cfg)
    workers = cfg.thread_hint or 1
    if workers == 1 or len(blocks) == 1:
        return [func(lo, hi) for lo, hi in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: func(*b), blocks))


def standardized_paths(spec: ProcessSpec, keys: np.ndarray, start: int, windows: int) -> np.ndarray:
    """Standardized sums ``xi_start .. xi_{start+windows-1}`` for each stream."""
    eps = spec.mu + spec.sigma * normals(keys, start, windows + spec.L - 1)
    return standardize(moving_sums(eps, spec.L, axis=1), spec)


def simulate_running_max(spec: ProcessSpec, horizon: int, cfg: MCConfig, dtype=np.float64) -> np.ndarray:
    """Running maxima ``max_{n<=j} xi_n`` for ``j = 0..horizon``, shape ``(replications, horizon+1)``."""
    seed = cfg.resolved_seed

    def block(lo, hi):
        xi = standardized_paths(spec, stream_keys(seed, np.arange(lo, hi)), 0, horizon + 1)
        return np.maximum.accumulate(xi, axis=1).astype(dtype, copy=False)

    return np.concatenate(_run_blocks(block, cfg))


def simulate_maxima(spec: ProcessSpec, M: int, cfg: MCConfig) -> np.ndarray:
    """Per-replication ``max_{0<=n<=M} xi_n``; uses ``L + M`` innovations each."""
    if M < 0:
        raise InvalidInput(f"M must be nonnegative, got {M}")
    seed = cfg.resolved_seed

    def block(lo, hi):
        return standardized_paths(spec, stream_keys(seed, np.arange(lo, hi)), 0, M + 1).max(axis=1)

    return np.concatenate(_run_blocks(block, cfg))


def bcp_from_maxima(maxima: np.ndarray, h: float) -> MCResult:
    n = maxima.size
    p = float(np.count_nonzero(maxima >= h)) / n
    return MCResult(p, math.sqrt(p * (1 - p) / n), n)


def simulate_bcp(spec: ProcessSpec, M: int, h: float, cfg: MCConfig) -> MCResult:
    """Empirical frequency of ``max_{n<=M} xi_n >= h``."""
    return bcp_from_maxima(simulate_maxima(spec, M, cfg), h)


def crossing_counts(spec: ProcessSpec, horizon: int, hs, cfg: MCConfig) -> np.ndarray:
    """Number of replications with ``max_{n<=j} xi_n >= h`` for each ``h`` in ``hs`` and ``j = 0..horizon``."""
    hs = np.atleast_1d(np.asarray(hs, dtype=float))
    seed = cfg.resolved_seed

    def block(lo, hi):
        xi = standardized_paths(spec, stream_keys(seed, np.arange(lo, hi)), 0, horizon + 1)
        run = np.maximum.accumulate(xi, axis=1)
        return (run[None, :, :] >= hs[:, None, None]).sum(axis=1)

    return np.sum(_run_blocks(block, cfg), axis=0)


@dataclass(frozen=True)
class PassageSample:
    """First-passage indices ``tau_h`` (in standardized-sum units)."""

    taus: np.ndarray
    L: int
    h: float
    max_horizon: int
    truncated_fraction: float

    @property
    def warning(self) -> bool:
        return self.truncated_fraction > 0.01

    def ecdf(self, t):
        """Empirical c.d.f. of ``tau_h / L`` at ``t``."""
        scaled = np.sort(self.taus) / self.L
        return np.searchsorted(scaled, np.asarray(t, dtype=float), side="right") / scaled.size


def _chunk_windows(L: int) -> int:
    return max(256, 8 * L)


def simulate_passage(spec: ProcessSpec, h: float, cfg: MCConfig) -> PassageSample:
    """Simulate ``tau_h = min{n >= 0: xi_n >= h}`` for every replication.

    Paths are advanced in chunks of windows; replications that have crossed
    are dropped.  Runs still below ``h`` at ``max_horizon`` are censored
    there and counted in ``truncated_fraction``.
    """
    seed = cfg.resolved_seed
    cap = cfg.horizon_cap(spec.L)
    chunk = _chunk_windows(spec.L)

    def block(lo, hi):
        reps = np.arange(lo, hi)
        taus = np.full(reps.size, cap, dtype=np.int64)
        crossed = np.zeros(reps.size, dtype=bool)
        active = np.arange(reps.size)
        keys = stream_keys(seed, reps)
        n0 = 0
        while active.size and n0 <= cap:
            windows = min(chunk, cap + 1 - n0)
            hit = standardized_paths(spec, keys[active], n0, windows) >= h
            any_hit = hit.any(axis=1)
            idx = active[any_hit]
            taus[idx] = n0 + hit[any_hit].argmax(axis=1)
            crossed[idx] = True
            active = active[~any_hit]
            n0 += windows
        return taus, crossed

    parts = _run_blocks(block, cfg)
    taus = np.concatenate([p[0] for p in parts])
    crossed = np.concatenate([p[1] for p in parts])
    truncated = 1.0 - crossed.mean()
    sample = PassageSample(taus, spec.L, h, cap, float(truncated))
    if sample.warning:
        log.warning("%.2f%% of runs hit max_horizon=%d; ARL is biased low", 100 * truncated, cap)
    return sample


def simulate_arl(spec: ProcessSpec, h: float, cfg: MCConfig) -> ArlEstimate:
    sample = simulate_passage(spec, h, cfg)
    t = sample.taus.astype(float)
    se = float(t.std(ddof=1) / math.sqrt(t.size)) if t.size > 1 else 0.0
    return ArlEstimate(float(t.mean()), "mc", se)
