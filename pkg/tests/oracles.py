"""Independent simulation oracles shared by the tests."""

import numpy as np


def bridge_bcp(a, b, R, *, mu=0.0, z=None, paths=100_000, steps=100, seed=0):
    """Path simulation of Brownian motion (drift ``mu``) against ``a + b t`` on ``[0, R]``.

    Between grid points the crossing probability of the Brownian bridge over
    a straight line is exact, ``exp(-2 d0 d1 / dt)``, so the estimator has no
    discretization bias.  Returns ``(crossing_probability, stderr)``; with
    ``z`` given it instead returns P(X(R) <= z, no crossing).
    """
    rng = np.random.default_rng(seed)
    dt = R / steps
    t = dt * np.arange(steps + 1)
    out = np.empty(paths)
    chunk = 20_000
    for lo in range(0, paths, chunk):
        n = min(chunk, paths - lo)
        inc = rng.standard_normal((n, steps)) * np.sqrt(dt) + mu * dt
        x = np.concatenate([np.zeros((n, 1)), np.cumsum(inc, axis=1)], axis=1)
        d = a + b * t - x
        alive = np.all(d > 0, axis=1)
        dd = np.clip(d, 0, None)
        surv = np.prod(-np.expm1(-2 * dd[:, :-1] * dd[:, 1:] / dt), axis=1) * alive
        if z is None:
            out[lo : lo + n] = 1 - surv
        else:
            out[lo : lo + n] = surv * (x[:, -1] <= z)
    return out.mean(), out.std(ddof=1) / np.sqrt(paths)


def limiting_process_bcp(h, T, *, reps=20_000, steps_per_unit=1000, seed=0):
    """Crossing frequency of ``zeta(t) = B(t+1) - B(t)`` on a grid of ``[0, T]``.

    The grid maximum undershoots the continuous one; the returned threshold
    shift ``0.5826 sqrt(2 dt)`` (increment variance ``2 dt``) lets callers
    compare against a continuous formula at ``h + shift``.
    """
    rng = np.random.default_rng(seed)
    dt = 1.0 / steps_per_unit
    n_window = steps_per_unit
    n_t = int(round(T * steps_per_unit))
    hits = np.zeros(reps, dtype=bool)
    chunk = max(1, 4_000_000 // (n_window + n_t + 1))
    for lo in range(0, reps, chunk):
        n = min(chunk, reps - lo)
        B = np.concatenate(
            [np.zeros((n, 1), np.float32), np.cumsum(rng.standard_normal((n, n_window + n_t), dtype=np.float32), axis=1)],
            axis=1,
        ) * np.float32(np.sqrt(dt))
        zeta = B[:, n_window:] - B[:, : n_t + 1]
        hits[lo : lo + n] = zeta.max(axis=1) >= h
    p = hits.mean()
    return p, np.sqrt(p * (1 - p) / reps), 0.5826 * np.sqrt(2 * dt)
