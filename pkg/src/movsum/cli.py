"""Command-line front end.

Subcommands: ``bcp``, ``table``, ``curves``, ``calibrate``.  Output is CSV
(with the run manifest as a leading ``#`` JSON comment) or JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable

import numpy as np

from . import __version__
from . import mc
from .arl import PassageDistribution, arl_cda, glaz_arl_many, glaz_bcp
from .bcp_long import cda_bcp_long, diffusion_bcp_long
from .bcp_short import cda_bcp_short, diffusion_bcp_short, durbin_bcp, pch_bcp
from .core import ProcessSpec, h_from_threshold, threshold_from_h
from .errors import InvalidInput, MovsumError, RangeError, SingularInput
from .estimates import BcpEstimate

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

METHODS = ("durbin", "pch", "diffusion", "cda", "glaz", "mc")
H_BRACKET = (-2.0, 10.0)
LEVELS = (0.05, 0.10, 0.15, 0.20)
TABLE1 = ((5, 5), (10, 5), (100, 100), (200, 100))
TABLE2 = ((10, 50), (10, 500), (50, 250), (50, 2500))
TABLE3_L = (10, 50)
TABLE3_H = tuple(1.0 + 0.25 * i for i in range(9))


# ---- evaluation helpers -------------------------------------------------


def bcp_estimate(method: str, h: float, M: int, L: int, cfg: mc.MCConfig, spec: ProcessSpec | None = None) -> BcpEstimate:
    """One BCP approximation; diffusion and cda pick the short or long branch from ``M/L``."""
    spec = spec or ProcessSpec(L)
    T = M / L
    if method == "durbin":
        return BcpEstimate(float(durbin_bcp(h, T)), method)
    if method == "pch":
        return BcpEstimate(float(pch_bcp(h, T)), method)
    if method == "diffusion":
        v = diffusion_bcp_short(h, T) if T <= 1 else diffusion_bcp_long(h, T)
        return BcpEstimate(v, method)
    if method == "cda":
        v = cda_bcp_short(h, M, L) if M <= L else cda_bcp_long(h, M, L)
        return BcpEstimate(v, method)
    if method == "glaz":
        return glaz_bcp(h, M, L, cfg, spec)
    if method == "mc":
        r = mc.simulate_bcp(spec, M, h, cfg)
        return BcpEstimate(r.estimate, method, r.stderr)
    raise InvalidInput(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def check_methods(methods, M: int, L: int):
    for m in methods:
        if m not in METHODS:
            raise InvalidInput(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if "glaz" in methods and M < 2 * L:
        raise InvalidInput(f"glaz requires M ≥ 2L (got M={M}, L={L})")


def bisect_decreasing(f: Callable[[float], float], target: float, lo: float, hi: float, rtol: float = 1e-6, max_iter: int = 200):
    """Solve ``f(h) = target`` for nonincreasing ``f`` on ``[lo, hi]``.

    Returns ``(h, f(h))``.  Stops once the value is within ``rtol`` of the
    target or the bracket collapses (step functions, e.g. empirical BCPs).
    """
    f_lo, f_hi = f(lo), f(hi)
    if not f_hi <= target <= f_lo:
        raise RangeError(
            f"target {target!r} outside achievable range [{f_hi!r}, {f_lo!r}] over h in [{lo}, {hi}]",
            low=f_hi,
            high=f_lo,
        )
    best = (lo, f_lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        v = f(mid)
        if abs(v - target) < abs(best[1] - target):
            best = (mid, v)
        if abs(v - target) <= rtol * abs(target):
            return mid, v
        if v >= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, abs(lo)):
            break
    return best


def empirical_level_h(maxima: np.ndarray, level: float, bracket=H_BRACKET):
    """Threshold at which the simulated BCP equals ``level`` (bisection on the step function)."""
    n = maxima.size
    srt = np.sort(maxima)

    def p(h):
        return (n - np.searchsorted(srt, h, side="left")) / n

    lo, hi = bracket
    if not p(hi) <= level <= p(lo):
        raise RangeError(f"level {level} outside simulated range over h in [{lo}, {hi}]", low=p(hi), high=p(lo))
    # keep p(lo) >= level > p(hi); converges to the order statistic where p hits the level
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p(mid) >= level:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, abs(lo)):
            break
    return lo, p(lo)


# ---- subcommands --------------------------------------------------------


def _cfg(args) -> mc.MCConfig:
    return mc.MCConfig(
        replications=args.replications,
        seed=args.seed,
        thread_hint=args.threads,
        max_horizon=getattr(args, "max_horizon", None),
    )


def _resolve_h(args, spec: ProcessSpec) -> float:
    if (args.h is None) == (args.H is None):
        raise InvalidInput("give exactly one of --h (standardized) or --H (raw threshold)")
    return args.h if args.h is not None else h_from_threshold(args.H, spec).h


def cmd_bcp(args):
    spec = ProcessSpec(args.L, args.mu, args.sigma)
    h = _resolve_h(args, spec)
    methods = _split(args.methods)
    check_methods(methods, args.M, args.L)
    cfg = _cfg(args)
    rows = []
    for m in methods:
        est = bcp_estimate(m, h, args.M, args.L, cfg, spec)
        value = est.value
        if m == "durbin":
            # the formula is not a probability; clamp for display only
            value = min(1.0, max(0.0, value))
        rows.append(
            {
                "method": m,
                "branch": "short" if args.M <= args.L else "long",
                "L": args.L,
                "M": args.M,
                "h": h,
                "H": threshold_from_h(h, spec).H,
                "value": value,
                "stderr": est.stderr,
            }
        )
    return rows, {"L": args.L, "M": args.M, "h": h, "mu": args.mu, "sigma": args.sigma, "methods": methods}


def bcp_table(configs, cfg: mc.MCConfig, levels=LEVELS):
    rows = []
    for L, M in configs:
        maxima = mc.simulate_maxima(ProcessSpec(L), M, cfg)
        for level in levels:
            h, p_mc = empirical_level_h(maxima, level)
            cda = cda_bcp_short(h, M, L) if M <= L else cda_bcp_long(h, M, L)
            rows.append(
                {
                    "L": L,
                    "M": M,
                    "level": level,
                    "h": h,
                    "mc": p_mc,
                    "cda": cda,
                    "rel_error_pct": 100.0 * (cda - p_mc) / p_mc,
                }
            )
    return rows


def arl_table(cfg: mc.MCConfig, methods=("cda", "mc", "glaz"), Ls=TABLE3_L, hs=TABLE3_H):
    rows = []
    for L in Ls:
        glaz = glaz_arl_many(hs, L, cfg) if "glaz" in methods else [None] * len(hs)
        for h, g in zip(hs, glaz):
            row = {"L": L, "h": h}
            if "cda" in methods:
                row["cda"] = arl_cda(h, L).value
            if "mc" in methods:
                est = mc.simulate_arl(ProcessSpec(L), h, cfg)
                row["mc"], row["mc_stderr"] = est.value, est.stderr
            if g is not None:
                row["glaz"], row["glaz_half_width"] = g.value, g.half_width
            rows.append(row)
    return rows


def cmd_table(args):
    cfg = _cfg(args)
    if args.which == "table1":
        rows = bcp_table(TABLE1, cfg)
    elif args.which == "table2":
        rows = bcp_table(TABLE2, cfg)
    else:
        rows = arl_table(cfg, tuple(_split(args.methods)))
    return rows, {"which": args.which}


def _grid(text: str) -> np.ndarray:
    """``a:b:step`` (inclusive) or a comma list."""
    text = text.strip()
    if not text:
        raise InvalidInput("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidInput(f"range grid must be start:stop:step, got {text!r}")
        a, b, s = (float(p) for p in parts)
        if not s > 0 or b < a:
            raise InvalidInput(f"bad range grid {text!r}")
        n = int(math.floor((b - a) / s + 1e-9)) + 1
        g = a + s * np.arange(n)
    else:
        g = np.array([float(p) for p in text.split(",") if p.strip()])
    if g.size == 0:
        raise InvalidInput("empty grid")
    if not np.all(np.isfinite(g)):
        raise InvalidInput("grid values must be finite")
    if np.any(np.diff(g) <= 0):
        raise InvalidInput("grid must be strictly increasing")
    return g


def cmd_curves(args):
    cfg = _cfg(args)
    spec = ProcessSpec(args.L)
    methods = _split(args.methods)
    rows = []
    if (args.h_grid is None) == (args.t_grid is None):
        raise InvalidInput("give exactly one of --h-grid or --t-grid")
    if args.h_grid is not None:
        if args.M is None:
            raise InvalidInput("--h-grid needs --M")
        hs = _grid(args.h_grid)
        check_methods(methods, args.M, args.L)
        maxima = mc.simulate_maxima(spec, args.M, cfg) if "mc" in methods else None
        for h in hs:
            for m in methods:
                if m == "mc":
                    r = mc.bcp_from_maxima(maxima, h)
                    value, se = r.estimate, r.stderr
                else:
                    est = bcp_estimate(m, h, args.M, args.L, cfg, spec)
                    value, se = est.value, est.stderr
                rows.append({"x": float(h), "method": m, "value": value, "stderr": se})
        meta = {"L": args.L, "M": args.M, "abscissa": "h", "methods": methods}
    else:
        if args.h is None:
            raise InvalidInput("--t-grid needs --h")
        ts = _grid(args.t_grid)
        if ts[0] < 0:
            raise InvalidInput("t-grid must be nonnegative")
        for m in methods:
            if m not in ("cda", "mc"):
                raise InvalidInput(f"t-grid curves support methods cda and mc, got {m!r}")
        if "cda" in methods:
            F = np.atleast_1d(PassageDistribution(args.h, args.L).cdf(ts))
            rows += [{"x": float(t), "method": "cda", "value": float(v), "stderr": None} for t, v in zip(ts, F)]
        if "mc" in methods:
            sample = mc.simulate_passage(spec, args.h, cfg)
            E = sample.ecdf(ts)
            n = sample.taus.size
            rows += [
                {"x": float(t), "method": "mc", "value": float(v), "stderr": math.sqrt(v * (1 - v) / n)} for t, v in zip(ts, E)
            ]
        meta = {"L": args.L, "h": args.h, "abscissa": "t", "methods": methods}
    return rows, meta


def cmd_calibrate(args):
    spec = ProcessSpec(args.L, args.mu, args.sigma)
    if args.target == "bcp":
        if args.M is None:
            raise InvalidInput("bcp calibration needs --M")
        if not 0 < args.value < 1:
            raise RangeError(f"BCP target must lie in (0, 1), got {args.value}", low=0.0, high=1.0)

        def f(h):
            return cda_bcp_short(h, args.M, args.L) if args.M <= args.L else cda_bcp_long(h, args.M, args.L)

        h, achieved = bisect_decreasing(f, args.value, *H_BRACKET)
    else:
        if not args.value > 0:
            raise RangeError(f"ARL target must be positive, got {args.value}", low=0.0, high=math.inf)

        def neg_arl(h):
            try:
                return -arl_cda(h, args.L).value
            except SingularInput:
                return -math.inf

        h, achieved = bisect_decreasing(neg_arl, -args.value, *H_BRACKET)
        achieved = -achieved
    row = {"target": args.target, "value": args.value, "h": h, "H": threshold_from_h(h, spec).H, "achieved": achieved}
    return [row], {"L": args.L, "M": args.M, "target": args.target, "value": args.value, "mu": args.mu, "sigma": args.sigma}


# ---- output -------------------------------------------------------------


def _split(text: str):
    return [m.strip() for m in text.split(",") if m.strip()]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render(rows, manifest: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"manifest": manifest, "rows": rows}, default=float, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(manifest, default=float) + "\n")
    fields = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in fields])
    return buf.getvalue()


def read_csv(text: str):
    """Parse CSV emitted by :func:`render` back to ``(manifest, rows)``; numbers come back as floats."""
    lines = text.splitlines()
    manifest = json.loads(lines[0][2:]) if lines and lines[0].startswith("# ") else {}
    body = lines[1:] if manifest else lines
    rows = []
    for rec in csv.DictReader(body):
        out = {}
        for k, v in rec.items():
            if v == "":
                out[k] = None
                continue
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
        rows.append(out)
    return manifest, rows


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="movsum", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None, help=f"MC seed (default: ${mc.SEED_ENV} or {mc.DEFAULT_SEED})")
    common.add_argument("--replications", type=int, default=100_000)
    common.add_argument("--threads", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bcp", parents=[common], help="boundary crossing probability")
    b.add_argument("--L", type=int, required=True)
    b.add_argument("--M", type=int, required=True)
    b.add_argument("--h", type=float)
    b.add_argument("--H", type=float)
    b.add_argument("--mu", type=float, default=0.0)
    b.add_argument("--sigma", type=float, default=1.0)
    b.add_argument("--methods", default="durbin,pch,diffusion,cda")
    b.set_defaults(func=cmd_bcp)

    t = sub.add_parser("table", parents=[common], help="reproduce an accuracy table")
    t.add_argument("which", choices=("table1", "table2", "table3"))
    t.add_argument("--methods", default="cda,mc,glaz", help="table3 only")
    t.set_defaults(func=cmd_table)

    c = sub.add_parser("curves", parents=[common], help="plot-ready curve data")
    c.add_argument("--L", type=int, required=True)
    c.add_argument("--M", type=int)
    c.add_argument("--h", type=float, help="threshold for --t-grid")
    c.add_argument("--h-grid")
    c.add_argument("--t-grid")
    c.add_argument("--max-horizon", type=int, default=None)
    c.add_argument("--methods", default="durbin,pch,diffusion,cda,mc")
    c.set_defaults(func=cmd_curves)

    k = sub.add_parser("calibrate", parents=[common], help="threshold for a target BCP or ARL (CDA)")
    k.add_argument("target", choices=("bcp", "arl"))
    k.add_argument("value", type=float)
    k.add_argument("--L", type=int, required=True)
    k.add_argument("--M", type=int)
    k.add_argument("--mu", type=float, default=0.0)
    k.add_argument("--sigma", type=float, default=1.0)
    k.add_argument("--method", choices=("cda",), default="cda")
    k.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows, params = args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MovsumError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = {
        "command": args.command,
        "parameters": {
            **params,
            "seed": mc.MCConfig(seed=args.seed).resolved_seed,
            "replications": args.replications,
            "format": args.format,
            "out": args.out,
        },
        "version": __version__,
    }
    text = render(rows, manifest, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK
