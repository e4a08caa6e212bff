"""Command-line front end.

Exit codes: 0 success or pass, 1 check failure, 2 usage error,
3 numerical non-convergence.  Output files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bounds import EnvelopeParams, a0, lemma22_check, sandwich_fit
from .checker import XiGrid, bernstein_spotcheck, check_lower_assumptions, check_upper_assumptions, derivative_selftest, fit_alpha
from .density import DensityQuery, LogGrid, convolution_check, density, density_grid, normalization
from .errors import Divergence, DomainError, GridTooCoarse, LevyDensError, NoConvergence, ToleranceNotMet
from .symbol import LevySymbol, parse_symbol

__all__ = ["main", "run", "parse_range", "CliConfig"]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3

DEFAULTS = {
    "symbol": "chain:n=1,eps=1.0",
    "t": 1.0,
    "t1": 0.5,
    "t2": 0.5,
    "x": "0.1:10:50:log",
    "xi": "1:1e6:400:log",
    "method": "pairing",
    "tol": 1e-10,
    "out": None,
    "format": None,
    "eta1_min": 1.0,
    "case": 1,
    "alpha": 0.0,
    "alpha_eps": 1.0,
    "a": "1,10,100,1e4",
    "limit": 1e-2,
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    command: str
    symbol: LevySymbol
    options: dict


def parse_range(text: str) -> np.ndarray:
    """``min:max:points[:log|linear]`` or a single number."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) not in (3, 4):
            raise UsageError(f"range {text!r} must be min:max:points[:log|linear]")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"bad number in range {text!r}") from None
    spacing = parts[3] if len(parts) == 4 else "log"
    if spacing not in ("log", "linear"):
        raise UsageError("spacing must be log or linear")
    if count < 1:
        raise UsageError("points must be >= 1")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise UsageError("range needs finite min <= max")
    if spacing == "log":
        if lo <= 0:
            raise UsageError("log spacing needs min > 0")
        return np.geomspace(lo, hi, count) if count > 1 else np.array([lo])
    return np.linspace(lo, hi, count) if count > 1 else np.array([lo])


def _xi_grid(text: str) -> XiGrid:
    pts = parse_range(text)
    spacing = str(text).split(":")[3] if str(text).count(":") == 3 else "log"
    return XiGrid(float(pts[0]), float(pts[-1]), int(pts.size), spacing)


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--symbol", help="kind:n=..,eps=.. with kind chain, sym or sq")
    common.add_argument("--t", type=float, help="time t > 0")
    common.add_argument("--x", help="x range min:max:points:log|linear")
    common.add_argument("--xi", help="xi range for assumption checks")
    common.add_argument("--method", choices=["pairing", "reference", "auto"])
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--config", help="JSON file with the same keys; flags win")
    common.add_argument("--seedless", action="store_true", help="accepted for compatibility; nothing is random")

    parser = argparse.ArgumentParser(prog="levydens", description="Iterated-logarithm Levy densities and bound checks")
    parser.add_argument("--version", action="version", version=f"levydens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("density", parents=[common], help="densities on an x grid (CSV)")
    sub.add_parser("bounds", parents=[common], help="fit the two-sided envelopes")
    p = sub.add_parser("assumptions", parents=[common], help="certify the symbol assumptions")
    p.add_argument("--eta1-min", dest="eta1_min", type=float)
    p = sub.add_parser("convolve", parents=[common], help="semigroup check p_t1 * p_t2 = p_(t1+t2)")
    p.add_argument("--t1", type=float)
    p.add_argument("--t2", type=float)
    p.add_argument("--limit", type=float, help="largest accepted deviation")
    p = sub.add_parser("lemma22", parents=[common], help="weighted-integral estimate ratios")
    p.add_argument("--case", type=int, choices=[1, 2, 3])
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-eps", dest="alpha_eps", type=float)
    p.add_argument("--a", help="comma-separated a values")
    sub.add_parser("selfcheck", parents=[common], help="quick end-to-end self-check")
    return parser


def _resolve(ns) -> dict:
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "seedless")}
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(file_opts, dict):
            raise UsageError("config must be a JSON object")
        for key, val in file_opts.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            if opts.get(key) is None:
                opts[key] = val
    for key, val in DEFAULTS.items():
        if opts.get(key) is None:
            opts[key] = val
    return opts


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(prefix=".levydens-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n"


def _summary(line: str, out):
    print(line, file=sys.stdout if out else sys.stderr)


def _cmd_density(cfg: CliConfig):
    o = cfg.options
    xs = parse_range(o["x"])
    if np.any(xs == 0):
        raise UsageError("x grid must not contain 0")
    results = density_grid(DensityQuery(cfg.symbol, o["t"], list(xs), o["method"], o["tol"]))
    if (o["format"] or "csv") == "json":
        rows = [dict(r.__dict__) for r in results]
        text = _json({"schema_version": SCHEMA_VERSION, "symbol": cfg.symbol.spec(), "results": rows})
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "t", "p", "err_est", "method", "k_used"])
        for r in results:
            w.writerow([repr(float(r.x)), repr(float(r.t)), repr(float(r.p)), repr(float(r.err_est)), r.method_used, r.k_used])
        text = buf.getvalue()
    failed = [r for r in results if r.error]
    _write(text, o["out"])
    _summary(f"density: {len(results)} points, {len(failed)} failed, symbol {cfg.symbol.spec()}, t={o['t']!r}", o["out"])
    return EXIT_NOCONV if failed else EXIT_OK


def _cmd_bounds(cfg: CliConfig):
    o = cfg.options
    sym, t = cfg.symbol, o["t"]
    xs = parse_range(o["x"])
    if np.any(xs <= 0):
        raise UsageError("bounds needs a positive x grid")
    results = density_grid(DensityQuery(sym, t, list(xs), o["method"], o["tol"]))
    if any(r.error for r in results):
        return EXIT_NOCONV
    alpha_up = fit_alpha(sym)
    alpha_low = check_lower_assumptions(sym).fitted["alpha_0"] if sym.symmetric else alpha_up
    rep = sandwich_fit(results, EnvelopeParams(sym.params, alpha_up), EnvelopeParams(sym.params, alpha_low))
    doc = rep.as_dict()
    doc["symbol"] = sym.spec()
    _write(_json(doc), o["out"])
    _summary(f"bounds: pass={rep.passed} c_up={rep.c_up:.6g} c_low={rep.c_low:.6g}", o["out"])
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_assumptions(cfg: CliConfig):
    o = cfg.options
    grid = _xi_grid(o["xi"])
    upper = check_upper_assumptions(cfg.symbol, grid, eta1_min=o["eta1_min"])
    doc = {"schema_version": SCHEMA_VERSION, "symbol": cfg.symbol.spec(), "upper": upper.as_dict()}
    passed = upper.passed
    if cfg.symbol.symmetric:
        lower = check_lower_assumptions(cfg.symbol, grid)
        doc["lower"] = lower.as_dict()
        passed = passed and lower.passed
    doc["pass"] = passed
    _write(_json(doc), o["out"])
    _summary(f"assumptions: pass={passed} alpha_eps={upper.fitted['alpha_eps']:.6g}", o["out"])
    return EXIT_OK if passed else EXIT_FAIL


def _cmd_convolve(cfg: CliConfig):
    o = cfg.options
    xs = parse_range(o["x"])
    if not (o["t1"] > 0 and o["t2"] > 0):
        raise UsageError("t1 and t2 must be > 0")
    dev = convolution_check(cfg.symbol, o["t1"], o["t2"], xs)
    passed = dev < o["limit"]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "symbol": cfg.symbol.spec(),
        "t1": o["t1"],
        "t2": o["t2"],
        "x": [float(v) for v in xs],
        "max_abs_dev": dev,
        "limit": o["limit"],
        "pass": passed,
    }
    _write(_json(doc), o["out"])
    _summary(f"convolve: max_abs_dev={dev:.3g} pass={passed}", o["out"])
    return EXIT_OK if passed else EXIT_FAIL


def _cmd_lemma22(cfg: CliConfig):
    o = cfg.options
    try:
        a_vals = [float(v) for v in str(o["a"]).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --a list {o['a']!r}") from None
    rep = lemma22_check(o["case"], o["alpha"], o["t"], cfg.symbol.params, a_vals, o["alpha_eps"])
    doc = rep.as_dict()
    if o["case"] == 2:
        doc["a0"] = a0(o["alpha"], o["t"], cfg.symbol.params, o["alpha_eps"])
    _write(_json(doc), o["out"])
    _summary(f"lemma22: case {rep.case} sup_ratio={rep.sup_ratio:.6g} pass={rep.passed}", o["out"])
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_selfcheck(cfg: CliConfig):
    o = cfg.options
    checks = {}
    gamma = parse_symbol("chain:n=1,eps=1.0")
    xs = np.geomspace(0.1, 10, 12)
    rel = max(abs(density(gamma, 2.0, x).p / (x * math.exp(-x)) - 1.0) for x in xs)
    checks["gamma_density_rel_err"] = {"value": rel, "pass": rel < 1e-6}
    laplace = parse_symbol("sq:n=1,eps=1.0")
    rel = max(abs(density(laplace, 1.0, x).p / (0.5 * math.exp(-x)) - 1.0) for x in (0.1, 1.0, 5.0))
    checks["laplace_density_rel_err"] = {"value": rel, "pass": rel < 1e-5}
    mass, err = normalization(gamma, 2.0, LogGrid(1e-6, 1e3))
    checks["gamma_mass"] = {"value": mass, "err": err, "pass": abs(mass - 1.0) < 1e-6}
    grid = XiGrid(1e-3, 1e6, 200)
    for spec in ("chain:n=2,eps=1.0", "chain:n=2,eps=0.5", "sym:n=2,eps=1.0", "sq:n=1,eps=1.0"):
        e = derivative_selftest(parse_symbol(spec), grid)
        checks[f"derivatives {spec}"] = {"value": e, "pass": e < 1e-6}
    up = check_upper_assumptions(cfg.symbol, XiGrid(1.0, 1e6, 200))
    checks[f"upper_assumptions {cfg.symbol.spec()}"] = {"value": up.fitted["alpha_eps"], "pass": up.passed}
    b = bernstein_spotcheck(cfg.symbol.params, 4)
    checks["bernstein"] = {"value": len(b.inconclusive), "pass": b.passed}
    passed = all(c["pass"] for c in checks.values())
    _write(_json({"schema_version": SCHEMA_VERSION, "checks": checks, "pass": passed}), o["out"])
    _summary(f"selfcheck: {sum(c['pass'] for c in checks.values())}/{len(checks)} passed", o["out"])
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "density": _cmd_density,
    "bounds": _cmd_bounds,
    "assumptions": _cmd_assumptions,
    "convolve": _cmd_convolve,
    "lemma22": _cmd_lemma22,
    "selfcheck": _cmd_selfcheck,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        opts = _resolve(ns)
        if not (isinstance(opts["t"], (int, float)) and opts["t"] > 0 and math.isfinite(opts["t"])):
            raise UsageError("--t must be finite and > 0")
        if not opts["tol"] > 0:
            raise UsageError("--tol must be > 0")
        cfg = CliConfig(ns.command, parse_symbol(opts["symbol"]), opts)
        return COMMANDS[ns.command](cfg)
    except (UsageError, DomainError) as exc:
        print(f"levydens: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoConvergence, ToleranceNotMet, Divergence, GridTooCoarse) as exc:
        print(f"levydens: no convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except LevyDensError as exc:
        print(f"levydens: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main(argv=None):
    sys.exit(run(argv))
