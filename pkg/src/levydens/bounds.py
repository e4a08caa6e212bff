"""Two-sided density envelopes and the weighted-integral estimates behind them.

Envelopes are returned as constant-free shapes; ``EnvelopeParams.c_t``
is a multiplier the caller fits (see :func:`sandwich_fit`).  With
``z = 1/|x|`` the small-``x`` shape is

    (1/|x|) exp(-alpha t s_n(z)**eps) s_n(z)**(eps-1) / r_{n-1}(z)

and the large-``x`` shapes are ``|x|^(-1-eps)`` (upper, ``eps < 1``),
``|x|^(eps-2)`` (lower, ``eps < 1``), ``|x|^-2 log(1+|x|)`` (``eps = 1``)
or ``|x|^-2`` when ``refined_large_x`` is set.  ``r_0 = 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import iterlog
from .errors import DomainError, Divergence, InsufficientCoverage
from .symbol import IterLogParams

__all__ = [
    "EnvelopeParams",
    "EnvelopeReport",
    "Lemma22Report",
    "upper_envelope",
    "lower_envelope",
    "small_x_shape",
    "weight",
    "sandwich_fit",
    "lemma22_check",
    "a0",
    "a0_closed_form",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EnvelopeParams:
    params: IterLogParams
    alpha: float
    c_t: float = 1.0
    refined_large_x: bool = False

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError("alpha must be finite and > 0")
        if not (self.c_t > 0 and math.isfinite(self.c_t)):
            raise DomainError("c_t must be finite and > 0")


def _r_prev(n, z):
    # r_{n-1} with the empty-product convention r_0 = 1
    return iterlog.r(n - 1, z) if n > 1 else np.ones_like(np.asarray(z, dtype=float))


def weight(params: IterLogParams, alpha_eps: float, t: float, z, power: float = 0.0):
    """``z**power exp(-t alpha_eps s_n**eps) s_n**(eps-1) / r_{n-1}`` at ``z > 0``."""
    z = np.asarray(z, dtype=float)
    n, eps = params.n, params.eps
    sn = iterlog.s(n, z)
    out = z**power * np.exp(-t * alpha_eps * sn**eps) / _r_prev(n, z)
    if eps != 1.0:
        out = out * sn ** (eps - 1.0)
    return out


def small_x_shape(params: IterLogParams, alpha: float, t: float, x):
    ax = np.abs(np.asarray(x, dtype=float))
    return weight(params, alpha, t, 1.0 / ax) / ax


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x == 0) or not np.all(np.isfinite(x)):
        raise DomainError("envelopes need finite x != 0")
    return np.abs(x)


def _out(arr):
    arr = np.asarray(arr)
    return arr[()] if arr.ndim == 0 else arr


def upper_envelope(ep: EnvelopeParams, t: float, x):
    """Upper density envelope (times ``c_t``)."""
    ax = _check_x(x)
    eps = ep.params.eps
    if eps < 1.0:
        large = ax ** (-1.0 - eps)
    elif ep.refined_large_x:
        large = ax**-2.0
    else:
        large = ax**-2.0 * np.log1p(ax)
    small = small_x_shape(ep.params, ep.alpha, t, np.minimum(ax, 1.0))
    return _out(ep.c_t * np.where(ax <= 1.0, small, large))


def lower_envelope(ep: EnvelopeParams, t: float, x):
    """Lower density envelope (times ``c_t``)."""
    ax = _check_x(x)
    eps = ep.params.eps
    if eps < 1.0:
        large = ax ** (eps - 2.0)
    elif ep.refined_large_x:
        large = ax**-2.0
    else:
        large = ax**-2.0 * np.log1p(ax)
    small = small_x_shape(ep.params, ep.alpha, t, np.minimum(ax, 1.0))
    return _out(ep.c_t * np.where(ax <= 1.0, small, large))


@dataclass
class EnvelopeReport:
    """Outcome of a sandwich fit; ``passed`` is the verdict."""

    c_up: float
    c_low: float
    passed: bool
    worst_points: list
    spreads: dict
    parameters: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.c_up, self.c_low, self.passed, self.worst_points))

    def as_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, default=float)


def sandwich_fit(samples: Sequence, ep_upper: EnvelopeParams, ep_lower: EnvelopeParams,
                 spread: float = 1e3, min_per_regime: int = 5) -> EnvelopeReport:
    """Fit ``c_up = max p/upper`` and ``c_low = min p/lower`` over samples.

    Samples split into ``|x| <= 1`` and ``|x| > 1``; each regime needs
    ``min_per_regime`` distinct points.  Passes when both constants are
    finite and positive and, in each regime, the ratio ``p/shape``
    varies by less than ``spread`` for both envelopes.
    """
    if ep_upper.params != ep_lower.params:
        raise DomainError("upper and lower envelopes must share (n, eps)")
    if not samples:
        raise InsufficientCoverage("no samples")
    t = samples[0].t
    if any(s.t != t for s in samples):
        raise DomainError("samples must share one t")
    xs = np.array([s.x for s in samples], dtype=float)
    ps = np.array([s.p for s in samples], dtype=float)
    regimes = {"small_x": np.abs(xs) <= 1.0, "large_x": np.abs(xs) > 1.0}
    for name, mask in regimes.items():
        if np.unique(np.abs(xs[mask])).size < min_per_regime:
            raise InsufficientCoverage(f"regime {name} has fewer than {min_per_regime} distinct points")

    shape_up = upper_envelope(replace_c(ep_upper), t, xs)
    shape_low = lower_envelope(replace_c(ep_lower), t, xs)
    with np.errstate(divide="ignore", invalid="ignore"):
        up = ps / shape_up
        low = ps / shape_low
    c_up = float(np.max(up))
    c_low = float(np.min(low))
    ok = all(math.isfinite(c) and c > 0 for c in (c_up, c_low))
    worst, spreads = [], {}
    for name, mask in regimes.items():
        for label, ratio, pick in (("upper", up, np.argmax), ("lower", low, np.argmin)):
            r = ratio[mask]
            sp = float(np.max(r) / np.min(r)) if np.min(r) > 0 else math.inf
            spreads[f"{name}/{label}"] = sp
            ok = ok and math.isfinite(sp) and sp < spread
            i = int(pick(r))
            worst.append({"regime": name, "envelope": label, "x": float(xs[mask][i]), "ratio": float(r[i])})
    params = {
        "n": ep_upper.params.n,
        "eps": ep_upper.params.eps,
        "t": t,
        "alpha_upper": ep_upper.alpha,
        "alpha_lower": ep_lower.alpha,
        "spread_limit": spread,
    }
    return EnvelopeReport(c_up, c_low, bool(ok), worst, spreads, params)


def replace_c(ep: EnvelopeParams) -> EnvelopeParams:
    """Shape-only copy (``c_t = 1``)."""
    return EnvelopeParams(ep.params, ep.alpha, 1.0, ep.refined_large_x)


def a0(alpha: float, t: float, params: IterLogParams, alpha_eps: float = 1.0) -> float:
    """Root of ``(n - eps + eps t alpha_eps) / ((1+alpha) log(1+a0)) = 1/2``."""
    if not alpha > -1:
        raise DomainError("a0 needs alpha > -1")
    n, eps = params.n, params.eps
    return math.expm1(2.0 * (n - eps + eps * t * alpha_eps) / (1.0 + alpha))


def a0_closed_form(alpha: float, t: float, params: IterLogParams, alpha_eps: float = 1.0) -> float:
    """``exp(2 (n - 1 + alpha_eps t) / (1+alpha)) - 1``; equals :func:`a0` only at ``eps = 1``."""
    if not alpha > -1:
        raise DomainError("a0 needs alpha > -1")
    return math.expm1(2.0 * (params.n - 1 + alpha_eps * t) / (1.0 + alpha))


def _log_integral(params, alpha_eps, t, power, lo, hi):
    """``int_lo^hi weight(z) dz`` via ``z = e^v``."""
    if hi <= lo:
        return 0.0, 0.0
    f = lambda v: float(weight(params, alpha_eps, t, math.exp(v), power + 1.0))
    va, vb = math.log(lo), math.log(hi)
    pts = np.linspace(va, vb, max(int(vb - va) + 2, 2))
    total, err = 0.0, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
        err += e
    return total, err


def _tail_integral(params, alpha_eps, t, power, a, rtol=1e-12, max_panels=4000):
    """``int_a^inf weight(z) dz`` over doubling panels with a geometric remainder."""
    total, err = 0.0, 0.0
    lo, prev = a, None
    for _ in range(max_panels):
        val, e = _log_integral(params, alpha_eps, t, power, lo, 2.0 * lo)
        total += val
        err += e
        if prev is not None and prev > 0:
            q = val / prev
            if q < 1.0:
                remainder = val * q / (1.0 - q)
                if remainder <= rtol * total:
                    return total, err + remainder
        prev = val
        lo *= 2.0
    raise Divergence("tail panels did not contract; integral diverges for this power")


@dataclass
class Lemma22Report:
    case: int
    parameters: dict
    a: list
    lhs: list
    rhs_shape: list
    ratios: list
    sup_ratio: float
    limit_target: float | None
    passed: bool

    def as_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, default=float)


def lemma22_check(case: int, alpha: float, t: float, params: IterLogParams, a_grid: Sequence[float],
                  alpha_eps: float = 1.0) -> Lemma22Report:
    """Ratio of each weighted integral to its right-hand shape on ``a_grid``.

    The integrand is ``z**alpha exp(-t alpha_eps s_n**eps) s_n**(eps-1) / r_{n-1}``
    and the shape is ``a**(alpha+1)`` times the same factor at ``a``.
    Case 1 integrates over ``[1, a]`` (``alpha > -1``), case 2 over
    ``[a0, a]`` (``alpha > -1``, ``a >= a0``), case 3 over ``[a, inf)``
    (``alpha < -1``).  Passes when every ratio is finite.
    """
    if case not in (1, 2, 3):
        raise DomainError("case must be 1, 2 or 3")
    if not t > 0:
        raise DomainError("t must be > 0")
    if case in (1, 2) and not alpha > -1:
        raise Divergence(f"case {case} needs alpha > -1")
    if case == 3 and not alpha < -1:
        raise Divergence("case 3 needs alpha < -1; the tail integral diverges otherwise")
    a_vals = [float(a) for a in a_grid]
    if any(not (a >= 1) or not math.isfinite(a) for a in a_vals):
        raise DomainError("a must be finite and >= 1")
    start = a0(alpha, t, params, alpha_eps) if case == 2 else 1.0
    if case == 2 and any(a < start for a in a_vals):
        raise DomainError(f"case 2 needs a >= a0 = {start:.6g}")

    lhs, shapes, ratios = [], [], []
    for a in a_vals:
        if case == 3:
            val, _ = _tail_integral(params, alpha_eps, t, alpha, a)
        else:
            val, _ = _log_integral(params, alpha_eps, t, alpha, start, a)
        shape = float(a ** (alpha + 1.0) * weight(params, alpha_eps, t, a))
        lhs.append(val)
        shapes.append(shape)
        ratios.append(val / shape)
    sup = max(ratios) if ratios else 0.0
    target = 1.0 / (alpha + 1.0) if case == 1 else (-1.0 / (alpha + 1.0) if case == 3 else None)
    return Lemma22Report(
        case=case,
        parameters={"alpha": alpha, "t": t, "n": params.n, "eps": params.eps, "alpha_eps": alpha_eps, "a_start": start},
        a=a_vals,
        lhs=lhs,
        rhs_shape=shapes,
        ratios=ratios,
        sup_ratio=sup,
        limit_target=target,
        passed=bool(all(math.isfinite(r) and r >= 0 for r in ratios)),
    )
