"""Transition densities by Fourier inversion, plus validators.

``p_t(x) = (2 pi)^{-1} [int f1(xi) cos(x xi) + int f2(xi) sin(x xi)]``
with ``f1 + i f2 = exp(-t eta)``.  Symmetric symbols have ``f2 = 0``.

The validators (:func:`normalization`, :func:`convolution_check`,
:func:`cf_roundtrip`) integrate densities over log-spaced panels.  The
mass of ``[-h, h]`` near the singular point 0 is never integrated from
samples; it comes from the identity
``P(|X| <= h) = pi^{-1} int f1(xi) sin(h xi) / xi d xi``, evaluated with
the same pairing integrator.
"""

from __future__ import annotations

import enum
import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import kernel
from .errors import (
    DomainError,
    GridTooCoarse,
    LevyDensError,
    NoConvergence,
    SingularityError,
    ToleranceNotMet,
)
from .oscint import OscIntegrand, PairingConfig, cos_transform, gauss_legendre, reference_integral, sin_transform
from .symbol import Kind, LevySymbol, eta

__all__ = [
    "Method",
    "DensityQuery",
    "DensityResult",
    "LogGrid",
    "density",
    "density_grid",
    "near_zero_mass",
    "normalization",
    "convolution_check",
    "cf_roundtrip",
    "worker_count",
]

X_FLOOR = 1e-6


class Method(str, enum.Enum):
    PAIRING = "pairing"
    REFERENCE = "reference"
    AUTO = "auto"
    ENVELOPE = "envelope"


@dataclass(frozen=True)
class DensityResult:
    x: float
    t: float
    p: float
    err_est: float
    method_used: str
    k_used: int
    error: Optional[str] = None


@dataclass(frozen=True)
class DensityQuery:
    symbol: LevySymbol
    t: float
    xs: Sequence[float]
    method: str = "pairing"
    tol: float = 1e-10

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("t must be > 0")
        if any(x == 0 for x in self.xs):
            raise SingularityError("density is not evaluated at x = 0")
        if not self.tol > 0:
            raise DomainError("tol must be > 0")
        Method(self.method)


@dataclass(frozen=True)
class LogGrid:
    """Log-spaced quadrature panels on ``[x_min, x_max]``."""

    x_min: float = 1e-6
    x_max: float = 1e4
    panels_per_decade: int = 2
    order: int = 12

    def __post_init__(self):
        if not (0 < self.x_min < self.x_max):
            raise DomainError("need 0 < x_min < x_max")
        if self.panels_per_decade < 1 or self.order < 2:
            raise DomainError("need panels_per_decade >= 1 and order >= 2")

    def nodes(self, order=None):
        """Quadrature nodes ``x`` and weights for ``int p(x) dx``."""
        order = order or self.order
        decades = math.log10(self.x_max / self.x_min)
        n_panels = max(int(math.ceil(decades * self.panels_per_decade)), 1)
        edges = np.linspace(math.log(self.x_min), math.log(self.x_max), n_panels + 1)
        x, w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * np.diff(edges)
        v = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        wv = (half[:, None] * w[None, :]).ravel()
        xs = np.exp(v)
        return xs, wv * xs


def worker_count() -> int:
    env = os.environ.get("LEVYDENS_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise DomainError(f"LEVYDENS_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _integrands(symbol: LevySymbol, t: float):
    code, n, eps = symbol.code, symbol.n, symbol.eps

    def dE(v):
        j = eta(symbol, v)
        return -t * np.asarray(j.d1) * np.exp(-t * np.asarray(j.value))

    g1 = OscIntegrand(
        lambda v: kernel.integrand(code, n, eps, t, 0, v),
        df=lambda v: np.real(dE(v)),
        parity="even",
        kernel=(code, n, eps, t, 0),
    )
    g2 = OscIntegrand(
        lambda v: kernel.integrand(code, n, eps, t, 1, v),
        df=lambda v: np.imag(dE(v)),
        parity="odd",
        kernel=(code, n, eps, t, 1),
    )
    return g1, g2


def _pairing(symbol, t, x, cfg):
    g1, g2 = _integrands(symbol, t)
    c = cos_transform(g1, x, cfg)
    value, err, k = c.value, c.err_est, c.k_used
    if not symbol.symmetric:
        s = sin_transform(g2, x, cfg)
        value += s.value
        err += s.err_est
        k = max(k, s.k_used)
    return value / (2 * math.pi), err / (2 * math.pi), k


def _reference(symbol, t, x, tol):
    code, n, eps = symbol.code, symbol.n, symbol.eps
    f1 = lambda v: float(kernel.integrand(code, n, eps, t, 0, np.array([v]))[0])
    xi0 = max(200.0, 50.0 / abs(x))
    c = reference_integral(f1, x, xi0, "cos", tol=tol, doublings=14)
    s = 0.0
    if not symbol.symmetric:
        f2 = lambda v: float(kernel.integrand(code, n, eps, t, 1, np.array([v]))[0])
        s = reference_integral(f2, x, xi0, "sin", tol=tol, doublings=14)
    return (c + s) / (2 * math.pi), 2 * tol / (2 * math.pi)


def _reference_ok(symbol, t):
    return symbol.n == 1 and symbol.eps == 1.0 and t >= 2.0


def density(symbol: LevySymbol, t: float, x: float, cfg: PairingConfig | None = None,
            method: str = "pairing", tol: float = 1e-10) -> DensityResult:
    """Transition density ``p_t(x)`` for ``x != 0``.

    ``method`` is ``"pairing"``, ``"reference"`` (plain quadrature with
    range doubling; only valid when ``exp(-t eta)`` is integrable) or
    ``"auto"`` (reference for ``n = 1, eps = 1, t >= 2``, falling back
    to pairing if the reference does not stabilise).  For
    ``|x| < 1e-6`` the value is extrapolated from ``x = +-1e-6`` along the
    small-x envelope shape and ``method_used`` is ``"envelope"``.
    """
    t = float(t)
    x = float(x)
    if not t > 0 or not math.isfinite(t):
        raise DomainError("t must be finite and > 0")
    if x == 0.0:
        raise SingularityError("density is unbounded at x = 0")
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    method = Method(method)
    if cfg is None:
        cfg = PairingConfig(tol_abs=min(tol, 1e-12) if tol else 1e-12)

    if abs(x) < X_FLOOR:
        return _envelope_extrapolate(symbol, t, x, cfg)

    if method is Method.REFERENCE or (method is Method.AUTO and _reference_ok(symbol, t)):
        try:
            p, err = _reference(symbol, t, x, min(tol, 1e-11))
            return DensityResult(x, t, float(p), float(err), Method.REFERENCE.value, 0)
        except ToleranceNotMet:
            if method is Method.REFERENCE:
                raise
    p, err, k = _pairing(symbol, t, x, cfg)
    return DensityResult(x, t, float(p), float(err), Method.PAIRING.value, int(k))


def _envelope_extrapolate(symbol, t, x, cfg):
    from . import bounds, checker

    anchor = math.copysign(X_FLOOR, x)
    p0, err0, k = _pairing(symbol, t, anchor, cfg)
    alpha = checker.fit_alpha(symbol)
    ep = bounds.EnvelopeParams(symbol.params, alpha=alpha, c_t=1.0)
    ratio = bounds.upper_envelope(ep, t, x) / bounds.upper_envelope(ep, t, anchor)
    p = p0 * ratio
    return DensityResult(x, t, float(p), float(abs(p) + err0 * ratio), Method.ENVELOPE.value, int(k))


def _safe_density(symbol, t, x, cfg, method, tol):
    try:
        return density(symbol, t, x, cfg, method, tol)
    except NoConvergence as exc:
        return DensityResult(x, t, exc.value / (2 * math.pi), exc.err_est, method, exc.k_used, str(exc))
    except LevyDensError as exc:
        return DensityResult(x, t, math.nan, math.inf, method, 0, str(exc))


def density_grid(query: DensityQuery, cfg: PairingConfig | None = None) -> list[DensityResult]:
    """Evaluate a query over its ``xs`` with a thread pool; order preserved.

    Per-point failures are embedded in the results (``error`` field).
    """
    xs = [float(x) for x in query.xs]
    if not xs:
        return []
    run = functools.partial(_safe_density, query.symbol, query.t, cfg=cfg, method=query.method, tol=query.tol)
    workers = min(worker_count(), len(xs))
    if workers == 1:
        return [run(x) for x in xs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, xs))


def _values(symbol, t, xs, cfg=None):
    """Pairing densities at many points (thread pool), as an array."""
    xs = [float(v) for v in np.ravel(xs)]
    query = DensityQuery(symbol, t, xs)
    res = density_grid(query, cfg)
    bad = [r for r in res if r.error]
    if bad:
        raise NoConvergence(f"density failed at x={bad[0].x:g}: {bad[0].error}")
    return np.array([r.p for r in res]), np.array([r.err_est for r in res])


def near_zero_mass(symbol: LevySymbol, t: float, h: float, cfg: PairingConfig | None = None):
    """``P(|X_t| <= h)`` and its error estimate, via the sine identity."""
    if not h > 0:
        raise DomainError("h must be > 0")
    code, n, eps = symbol.code, symbol.n, symbol.eps

    def dg(v):
        v = np.asarray(v, dtype=float)
        j = eta(symbol, v)
        e = np.exp(-t * np.asarray(j.value))
        return np.real(-t * np.asarray(j.d1) * e) / v - np.real(e) / (v * v)

    g = OscIntegrand(
        lambda v: kernel.integrand(code, n, eps, t, 2, v),
        df=dg,
        parity="odd",
        kernel=(code, n, eps, t, 2),
    )
    res = sin_transform(g, h, cfg or PairingConfig())
    return res.value / math.pi, res.err_est / math.pi


def _large_x_tail(symbol, x_max, p_max):
    """Envelope-shaped mass beyond ``x_max`` matched to ``p(x_max)``."""
    eps = symbol.eps
    if p_max <= 0:
        return 0.0
    if eps == 1.0:
        shape = math.log1p(x_max) / x_max**2
        integral = math.log1p(x_max) / x_max + math.log1p(1.0 / x_max)
    else:
        shape = x_max ** (-1.0 - eps)
        integral = x_max ** (-eps) / eps
    return p_max / shape * integral


@dataclass(frozen=True)
class _MassParts:
    near: float
    near_err: float
    xs: np.ndarray
    weights: np.ndarray
    p: np.ndarray
    grid_err: float
    tail: float
    sides: int


def _mass_parts(symbol, t, grid, cfg):
    near, near_err = near_zero_mass(symbol, t, grid.x_min, cfg)
    xs, w = grid.nodes()
    xs_lo, w_lo = grid.nodes(max(grid.order // 2, 2))
    both = np.concatenate([xs, xs_lo])
    vals, errs = _values(symbol, t, np.concatenate([both, [grid.x_max]]), cfg)
    p, p_lo, p_end = vals[: xs.size], vals[xs.size : both.size], vals[-1]
    sides = 2 if symbol.symmetric else 1
    grid_err = sides * (abs(float(np.dot(w, p)) - float(np.dot(w_lo, p_lo))) + float(np.dot(w, errs[: xs.size])))
    tail = sides * _large_x_tail(symbol, grid.x_max, p_end)
    return _MassParts(near, near_err, xs, w, p, grid_err, tail, sides)


def normalization(symbol: LevySymbol, t: float, grid: LogGrid | None = None,
                  cfg: PairingConfig | None = None):
    """Total mass of ``p_t`` and the width of its error bracket.

    Mass is ``P(|X| <= x_min)`` (sine identity) plus the panel integral
    over ``x_min <= |x| <= x_max`` plus an envelope-shaped tail beyond
    ``x_max``.  Chain (subordinator) symbols are integrated over
    ``x > 0`` only.  The bracket adds the tail itself, the
    order-halving quadrature difference and the per-point error
    estimates.
    """
    grid = grid or LogGrid()
    if not t > 0:
        raise DomainError("t must be > 0")
    parts = _mass_parts(symbol, t, grid, cfg)
    body = parts.sides * float(np.dot(parts.weights, parts.p))
    mass = parts.near + body + parts.tail
    err = parts.near_err + parts.grid_err + parts.tail
    return float(mass), float(err)


def cf_roundtrip(symbol: LevySymbol, t: float, xi_probe: float, grid: LogGrid | None = None,
                 cfg: PairingConfig | None = None) -> float:
    """``|sum p(x_j) exp(i xi x_j) w_j - exp(-t eta(xi))|`` on the mass grid.

    The near-zero mass enters with phase 1 and the large-x tail with
    the phase at ``x_max``; at ``xi = 0`` the result is ``|mass - 1|``.
    """
    from .symbol import characteristic

    grid = grid or LogGrid()
    parts = _mass_parts(symbol, t, grid, cfg)
    xi = float(xi_probe)
    if parts.sides == 2:
        phase = np.cos(xi * parts.xs)
        tail_phase = math.cos(xi * grid.x_max)
    else:
        phase = np.exp(1j * xi * parts.xs)
        tail_phase = complex(math.cos(xi * grid.x_max), math.sin(xi * grid.x_max))
    cf = parts.near + parts.sides * np.dot(parts.weights, parts.p * phase) + parts.tail * tail_phase
    target = complex(characteristic(symbol, t, xi))
    return float(abs(cf - target))


class _Interpolated:
    """Monotone (PCHIP) interpolation of ``log p`` against ``log |x|``."""

    def __init__(self, symbol, t, lo, hi, per_decade, cfg):
        n_pts = max(int(math.ceil(math.log10(hi / lo) * per_decade)) + 1, 4)
        self.xs = np.geomspace(lo, hi, n_pts)
        p, _ = _values(symbol, t, self.xs, cfg)
        if np.any(p <= 0):
            raise GridTooCoarse("nonpositive density sample; cannot interpolate in log space")
        self.lo, self.hi = lo, hi
        self._fit(self.xs, p)
        self._p = p

    def _fit(self, xs, p):
        self._f = PchipInterpolator(np.log(xs), np.log(p), extrapolate=False)

    def coarse(self):
        twin = object.__new__(_Interpolated)
        twin.lo, twin.hi = self.lo, self.hi
        xs, p = self.xs[::2], self._p[::2]
        if xs[-1] != self.xs[-1]:
            xs, p = np.append(xs, self.xs[-1]), np.append(p, self._p[-1])
        twin._fit(xs, p)
        return twin

    def __call__(self, y):
        y = np.abs(np.asarray(y, dtype=float))
        out = np.exp(self._f(np.log(np.clip(y, self.lo, self.hi))))
        return np.where(y > self.hi, 0.0, out)


def _log_panels(lo, hi, per_decade, order):
    if hi <= lo:
        return np.empty(0), np.empty(0)
    n_panels = max(int(math.ceil(math.log10(hi / lo) * per_decade)), 1)
    edges = np.geomspace(lo, hi, n_panels + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _half_line(pa, pb, x, near_a, y0, upper, per_decade, order):
    """``int_0^upper pa(z) pb(x + z) dz``-type piece with ``pa`` singular at 0.

    ``pb`` is evaluated at ``x - z`` when ``x > 0`` is the partner point
    (sign handled by the caller through ``x``).
    """
    z, w = _log_panels(y0, upper, per_decade, order)
    val = near_a * pb(x - 0.5 * y0 * np.sign(x)) if x != 0 else 0.0
    if z.size:
        val = float(val) + float(np.dot(w, pa(z) * pb(x - z * np.sign(x))))
    return float(val)


def _convolve_at(x, p1, p2, m1, m2, y0, y_hi, symmetric, per_decade, order):
    # y in (0, x/2]: p1 singular at 0; y in [x/2, x): p2 singular at x
    half = 0.5 * x
    val = _half_line(p1, p2, x, m1, y0, half, per_decade, order)
    val += _half_line(p2, p1, x, m2, y0, half, per_decade, order)
    if symmetric:
        # y < 0 and y > x: singularities at the near ends only
        for pa, pb, ma in ((p1, p2, m1), (p2, p1, m2)):
            z, w = _log_panels(y0, y_hi, per_decade, order)
            val += float(ma * pb(x + 0.5 * y0)) + float(np.dot(w, pa(z) * pb(x + z)))
    return val


def convolution_check(symbol: LevySymbol, t1: float, t2: float, xs: Sequence[float],
                      y_min: float = 1e-6, y_max: float | None = None, per_decade: int = 24,
                      order: int = 12, tol: float = 1e-3, cfg: PairingConfig | None = None) -> float:
    """Max ``|(p_{t1} * p_{t2})(x) - p_{t1+t2}(x)|`` over ``xs > 0``.

    Densities are sampled on a log grid and interpolated with PCHIP in
    log-log space; the convolution integral uses Gauss-Legendre panels
    graded toward each singular end, where the mass ``P(|X| <= y_min)``
    replaces the unresolved sliver.  Raises :class:`GridTooCoarse` when
    halving the quadrature order or the sample density moves the result
    by more than ``tol``.
    """
    if not (t1 > 0 and t2 > 0):
        raise DomainError("t1 and t2 must be > 0")
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return 0.0
    if np.any(xs <= 0):
        raise DomainError("convolution targets must be > 0")
    symmetric = symbol.symmetric
    y_hi = y_max or (float(xs.max()) * 1e3 if symmetric else float(xs.max()))
    hi = y_hi + float(xs.max()) if symmetric else float(xs.max())
    p1 = _Interpolated(symbol, t1, y_min, hi, per_decade, cfg)
    p2 = p1 if t2 == t1 else _Interpolated(symbol, t2, y_min, hi, per_decade, cfg)
    side = 0.5 if symmetric else 1.0
    m1 = side * near_zero_mass(symbol, t1, y_min, cfg)[0]
    m2 = m1 if t2 == t1 else side * near_zero_mass(symbol, t2, y_min, cfg)[0]
    c1, c2 = p1.coarse(), (p2.coarse() if p2 is not p1 else None)
    c2 = c2 or c1

    target, _ = _values(symbol, t1 + t2, xs, cfg)
    dev = 0.0
    for x, want in zip(xs, target):
        conv = _convolve_at(x, p1, p2, m1, m2, y_min, y_hi, symmetric, per_decade, order)
        low_order = _convolve_at(x, p1, p2, m1, m2, y_min, y_hi, symmetric, per_decade, max(order // 2, 2))
        coarse = _convolve_at(x, c1, c2, m1, m2, y_min, y_hi, symmetric, per_decade, order)
        est = abs(conv - low_order) + abs(conv - coarse)
        if est > tol:
            raise GridTooCoarse(f"convolution error estimate {est:.3g} exceeds {tol:.3g} at x={x:g}")
        dev = max(dev, abs(conv - want))
    return float(dev)
