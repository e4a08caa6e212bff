"""Fourier cosine/sine transforms over the real line by period pairing.

For ``F(u) = f(u / |x|)`` the period ``[a, a + 2 pi]`` is folded onto the
quarter period ``[0, pi/2]``::

    I_k = int_0^{pi/2} [F(a+u) - F(a+pi-u) - F(a+pi+u) + F(a+2pi-u)] cos(u) du

and only this combined integrand is ever integrated, so the first-order
oscillation cancels before quadrature and ``I_k`` is controlled by
``F''``.  The cosine transform uses ``a = 2 pi k`` with the ``k = 0``
block on a geometrically graded mesh (the only place ``f`` may be
non-smooth is ``xi = 0``); the sine transform integrates
``[0, pi/2]`` directly and pairs ``a = 2 pi k + pi/2``.

After ``K`` blocks the remainder ``int_S^inf F w`` with ``S`` the next
block start equals ``-F'(S) - int_S^inf F'' w``; the first term is added
as the tail correction.  ``K`` doubles until two successive corrected
totals agree.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate

from . import kernel
from .errors import Divergence, DomainError, NoConvergence, ToleranceNotMet

__all__ = [
    "OscIntegrand",
    "PairingConfig",
    "TransformResult",
    "cos_transform",
    "sin_transform",
    "tail_bound",
    "reference_integral",
    "envelope_majorant",
    "gauss_legendre",
]

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OscIntegrand:
    """Integrand ``f`` (vectorised callable on real arrays) plus extras.

    ``df`` is the derivative, used for the tail correction; central
    differences replace it when absent.  ``parity`` may be ``"even"`` or
    ``"odd"`` to halve the work.  ``kernel`` is an optional
    ``(kind_code, n, eps, t, mode)`` tuple routing the block sums to the
    compiled kernel; ``f`` must then agree with ``kernel.integrand``.
    """

    f: Callable[[np.ndarray], np.ndarray]
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None
    envelope_G: Optional[Callable[[np.ndarray], np.ndarray]] = None
    parity: Optional[str] = None
    kernel: Optional[tuple] = None

    def __post_init__(self):
        if self.parity not in (None, "even", "odd"):
            raise DomainError(f"parity must be 'even', 'odd' or None, not {self.parity!r}")


@dataclass(frozen=True)
class PairingConfig:
    quad_order: int = 16
    k_max: int = 1_000_000
    tol_abs: float = 1e-12
    tol_rel: float = 1e-10
    use_extrapolation: bool = True
    k_start: int = 8
    grading_floor: float = 1e-14

    def __post_init__(self):
        if self.quad_order < 8:
            raise DomainError("quad_order must be >= 8")
        if self.k_max < 1:
            raise DomainError("k_max must be >= 1")
        if not self.tol_abs > 0:
            raise DomainError("tol_abs must be > 0")
        if self.tol_rel < 0:
            raise DomainError("tol_rel must be >= 0")


class TransformResult(NamedTuple):
    value: float
    err_est: float
    k_used: int


@functools.lru_cache(maxsize=None)
def gauss_legendre(order: int, a: float = 0.0, b: float = HALF_PI):
    """Gauss-Legendre nodes and weights mapped to ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _combined(g: OscIntegrand, which: str):
    """``h`` with ``int_R f w(x xi) = int_0^inf h w`` and its derivative."""
    f, df = g.f, g.df
    sgn = 1.0 if which == "cos" else -1.0
    natural = "even" if which == "cos" else "odd"
    if g.parity == natural:
        h = lambda xi: 2.0 * f(xi)
        dh = (lambda xi: 2.0 * df(xi)) if df is not None else None
    elif g.parity is not None:
        h = lambda xi: np.zeros_like(np.asarray(xi, dtype=float))
        dh = h
    else:
        h = lambda xi: f(xi) + sgn * f(-xi)
        dh = (lambda xi: df(xi) - sgn * df(-xi)) if df is not None else None
    if dh is None:
        def dh(xi):
            xi = np.asarray(xi, dtype=float)
            step = 1e-5 * np.maximum(np.abs(xi), 1e-3)
            return (h(xi + step) - h(xi - step)) / (2.0 * step)
    return h, dh


def _four_term(F, a, u, w):
    vals = F(a + u) - F(a + math.pi - u) - F(a + math.pi + u) + F(a + TWO_PI - u)
    return float(np.dot(w * np.cos(u), vals))


def _graded_nodes(order, s, floor):
    """Composite GL nodes on ``[0, pi/2]`` refined geometrically toward 0."""
    lo = max(min(s, 1.0) * floor, 1e-300)
    n_panels = max(int(math.ceil(math.log2(HALF_PI / lo))), 1)
    edges = HALF_PI * 2.0 ** -np.arange(n_panels + 1)
    edges = np.append(edges, 0.0)[::-1]
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _block_sums(g, h, which, inv_s, base, k0, k1, order):
    u, w = gauss_legendre(order)
    if g.kernel is not None:
        kind, n, eps, t, mode = g.kernel
        return kernel.paired_blocks(kind, n, eps, t, mode, inv_s, base, k0, k1, u, w)
    out = np.empty(max(k1 - k0, 0))
    wc = w * np.cos(u)
    offs = np.stack([u, math.pi - u, math.pi + u, TWO_PI - u])
    sign = np.array([1.0, -1.0, -1.0, 1.0])[:, None]
    chunk = 2048
    for c0 in range(k0, k1, chunk):
        c1 = min(c0 + chunk, k1)
        a = base + TWO_PI * np.arange(c0, c1, dtype=float)
        pts = a[:, None, None] + offs[None, :, :]
        vals = np.asarray(h(pts * inv_s), dtype=float)
        out[c0 - k0 : c1 - k0] = (sign[None] * vals).sum(axis=1) @ wc
    return out


def _central(h, which, s, order, floor):
    F = lambda u: np.asarray(h(u / s), dtype=float)
    u, w = _graded_nodes(order, s, floor)
    if which == "cos":
        return _four_term(F, 0.0, u, w)
    return float(np.dot(w * np.sin(u), F(u)))


def _transform(g: OscIntegrand, x: float, cfg: PairingConfig, which: str) -> TransformResult:
    x = float(x)
    if x == 0.0 or not math.isfinite(x):
        raise DomainError("transform point x must be finite and nonzero")
    if cfg is None:
        cfg = PairingConfig()
    if g.kernel is not None:
        mode = g.kernel[4]
        if (which == "cos") != (mode == 0):
            raise DomainError("kernel mode does not match the transform type")
    s = abs(x)
    inv_s = 1.0 / s
    sign = 1.0 if (which == "cos" or x > 0) else -1.0
    h, dh = _combined(g, which)
    q = cfg.quad_order
    base = 0.0 if which == "cos" else HALF_PI
    first = 1 if which == "cos" else 0

    # central piece and the first blocks at two orders for the quadrature error
    c_lo = _central(h, which, s, q, cfg.grading_floor)
    c_hi = _central(h, which, s, 2 * q, cfg.grading_floor)
    b_lo = _block_sums(g, h, which, inv_s, base, first, first + 2, q)
    b_hi = _block_sums(g, h, which, inv_s, base, first, first + 2, 2 * q)
    quad_err = abs(c_hi - c_lo) + float(np.sum(np.abs(b_hi - b_lo)))
    partial = c_hi + float(np.sum(b_hi))
    k_next = first + 2

    if not cfg.use_extrapolation:
        return _plain_sum(g, h, which, x, s, inv_s, base, first, partial, k_next, quad_err, sign, b_hi, cfg)

    def corrected(k):
        edge = base + TWO_PI * k
        return partial - float(dh(edge * inv_s)) * inv_s

    target = first + max(cfg.k_start, 2)
    prev = None
    while True:
        if target - first > cfg.k_max:
            total = corrected(k_next)
            raise NoConvergence(
                f"pairing sum not converged after {k_next - first} periods",
                value=sign * total * inv_s,
                err_est=(abs(total - prev) if prev is not None else math.inf) * inv_s + quad_err * inv_s,
                k_used=k_next - first,
            )
        partial += float(np.sum(_block_sums(g, h, which, inv_s, base, k_next, target, q)))
        k_next = target
        total = corrected(k_next)
        if prev is not None:
            delta = abs(total - prev)
            if delta * inv_s <= max(cfg.tol_abs, cfg.tol_rel * abs(total) * inv_s):
                return TransformResult(sign * total * inv_s, (delta + quad_err) * inv_s, k_next - first)
        prev = total
        target = first + 2 * (target - first)


def _plain_sum(g, h, which, x, s, inv_s, base, first, partial, k_next, quad_err, sign, head, cfg):
    """Unaccelerated summation: stop on small terms and the envelope tail bound."""
    recent = [abs(v) * inv_s for v in head]
    batch = max(cfg.k_start, 16)
    while k_next - first < cfg.k_max:
        stop = min(k_next + batch, first + cfg.k_max)
        blocks = _block_sums(g, h, which, inv_s, base, k_next, stop, cfg.quad_order)
        for i, v in enumerate(blocks):
            partial += float(v)
            recent = (recent + [abs(v) * inv_s])[-3:]
            k = k_next + i + 1
            if len(recent) == 3 and max(recent) < cfg.tol_abs:
                tail = 0.0
                if g.envelope_G is not None:
                    tail = tail_bound(g.envelope_G, s, k)
                    if tail >= cfg.tol_abs:
                        continue
                return TransformResult(sign * partial * inv_s, tail + quad_err * inv_s, k - first)
        k_next = stop
        batch *= 2
    raise NoConvergence(
        f"period terms still above tolerance after {cfg.k_max} periods",
        value=sign * partial * inv_s,
        err_est=math.inf,
        k_used=k_next - first,
    )


def cos_transform(g: OscIntegrand, x: float, cfg: PairingConfig | None = None) -> TransformResult:
    """``int_R f(xi) cos(x xi) d xi`` for ``x != 0``."""
    return _transform(g, x, cfg or PairingConfig(), "cos")


def sin_transform(g: OscIntegrand, x: float, cfg: PairingConfig | None = None) -> TransformResult:
    """``int_R f(xi) sin(x xi) d xi`` for ``x != 0``."""
    return _transform(g, x, cfg or PairingConfig(), "sin")


def tail_bound(envelope_G, x: float, K: int, panels_per_octave: int = 64,
               rtol: float = 1e-10, max_octaves: int = 600) -> float:
    """Upper Riemann sum of ``x^{-2} int_{2 pi K/|x|}^inf G(y) dy``.

    ``G`` must be nonincreasing; panels are geometric with
    ``panels_per_octave`` per doubling of ``y``.  Once the octave sums
    contract with ratio ``q < 1`` the geometric remainder
    ``last * q / (1 - q)`` is added.  Raises :class:`Divergence` when
    they never contract.
    """
    x = abs(float(x))
    if x == 0.0 or K < 1:
        raise DomainError("tail_bound needs x != 0 and K >= 1")
    lo = TWO_PI * K / x
    ratio = 2.0 ** (1.0 / panels_per_octave)
    rel_edges = ratio ** np.arange(panels_per_octave + 1)
    total = 0.0
    prev = None
    for octave in range(max_octaves):
        edges = lo * 2.0**octave * rel_edges
        vals = np.asarray(envelope_G(edges), dtype=float)
        if np.any(np.diff(vals) > 1e-12 * np.abs(vals[:-1]) + 1e-300):
            raise DomainError("envelope G must be nonincreasing")
        oct_sum = float(np.dot(vals[:-1], np.diff(edges)))
        total += oct_sum
        if oct_sum == 0.0:
            return total / x**2
        if prev is not None:
            q = oct_sum / prev
            if q < 1.0:
                rest = oct_sum * q / (1.0 - q)
                if rest <= rtol * total:
                    return (total + rest) / x**2
        prev = oct_sum
    raise Divergence("envelope octave sums do not contract; G not integrable at this scale")


def envelope_majorant(n: int, eps: float, t: float, alpha: float = 1.0, c_d1: float = 1.0, c_d2: float = 1.0):
    """Envelope ``G = exp(-t g1) (t^2 g3^2 + t g4)`` from the majorant shapes.

    ``g1 = alpha s_n^eps``; ``g3``, ``g4`` are the first- and second-
    derivative majorants (split at ``|y| = 1``) scaled by ``c_d1``,
    ``c_d2``.
    """
    from . import iterlog

    def G(y):
        y = np.abs(np.asarray(y, dtype=float))
        sn = iterlog.s(n, y)
        common = np.where(sn > 0, sn, 1.0) ** (eps - 1.0) / np.where(y > 0, iterlog.r(n - 1, y), 1.0)
        small = y <= 1.0
        ys = np.where(y > 0, y, 1.0)
        g3 = c_d1 * np.where(small, ys ** (eps - 1.0), common / (1.0 + y))
        g4 = c_d2 * np.where(small, ys ** (eps - 2.0), common / (1.0 + y) ** 2)
        return np.exp(-t * alpha * sn**eps) * (t * t * g3 * g3 + t * g4)

    return G


def _quad_weighted(f, x, Xi, which, limit):
    if which == "cos":
        fun = lambda v: f(v) + f(-v)
    else:
        fun = lambda v: f(v) - f(-v)
    val, err = integrate.quad(fun, 0.0, Xi, weight=which, wvar=abs(x), limit=limit, epsabs=1e-13, epsrel=1e-12)
    if which == "sin" and x < 0:
        val = -val
    return val, err


def reference_integral(f, x: float, Xi: float, which: str = "cos", tol: float = 1e-8,
                       doublings: int = 0, limit: int = 20000) -> float:
    """Plain adaptive quadrature of ``f(xi) w(x xi)`` over ``[-Xi, Xi]``.

    ``f`` is a scalar callable.  With ``doublings > 0`` the range is
    doubled until two successive values agree within ``tol``; otherwise
    :class:`ToleranceNotMet` carries the sequence of values.  Only
    meaningful when ``int |f| < inf``.
    """
    if which not in ("cos", "sin"):
        raise DomainError("which must be 'cos' or 'sin'")
    if x == 0 or Xi <= 0:
        raise DomainError("reference_integral needs x != 0 and Xi > 0")
    values = []
    cur = float(Xi)
    for i in range(doublings + 1):
        val, err = _quad_weighted(f, x, cur, which, limit)
        if err > tol:
            raise ToleranceNotMet(f"quadrature error {err:.3g} above {tol:.3g} at Xi={cur:g}", values + [val])
        values.append(val)
        if doublings == 0:
            return val
        if i > 0 and abs(values[-1] - values[-2]) < tol:
            return val
        cur *= 2.0
    raise ToleranceNotMet(f"no stabilisation under {doublings} range doublings", values)
