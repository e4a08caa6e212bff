"""Grid certification of the symbol assumptions, derivative self-tests and
a Bernstein sign spot-check.

Constants are fitted from grid extrema: ``alpha_eps`` is the minimum of
``eta1 / s_n**eps`` and each ``c`` is the maximum of ``|quantity| / shape``.
Between grid points the fit may be off in either direction; that is
accepted, the reports are evidence rather than proof.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import iterlog
from .errors import DomainError, NotSymmetric
from .symbol import IterLogParams, Kind, LevySymbol, eta, second_derivative_lower

__all__ = [
    "XiGrid",
    "AssumptionReport",
    "BernsteinReport",
    "check_upper_assumptions",
    "check_lower_assumptions",
    "derivative_selftest",
    "bernstein_spotcheck",
    "fd_weights",
    "fit_alpha",
]

SCHEMA_VERSION = 1
CONSTANT_FLOOR = 1e-3


@dataclass(frozen=True)
class XiGrid:
    xi_min: float = 1.0
    xi_max: float = 1e6
    count: int = 400
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing not in ("log", "linear"):
            raise DomainError("spacing must be 'log' or 'linear'")
        if self.count < 1:
            raise DomainError("count must be >= 1")
        if not (0 < self.xi_min <= self.xi_max and math.isfinite(self.xi_max)):
            raise DomainError("need 0 < xi_min <= xi_max < inf")

    def points(self) -> np.ndarray:
        if self.count == 1:
            return np.array([float(self.xi_min)])
        if self.spacing == "log":
            return np.geomspace(self.xi_min, self.xi_max, self.count)
        return np.linspace(self.xi_min, self.xi_max, self.count)


@dataclass
class AssumptionReport:
    symbol: str
    grid: dict
    fitted: dict
    violations: list
    passed: bool
    notes: list = field(default_factory=list)

    def as_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)


def _shape_pair(params, xi, small_pow, large_tail_pow, s_level=None):
    """Piecewise shape: ``xi**small_pow`` below 1, iterated-log form above."""
    n, eps = params.n, params.eps
    lvl = n if s_level is None else s_level
    s_lvl = iterlog.s(lvl, xi) if lvl > 0 else xi
    r_prev = iterlog.r(n - 1, xi) if n > 1 else np.ones_like(xi)
    large = s_lvl ** (eps - 1.0) / r_prev * (1.0 + xi) ** (-large_tail_pow)
    small = xi**small_pow
    return np.where(xi < 1.0, small, large)


def _grid_dict(grid: XiGrid, **extra):
    d = {"xi_min": grid.xi_min, "xi_max": grid.xi_max, "count": grid.count, "spacing": grid.spacing}
    d.update(extra)
    return d


def _max_ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(num) / den
    return float(np.max(r)), r


def check_upper_assumptions(symbol: LevySymbol, grid: XiGrid | None = None, eta1_min: float = 1.0,
                            floor: float = CONSTANT_FLOOR) -> AssumptionReport:
    """Fit the constants of the upper-bound assumptions on ``grid``.

    ``eta1 >= alpha_eps s_n**eps`` is checked only on ``xi >= eta1_min``
    (it fails near 0 for the chain family, where ``eta1 ~ xi**2/2``);
    the majorants for ``|eta2|``, ``|eta'|`` and ``|eta''|`` use the whole
    grid.  A grid point is a violation when its ``eta1`` ratio falls below
    ``floor`` or a majorant ratio is not finite.
    """
    grid = grid or XiGrid()
    xi = grid.points()
    p = symbol.params
    eps = p.eps
    jet = eta(symbol, xi)
    eta1 = np.real(jet.value)
    eta2 = -np.imag(jet.value)
    d1 = np.asarray(jet.d1)
    d2 = np.asarray(jet.d2)
    violations = []

    dom = xi >= eta1_min
    if not np.any(dom):
        raise DomainError("no grid points at or above eta1_min")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio1 = eta1[dom] / iterlog.s(p.n, xi[dom]) ** eps
    alpha = float(np.min(ratio1))
    for x, r in zip(xi[dom], ratio1):
        if not (r >= floor):
            violations.append([float(x), "eta1_lower", float(r - floor)])

    c_eta2, r2 = _max_ratio(eta2, _shape_pair(p, xi, eps, 0.0))
    d1max = np.maximum(np.abs(d1.real), np.abs(d1.imag))
    d2max = np.maximum(np.abs(d2.real), np.abs(d2.imag))
    c_d1, rd1 = _max_ratio(d1max, _shape_pair(p, xi, eps - 1.0, 1.0))
    c_d2, rd2 = _max_ratio(d2max, _shape_pair(p, xi, eps - 2.0, 2.0))
    for name, ratios in (("eta2_major", r2), ("d1_major", rd1), ("d2_major", rd2)):
        for x, r in zip(xi, ratios):
            if not math.isfinite(r):
                violations.append([float(x), name, float("inf")])

    fitted = {"alpha_eps": alpha, "c_eta2": c_eta2, "c_d1": c_d1, "c_d2": c_d2}
    finite = all(math.isfinite(v) for v in fitted.values())
    positive = alpha > 0 and c_d1 > 0 and c_d2 > 0 and (c_eta2 > 0 or symbol.symmetric)
    notes = []
    if eta1_min < 1.0:
        notes.append("eta1 lower bound probed below |xi| = 1 where it fails for the chain family")
    return AssumptionReport(
        symbol=symbol.spec(),
        grid=_grid_dict(grid, eta1_min=eta1_min),
        fitted=fitted,
        violations=violations,
        passed=bool(finite and positive and not violations),
        notes=notes,
    )


def check_lower_assumptions(symbol: LevySymbol, grid: XiGrid | None = None,
                            floor: float = CONSTANT_FLOOR) -> AssumptionReport:
    """Fit ``alpha_0 = max eta / s_n**eps`` and the ``-eta''`` lower constant.

    The ``-eta''`` shape is ``s_{n-1}**(eps-1) r_{n-1}**-1 (1+xi)**-2`` on
    ``xi >= 1`` and ``xi**(eps-2)`` below (``s_0 = xi``).  For the
    ``sym`` kind the certified bound from :func:`second_derivative_lower`
    is compared pointwise.  The variant with ``s_n`` in place of
    ``s_{n-1}`` is also fitted and reported.
    """
    if not symbol.symmetric:
        raise NotSymmetric(f"lower assumptions need a real, even symbol; got {symbol.spec()}")
    grid = grid or XiGrid()
    xi = grid.points()
    p = symbol.params
    n, eps = p.n, p.eps
    jet = eta(symbol, xi)
    val = np.real(jet.value)
    neg_d2 = -np.real(jet.d2)

    alpha0 = float(np.max(val / iterlog.s(n, xi) ** eps))
    shape = _shape_pair(p, xi, eps - 2.0, 2.0, s_level=n - 1)
    ratio = neg_d2 / shape
    c_low = float(np.min(ratio))
    alt = neg_d2 / _shape_pair(p, xi, eps - 2.0, 2.0, s_level=n)
    violations = [[float(x), "neg_d2_lower", float(r - floor)] for x, r in zip(xi, ratio) if not (r >= floor)]
    fitted = {"alpha_0": alpha0, "c_neg_d2": c_low, "c_neg_d2_s_n_variant": float(np.min(alt))}

    notes = ["-eta'' shape uses s_{n-1}^(eps-1); the upper assumptions use s_n^(eps-1)"]
    if symbol.kind is Kind.SYM:
        bound, full = second_derivative_lower(n, xi, eps)
        consistent = bool(np.all(full >= bound * (1.0 - 1e-12)))
        fitted["c_certified"] = float(np.min(bound / shape))
        fitted["certified_consistent"] = consistent
        if not consistent:
            violations.append([float(xi[np.argmin(full - bound)]), "certified_bound", float(np.min(full - bound))])
    ok = math.isfinite(alpha0) and alpha0 > 0 and c_low > 0 and not violations
    return AssumptionReport(
        symbol=symbol.spec(),
        grid=_grid_dict(grid),
        fitted=fitted,
        violations=violations,
        passed=bool(ok),
        notes=notes,
    )


@functools.lru_cache(maxsize=64)
def fit_alpha(symbol: LevySymbol) -> float:
    """``alpha_eps`` fitted on the default grid ``[1, 1e6]``."""
    return check_upper_assumptions(symbol, XiGrid(1.0, 1e6, 200)).fitted["alpha_eps"]


def derivative_selftest(symbol: LevySymbol, grid: XiGrid | Sequence[float]) -> float:
    """Worst relative error of analytic ``d1``, ``d2`` against finite differences.

    ``d1`` is differenced from values and ``d2`` from analytic ``d1`` with a
    nine-point central stencil and step ``h = 0.01 |xi| + 1e-9``.  The wide
    step keeps rounding below 1e-7 even where ``eta''`` is tiny next to
    ``eta'`` (e.g. ``sq`` with ``eps < 1`` near 0).
    """
    xi = grid.points() if isinstance(grid, XiGrid) else np.asarray(grid, dtype=float)
    if symbol.eps < 1.0 and np.any(np.abs(xi) < 1e-6):
        raise DomainError("grid too close to 0 for eps < 1")
    h = np.abs(xi) * 1e-2 + 1e-9
    offs = np.arange(-4, 5, dtype=float)
    w = fd_weights(1, offs)
    jet = eta(symbol, xi)
    fd1 = np.zeros(xi.shape, dtype=complex)
    fd2 = np.zeros(xi.shape, dtype=complex)
    for wk, k in zip(w, offs):
        if wk == 0.0:
            continue
        j = eta(symbol, xi + k * h)
        fd1 += wk * np.asarray(j.value)
        fd2 += wk * np.asarray(j.d1)
    fd1, fd2 = fd1 / h, fd2 / h

    def rel(fd, an):
        an = np.asarray(an)
        return np.abs(fd - an) / np.maximum(np.abs(an), 1e-300)

    return float(max(np.max(rel(fd1, jet.d1)), np.max(rel(fd2, jet.d2))))


def fd_weights(order: int, offsets: Sequence[float]) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative on unit ``offsets``."""
    offsets = np.asarray(offsets, dtype=float)
    m = offsets.size
    if order >= m:
        raise DomainError("need more stencil points than the derivative order")
    vander = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


def _psi_d2(params: IterLogParams, x):
    x = np.asarray(x, dtype=float)
    sym = LevySymbol(params, Kind.SYM)
    return np.real(eta(sym, x).d2)


def _psi_fd(params, x, k, h):
    """``psi^(k)`` from a centred stencil on the analytic ``psi''``."""
    d = k - 2
    if d == 0:
        return float(_psi_d2(params, x))
    half = d // 2 + 2
    offs = np.arange(-half, half + 1, dtype=float)
    w = fd_weights(d, offs)
    vals = _psi_d2(params, x + offs * h)
    return float(np.dot(w, vals) / h**d)


@dataclass
class BernsteinReport:
    params: dict
    max_order: int
    points: list
    passed: bool
    inconclusive: list

    def __bool__(self):
        return self.passed

    def as_dict(self):
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d


def bernstein_spotcheck(params: IterLogParams, max_order: int = 4, grid: Sequence[float] = (0.1, 1.0, 10.0, 100.0),
                        rel_step: float = 0.02) -> BernsteinReport:
    """Check ``(-1)**k psi^(k) <= 0`` for ``psi = s_n**eps`` and ``k <= max_order``.

    Orders 1 and 2 are analytic.  Higher orders difference the analytic
    ``psi''`` at steps ``h`` and ``h/2``; the gap between the two is the
    noise estimate.  A sign is accepted when it is right or wrong by less
    than three times the noise; a derivative smaller than its noise is
    listed as inconclusive and does not fail the check.
    """
    if not (1 <= max_order <= 6):
        raise DomainError("max_order must be in 1..6")
    xs = np.asarray(grid, dtype=float)
    if np.any(xs <= 0):
        raise DomainError("Bernstein grid must lie in (0, inf)")
    sym = LevySymbol(params, Kind.SYM)
    rows, inconclusive, ok = [], [], True
    for x in xs:
        jet = eta(sym, x)
        for k in range(1, max_order + 1):
            if k == 1:
                val, noise = float(np.real(jet.d1)), 0.0
            elif k == 2:
                val, noise = float(np.real(jet.d2)), 0.0
            else:
                h = rel_step * x
                coarse = _psi_fd(params, x, k, h)
                val = _psi_fd(params, x, k, h / 2)
                noise = abs(val - coarse)
            signed = (-1) ** (k + 1) * val  # should be >= 0
            good = signed >= -3.0 * noise
            if abs(val) <= noise:
                inconclusive.append([float(x), k])
            elif not good:
                ok = False
            rows.append({"xi": float(x), "order": k, "value": val, "noise": noise, "sign_ok": bool(good)})
    return BernsteinReport({"n": params.n, "eps": params.eps}, max_order, rows, bool(ok), inconclusive)
