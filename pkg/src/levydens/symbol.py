"""Iterated-logarithm Lévy symbols with analytic first and second derivatives.

Three families are provided, all parametrised by depth ``n`` and
exponent ``eps``:

``chain``
    Subordinator symbol ``eta(xi) = psi(-i xi)`` for the Bernstein
    function ``psi(z) = s_n(z)**eps``.  Built by the complex recursion
    ``u_1 = log(1 - i xi)``, ``u_{k+1} = log(1 + u_k)`` and
    ``eta = u_n**eps`` on the principal branch.
``sym``
    Real, even symbol ``eta(xi) = s_n(|xi|)**eps``.
``sq``
    Real, even test instance ``eta(xi) = s_n(xi**2)**eps``.  For
    ``n = 1, eps = 1`` this is ``log(1 + xi**2)``, the Laplace law.

Sign convention: the characteristic function of the law at time ``t``
is ``exp(-t * eta(xi))`` with ``eta`` the complex value returned here.
:func:`eta_parts` returns ``(Re eta, -Im eta)``, so for the chain
family ``eta2 = atan(xi) > 0`` at ``n = 1``; with this choice the
density is ``(2 pi)^{-1} [C(f1) + S(f2)]`` with
``f1 = exp(-t eta1) cos(t eta2)`` and ``f2 = exp(-t eta1) sin(t eta2)``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import iterlog
from .errors import BranchError, DomainError, SingularityError

__all__ = [
    "Kind",
    "IterLogParams",
    "LevySymbol",
    "SymbolJet",
    "parse_symbol",
    "clog1p",
    "chain_jet",
    "eta",
    "eta_value",
    "eta_parts",
    "characteristic",
    "second_derivative_lower",
]


class Kind(str, enum.Enum):
    CHAIN = "chain"
    SYM = "sym"
    SQ = "sq"


# integer codes shared with the compiled kernel
KIND_CODES = {Kind.CHAIN: 0, Kind.SYM: 1, Kind.SQ: 2}


@dataclass(frozen=True)
class IterLogParams:
    """Depth ``n >= 1`` and exponent ``0 < eps <= 1``."""

    n: int
    eps: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be an integer >= 1, got {self.n!r}")
        if not (0.0 < self.eps <= 1.0):
            raise DomainError(f"eps must lie in (0, 1], got {self.eps!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "eps", float(self.eps))


class SymbolJet(NamedTuple):
    value: complex
    d1: complex
    d2: complex


@dataclass(frozen=True)
class LevySymbol:
    params: IterLogParams
    kind: Kind = Kind.CHAIN

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def symmetric(self) -> bool:
        return self.kind is not Kind.CHAIN

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def eps(self) -> float:
        return self.params.eps

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def spec(self) -> str:
        return f"{self.kind.value}:n={self.n},eps={self.eps!r}"

    def __str__(self):
        return self.spec()


_SPEC_RE = re.compile(r"^\s*(chain|sym|sq)\s*:\s*(.*)$")


def parse_symbol(text: str) -> LevySymbol:
    """Parse ``"chain:n=2,eps=1.0"`` style strings.

    ``eps`` defaults to 1 when omitted.
    """
    m = _SPEC_RE.match(text)
    if not m:
        raise DomainError(f"bad symbol spec {text!r}; expected kind:n=..,eps=..")
    fields = {}
    for item in filter(None, (p.strip() for p in m.group(2).split(","))):
        key, sep, val = item.partition("=")
        if not sep or key.strip() not in ("n", "eps"):
            raise DomainError(f"bad symbol field {item!r}")
        fields[key.strip()] = val.strip()
    if "n" not in fields:
        raise DomainError("symbol spec needs n=")
    try:
        n = int(fields["n"])
        eps = float(fields.get("eps", 1.0))
    except ValueError as exc:
        raise DomainError(f"bad number in symbol spec {text!r}") from exc
    return LevySymbol(IterLogParams(n, eps), Kind(m.group(1)))


def clog1p(z):
    """Principal ``log(1 + z)`` accurate for small complex ``z``."""
    z = np.asarray(z, dtype=complex)
    a, b = z.real, z.imag
    re_part = 0.5 * np.log1p(2.0 * a + a * a + b * b)
    return re_part + 1j * np.arctan2(b, 1.0 + a)


def _chain_u(n, xi, with_derivs):
    xi = np.asarray(xi, dtype=float)
    u = clog1p(-1j * xi)
    if with_derivs:
        w = 1.0 / (1.0 - 1j * xi)
        d1 = -1j * w
        d2 = w * w
    for _ in range(n - 1):
        base = 1.0 + u
        if np.any(base.real <= 0):
            raise BranchError("Re(1 + u_k) <= 0 in the symbol recursion")
        if with_derivs:
            inv = 1.0 / base
            d2 = d2 * inv - (d1 * inv) ** 2
            d1 = d1 * inv
        u = clog1p(u)
    if with_derivs:
        return u, d1, d2
    return u, None, None


def chain_jet(n: int, xi) -> SymbolJet:
    """Value and derivatives of ``u_n`` from the ``log(1 + .)`` recursion."""
    if int(n) != n or n < 1:
        raise DomainError("n must be >= 1")
    _finite(xi)
    u, d1, d2 = _chain_u(int(n), xi, True)
    return SymbolJet(_out(u), _out(d1), _out(d2))


def _finite(xi):
    if not np.all(np.isfinite(np.asarray(xi, dtype=float))):
        raise DomainError("xi must be finite")


def _out(arr):
    arr = np.asarray(arr)
    return arr[()] if arr.ndim == 0 else arr


def _power_jet(u, d1, d2, eps):
    """Jet of ``u**eps`` given the jet of ``u`` (principal branch)."""
    u = np.asarray(u)
    if eps == 1.0:
        return u, d1, d2
    zero = u == 0
    safe = np.where(zero, 1.0, u)
    val = np.where(zero, 0.0, np.exp(eps * np.log(safe)))
    if d1 is None:
        return val, None, None
    p1 = val / safe  # u**(eps-1)
    p2 = p1 / safe  # u**(eps-2)
    v1 = eps * p1 * d1
    v2 = eps * (eps - 1.0) * p2 * d1 * d1 + eps * p1 * d2
    return val, v1, v2


def _real_tower_jet(n, v, with_derivs):
    levels = iterlog.tower(n, v)
    sv = levels[-1]
    if not with_derivs:
        return sv, None, None
    a = [1.0 / (1.0 + levels[0])]
    for lev in levels[1 : n]:
        a.append(a[-1] / (1.0 + lev))
    return sv, a[-1], -a[-1] * sum(a)


def eta(symbol: LevySymbol, xi, derivatives: bool = True) -> SymbolJet:
    """Evaluate the symbol and (optionally) its first two derivatives.

    Derivatives are singular at ``xi = 0`` when ``eps < 1``; asking for
    them there raises :class:`SingularityError`.  For ``sym`` with
    ``eps = 1`` the kink at 0 gets ``d1 = 0`` and the one-sided ``d2``.
    """
    _finite(xi)
    xi = np.asarray(xi, dtype=float)
    n, eps = symbol.n, symbol.eps
    if derivatives and eps < 1.0 and np.any(xi == 0):
        raise SingularityError("derivatives of eta are singular at xi = 0 for eps < 1")

    if symbol.kind is Kind.CHAIN:
        u, d1, d2 = _chain_u(n, xi, derivatives)
        val, v1, v2 = _power_jet(u, d1, d2, eps)
    elif symbol.kind is Kind.SYM:
        ax = np.abs(xi)
        sv, s1, s2 = _real_tower_jet(n, ax, derivatives)
        val, v1, v2 = _power_jet(sv.astype(complex), s1, s2, eps)
        if derivatives:
            v1 = np.sign(xi) * v1
    else:
        sq = xi * xi
        sv, s1, s2 = _real_tower_jet(n, sq, derivatives)
        if derivatives:
            # chain rule through v = xi**2
            s2 = s2 * (2.0 * xi) ** 2 + s1 * 2.0
            s1 = s1 * 2.0 * xi
        val, v1, v2 = _power_jet(sv.astype(complex), s1, s2, eps)

    if not derivatives:
        return SymbolJet(_out(val), None, None)
    return SymbolJet(_out(val), _out(np.asarray(v1, dtype=complex)), _out(np.asarray(v2, dtype=complex)))


def eta_value(symbol: LevySymbol, xi):
    """Complex value of the symbol only (defined at 0 for every kind)."""
    return eta(symbol, xi, derivatives=False).value


def eta_parts(symbol: LevySymbol, xi):
    """``(eta1, eta2)`` with ``eta = eta1 - i eta2``.

    ``eta1 >= 0`` is even, ``eta2`` is odd.  Symmetric kinds give
    ``eta2 == 0``.
    """
    v = np.asarray(eta_value(symbol, xi))
    return _out(v.real), _out(-v.imag)


def characteristic(symbol: LevySymbol, t: float, xi):
    """``exp(-t * eta(xi))``, the characteristic function at time ``t``."""
    return np.exp(-t * np.asarray(eta_value(symbol, xi)))


def second_derivative_lower(n: int, xi, eps: float = 1.0):
    """Certified lower bound for ``-psi''`` with ``psi = s_n**eps``.

    Returns ``(bound, full)`` where ``full = -psi''(xi)`` and
    ``bound = eps * s_{n-1}**(eps-1) * B_0`` with
    ``B_0 = A_{n-1} (1 + xi)^{-1}`` (``s_0 = xi``).  For ``eps = 1`` the
    bound is ``B_0`` itself and ``full = sum_{k=0}^{n-1} B_k``.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be >= 1")
    if not (0.0 < eps <= 1.0):
        raise DomainError("eps must lie in (0, 1]")
    x = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("xi must be finite and > 0")
    n = int(n)
    levels = iterlog.tower(n, x)
    a = iterlog.level_factors(n - 1, x)
    sn = levels[n]
    d1 = a[-1]
    d2 = -a[-1] * sum(a)
    b0 = a[-1] * a[0]
    if eps == 1.0:
        full = -d2
        bound = b0
    else:
        full = -(eps * (eps - 1.0) * sn ** (eps - 2.0) * d1 * d1 + eps * sn ** (eps - 1.0) * d2)
        bound = eps * levels[n - 1] ** (eps - 1.0) * b0
    return _out(bound), _out(full)
