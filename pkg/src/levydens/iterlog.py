"""Iterated-logarithm tower and its running product.

``s(n, x)`` applies ``log1p`` ``n`` times, ``r(n, x)`` multiplies the
first ``n`` levels.  All functions take ``x >= 0`` (callers pass
``|xi|``) and broadcast over numpy arrays.

Conventions for the degenerate depth ``n = 0``: ``s(0, x) = x`` and
``r(0, x) = 1`` (empty product), so envelope formulas that mention
``s_{n-1}`` or ``r_{n-1}`` stay valid for ``n = 1``.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = ["s", "r", "ds", "d2s", "dr", "tower", "level_factors"]


def _check(n, x, strict=False):
    if int(n) != n or n < 0:
        raise DomainError(f"depth must be a nonnegative integer, got {n!r}")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("argument must be finite")
    if strict:
        if np.any(arr <= 0):
            raise DomainError("argument must be > 0")
    elif np.any(arr < 0):
        raise DomainError("argument must be >= 0")
    return int(n), arr


def _out(arr):
    return arr[()] if arr.ndim == 0 else arr


def tower(n, x):
    """Return the list ``[s_0, s_1, ..., s_n]`` evaluated at ``x``."""
    n, x = _check(n, x)
    levels = [x]
    for _ in range(n):
        levels.append(np.log1p(levels[-1]))
    return levels


def s(n, x):
    """Iterated logarithm ``s_n(x) = log(1 + s_{n-1}(x))`` with ``s_0 = x``."""
    return _out(tower(n, x)[-1])


def r(n, x):
    """Product ``s_1(x) s_2(x) ... s_n(x)``; ``r(0, x) = 1``."""
    levels = tower(n, x)
    prod = np.ones_like(levels[0])
    for lev in levels[1:]:
        prod = prod * lev
    return _out(prod)


def level_factors(n, x):
    """``A_k = prod_{l=1}^{k} (1 + s_l)^{-1} (1 + x)^{-1}`` for ``k = 0..n``.

    ``A_{k}`` is the derivative of ``s_{k+1}``.
    """
    levels = tower(n, x)
    a = [1.0 / (1.0 + levels[0])]
    for lev in levels[1:]:
        a.append(a[-1] / (1.0 + lev))
    return a


def ds(n, x):
    """First derivative of ``s_n``.

    Equals ``prod_{k=1}^{n-1} (1 + s_k(x))^{-1} (1 + x)^{-1}``.  For
    ``n >= 1`` the formula is finite at ``x = 0`` (one-sided derivative).
    """
    if n < 1:
        raise DomainError("ds needs n >= 1")
    n, x = _check(n, x)
    return _out(level_factors(n - 1, x)[-1])


def d2s(n, x):
    """Second derivative of ``s_n``: ``-A_{n-1} (A_0 + A_1 + ... + A_{n-1})``."""
    if n < 1:
        raise DomainError("d2s needs n >= 1")
    n, x = _check(n, x)
    a = level_factors(n - 1, x)
    return _out(-a[-1] * sum(a))


def dr(n, x):
    """First derivative of ``r_n``; requires ``x > 0``.

    Sum over ``k`` of ``r_n / s_k`` times ``ds(k, x)``.
    """
    if n < 1:
        raise DomainError("dr needs n >= 1")
    n, x = _check(n, x, strict=True)
    levels = tower(n, x)
    a = level_factors(n - 1, x)
    total = np.zeros_like(x)
    for k in range(1, n + 1):
        others = np.ones_like(x)
        for l in range(1, n + 1):
            if l != k:
                others = others * levels[l]
        total = total + others * a[k - 1]
    return _out(total)
