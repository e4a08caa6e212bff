"""Numpy implementation of the period-pairing kernel.

Used when the compiled extension ``levydens._ckernel`` is unavailable
or when ``LEVYDENS_PURE=1``.  Semantics match the compiled kernel to
rounding.
"""

import numpy as np

from .symbol import IterLogParams, Kind, LevySymbol, characteristic

_KINDS = (Kind.CHAIN, Kind.SYM, Kind.SQ)
# blocks per vectorised chunk; bounds peak memory at ~4 * chunk * order doubles
CHUNK = 2048


def integrand(kind, n, eps, t, mode, xi):
    """``Re E``, ``Im E`` or ``Re E / xi`` for ``E = exp(-t eta)``."""
    sym = LevySymbol(IterLogParams(n, eps), _KINDS[kind])
    e = characteristic(sym, t, np.asarray(xi, dtype=float))
    if mode == 0:
        return np.real(e)
    if mode == 1:
        return np.imag(e)
    return np.real(e) / xi


def paired_blocks(kind, n, eps, t, mode, inv_s, base, k0, k1, nodes, weights):
    """Four-term paired quarter-period sums for blocks ``k0 <= k < k1``.

    Block ``k`` starts at ``a = base + 2 pi k`` and returns
    ``sum_j w_j cos(u_j) [F(a+u_j) - F(a+pi-u_j) - F(a+pi+u_j) + F(a+2pi-u_j)]``
    with ``F(u) = 2 * integrand(u * inv_s)``.
    """
    nodes = np.asarray(nodes, dtype=float)
    wc = np.asarray(weights, dtype=float) * np.cos(nodes)
    out = np.empty(max(k1 - k0, 0))
    offs = np.stack([nodes, np.pi - nodes, np.pi + nodes, 2 * np.pi - nodes])
    sign = np.array([1.0, -1.0, -1.0, 1.0])[:, None]
    for c0 in range(k0, k1, CHUNK):
        c1 = min(c0 + CHUNK, k1)
        a = base + 2.0 * np.pi * np.arange(c0, c1, dtype=float)
        u = a[:, None, None] + offs[None, :, :]
        f = 2.0 * integrand(kind, n, eps, t, mode, u * inv_s)
        comb = (sign[None] * f).sum(axis=1)
        out[c0 - k0 : c1 - k0] = comb @ wc
    return out
