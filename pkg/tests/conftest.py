import mpmath
import numpy as np
import pytest
from hypothesis import settings

from levydens.symbol import parse_symbol

mpmath.mp.dps = 40


def mp_s(n, x):
    """High-precision iterated log ``s_n(x)``."""
    v = mpmath.mpf(x)
    for _ in range(n):
        v = mpmath.log1p(v)
    return v


def mp_r(n, x):
    out = mpmath.mpf(1)
    for k in range(1, n + 1):
        out *= mp_s(k, x)
    return out


def mp_chain(n, eps, xi):
    """High-precision chain symbol value via principal complex logs."""
    u = mpmath.log(1 - 1j * mpmath.mpf(xi))
    for _ in range(n - 1):
        u = mpmath.log(1 + u)
    return u if eps == 1 else mpmath.power(u, eps)


@pytest.fixture
def gamma_symbol():
    return parse_symbol("chain:n=1,eps=1.0")


@pytest.fixture
def laplace_symbol():
    return parse_symbol("sq:n=1,eps=1.0")


@pytest.fixture
def sym2():
    return parse_symbol("sym:n=2,eps=1.0")


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b) / np.abs(b))


settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")
