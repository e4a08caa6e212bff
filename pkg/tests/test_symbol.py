import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from levydens.errors import DomainError, SingularityError
from levydens.symbol import (
    IterLogParams,
    Kind,
    LevySymbol,
    chain_jet,
    characteristic,
    clog1p,
    eta,
    eta_parts,
    parse_symbol,
    second_derivative_lower,
)

from conftest import mp_chain, mp_s

ALL_SPECS = [
    "chain:n=1,eps=1.0",
    "chain:n=2,eps=1.0",
    "chain:n=3,eps=0.5",
    "chain:n=2,eps=0.3",
    "sym:n=1,eps=1.0",
    "sym:n=3,eps=1.0",
    "sym:n=2,eps=0.5",
    "sq:n=1,eps=1.0",
    "sq:n=2,eps=0.7",
]


def complex_fd(fun, x, h=None):
    h = h or abs(x) * 1e-6 + 1e-9
    return (complex(fun(x + h)) - complex(fun(x - h))) / (2 * h)


class TestParams:
    @pytest.mark.parametrize("n,eps", [(0, 1.0), (2, 0.0), (2, 1.5), (1.5, 1.0)])
    def test_invalid(self, n, eps):
        with pytest.raises(DomainError):
            IterLogParams(n, eps)

    def test_parse_roundtrip(self):
        sym = parse_symbol("sym:n=2,eps=0.5")
        assert sym.kind is Kind.SYM and sym.n == 2 and sym.eps == 0.5
        assert parse_symbol(sym.spec()) == sym
        assert parse_symbol("chain:n=3").eps == 1.0

    @pytest.mark.parametrize("text", ["foo:n=1", "chain:eps=1", "chain:n=x", "chain:n=1,q=2", "chain"])
    def test_parse_errors(self, text):
        with pytest.raises(DomainError):
            parse_symbol(text)


class TestChainJet:
    def test_at_zero(self):
        j = chain_jet(1, 0.0)
        assert j.value == 0
        assert j.d1 == pytest.approx(-1j)
        # d/dxi of -i/(1 - i xi) is (1 - i xi)^-2, equal to +1 at 0
        assert j.d2 == pytest.approx(1.0)

    def test_n1_value(self):
        j = chain_jet(1, 1.0)
        assert complex(j.value) == pytest.approx(complex(mp_chain(1, 1, 1)), abs=1e-15)
        assert complex(j.value) == pytest.approx(0.5 * math.log(2) - 1j * math.pi / 4, abs=1e-15)

    def test_n2_value_and_derivatives(self):
        j = chain_jet(2, 1.0)
        assert complex(j.value) == pytest.approx(cmath.log(1 + 0.5 * math.log(2) - 1j * math.pi / 4), abs=1e-15)
        d1 = complex(mpmath.diff(lambda v: mp_chain(2, 1, v), 1))
        d2 = complex(mpmath.diff(lambda v: mp_chain(2, 1, v), 1, 2))
        assert abs(complex(j.d1) - d1) / abs(d1) < 1e-12
        assert abs(complex(j.d2) - d2) / abs(d2) < 1e-12
        assert abs(complex(j.d1) - complex_fd(lambda v: chain_jet(2, v).value, 1.0)) / abs(d1) < 1e-7

    def test_clog1p_small(self):
        z = 1e-10 - 2e-10j
        assert complex(clog1p(z)) == pytest.approx(complex(mpmath.log1p(mpmath.mpc(z))), rel=1e-15)


class TestEta:
    def test_chain_n1(self):
        j = eta(parse_symbol("chain:n=1"), 1.0)
        e1, e2 = eta_parts(parse_symbol("chain:n=1"), 1.0)
        assert e1 == pytest.approx(0.3465736, abs=1e-7)
        assert e2 == pytest.approx(0.7853982, abs=1e-7)
        assert complex(j.value) == pytest.approx(complex(e1, -e2))

    def test_sym_even(self):
        assert complex(eta(parse_symbol("sym:n=1"), -3.0).value) == pytest.approx(math.log(4))

    def test_value_at_zero_eps_below_one(self):
        sym = parse_symbol("chain:n=2,eps=0.5")
        assert eta(sym, 0.0, derivatives=False).value == 0
        with pytest.raises(SingularityError):
            eta(sym, 0.0)

    def test_parts_at_zero(self):
        assert eta_parts(parse_symbol("chain:n=1"), 0.0) == (0.0, 0.0)

    @pytest.mark.parametrize("spec", [s for s in ALL_SPECS if not s.startswith("chain")])
    def test_symmetric_parts(self, spec):
        sym = parse_symbol(spec)
        xs = np.linspace(-50, 50, 11)
        e1, e2 = eta_parts(sym, xs)
        assert np.all(e2 == 0)
        n, eps = sym.n, sym.eps
        arg = np.abs(xs) if sym.kind is Kind.SYM else xs**2
        ref = [float(mp_s(n, a) ** eps) for a in arg]
        np.testing.assert_allclose(e1, ref, rtol=1e-14)

    @pytest.mark.parametrize("n,eps", [(1, 1.0), (2, 1.0), (3, 0.5), (2, 0.25)])
    def test_chain_against_mp(self, n, eps):
        sym = LevySymbol(IterLogParams(n, eps), Kind.CHAIN)
        for xi in (1e-4, 0.3, 7.0, 1e5, -2.0):
            ref = complex(mp_chain(n, eps, xi))
            assert abs(complex(eta(sym, xi).value) - ref) <= 1e-14 * max(abs(ref), 1e-300)

    @pytest.mark.parametrize("spec", ALL_SPECS)
    def test_jets_against_finite_differences(self, spec):
        sym = parse_symbol(spec)
        xs = np.geomspace(1e-3, 1e6, 200)
        jet = eta(sym, xs)
        h = xs * 1e-6 + 1e-9
        fd1 = (eta(sym, xs + h).value - eta(sym, xs - h).value) / (2 * h)
        fd2 = (eta(sym, xs + h).d1 - eta(sym, xs - h).d1) / (2 * h)
        assert np.max(np.abs(fd1 - jet.d1) / np.abs(jet.d1)) < 1e-6
        assert np.max(np.abs(fd2 - jet.d2) / np.abs(jet.d2)) < 1e-6

    @pytest.mark.parametrize("spec", ALL_SPECS)
    @given(xi=st.floats(1e-6, 1e8))
    @settings(max_examples=40, deadline=None)
    def test_hermitian_and_nonnegative(self, spec, xi):
        sym = parse_symbol(spec)
        plus = complex(eta(sym, xi, derivatives=False).value)
        minus = complex(eta(sym, -xi, derivatives=False).value)
        assert minus == pytest.approx(plus.conjugate(), rel=1e-14, abs=1e-300)
        assert plus.real >= 0

    def test_chain_eta1_n1_closed_form(self):
        xs = np.geomspace(1e-3, 1e6, 50)
        e1, e2 = eta_parts(parse_symbol("chain:n=1"), xs)
        np.testing.assert_allclose(e1, 0.5 * np.log1p(xs**2), rtol=1e-14)
        np.testing.assert_allclose(e2, np.arctan(xs), rtol=1e-14)

    def test_nonfinite(self):
        with pytest.raises(DomainError):
            eta(parse_symbol("sym:n=1"), math.inf)


class TestCharacteristic:
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.5])
    @pytest.mark.parametrize("xi", [0.3, 1.0, 4.0])
    def test_gamma_cf(self, t, xi):
        # E exp(i xi X) for X ~ Gamma(t, 1), by direct quadrature of the density
        dens = lambda x: x ** (t - 1) * math.exp(-x) / special.gamma(t)
        # x = u**(1/t) removes the singularity at 0 on [0, 1]
        head = lambda u, trig: trig(xi * u ** (1 / t)) * math.exp(-(u ** (1 / t))) / (t * special.gamma(t))
        re = integrate.quad(head, 0, 1, args=(math.cos,), epsabs=1e-13)[0]
        im = integrate.quad(head, 0, 1, args=(math.sin,), epsabs=1e-13)[0]
        re += integrate.quad(lambda x: dens(x + 1), 0, np.inf, weight="cos", wvar=xi)[0] * math.cos(xi) \
            - integrate.quad(lambda x: dens(x + 1), 0, np.inf, weight="sin", wvar=xi)[0] * math.sin(xi)
        im += integrate.quad(lambda x: dens(x + 1), 0, np.inf, weight="sin", wvar=xi)[0] * math.cos(xi) \
            + integrate.quad(lambda x: dens(x + 1), 0, np.inf, weight="cos", wvar=xi)[0] * math.sin(xi)
        cf = complex(characteristic(parse_symbol("chain:n=1"), t, xi))
        assert cf == pytest.approx(complex(re, im), abs=1e-8)
        assert cf == pytest.approx((1 - 1j * xi) ** (-t), rel=1e-14)


class TestSecondDerivativeLower:
    def test_n1_exact(self):
        xs = np.geomspace(1e-3, 1e3, 20)
        bound, full = second_derivative_lower(1, xs)
        np.testing.assert_allclose(bound, (1 + xs) ** -2.0, rtol=1e-15)
        np.testing.assert_allclose(full, bound, rtol=1e-15)

    def test_n2_at_one(self):
        bound, full = second_derivative_lower(2, 1.0)
        l2 = math.log(2)
        a0, a1 = 0.5, 1 / ((1 + l2) * 2)
        assert bound == pytest.approx(a1 * a0, rel=1e-15)
        assert full == pytest.approx(a1 * (a0 + a1), rel=1e-15)
        assert full > bound

    def test_n3_against_fd(self):
        ref = float(mpmath.diff(lambda v: mp_s(3, v), 10, 2))
        _, full = second_derivative_lower(3, 10.0)
        assert full == pytest.approx(-ref, rel=1e-6)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("eps", [1.0, 0.7, 0.3])
    def test_bound_holds(self, n, eps):
        xs = np.geomspace(1e-4, 1e8, 200)
        bound, full = second_derivative_lower(n, xs, eps)
        assert np.all(bound > 0)
        assert np.all(full >= bound * (1 - 1e-13))
        # full agrees with the high-precision second derivative of s_n^eps
        for x in xs[::40]:
            ref = -float(mpmath.diff(lambda v: mp_s(n, v) ** eps, x, 2))
            assert full[list(xs).index(x)] == pytest.approx(ref, rel=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            second_derivative_lower(2, 0.0)
