import math

import numpy as np
import pytest
from scipy import stats

from levydens.density import (
    DensityQuery,
    LogGrid,
    cf_roundtrip,
    convolution_check,
    density,
    density_grid,
    near_zero_mass,
    normalization,
)
from levydens.errors import DomainError, SingularityError, ToleranceNotMet
from levydens.oscint import PairingConfig
from levydens.symbol import parse_symbol


class TestOracles:
    def test_gamma_t2(self, gamma_symbol):
        res = density(gamma_symbol, 2.0, 1.0)
        assert res.p == pytest.approx(math.exp(-1), rel=1e-9)
        assert res.method_used == "pairing" and res.k_used > 0

    def test_exponential(self, gamma_symbol):
        assert density(gamma_symbol, 1.0, 0.5).p == pytest.approx(math.exp(-0.5), rel=1e-8)

    def test_laplace(self, laplace_symbol):
        assert density(laplace_symbol, 1.0, 1.0).p == pytest.approx(0.5 * math.exp(-1), rel=1e-8)

    @pytest.mark.parametrize("t", [0.3, 0.75, 1.5, 3.0])
    def test_gamma_family(self, gamma_symbol, t):
        xs = np.geomspace(0.05, 12, 9)
        got = np.array([density(gamma_symbol, t, x).p for x in xs])
        np.testing.assert_allclose(got, stats.gamma.pdf(xs, t), rtol=1e-6)

    def test_variance_gamma_like(self):
        # sq n=1 at time t: characteristic (1 + xi^2)^-t, the symmetric variance-gamma law
        sym = parse_symbol("sq:n=1,eps=1.0")
        t = 2.0
        xs = np.array([0.2, 1.0, 3.0])
        ref = stats.laplace.pdf(xs)  # t = 1
        np.testing.assert_allclose([density(sym, 1.0, x).p for x in xs], ref, rtol=1e-8)
        # Laplace * Laplace has density (1 + |x|) e^{-|x|} / 4
        np.testing.assert_allclose([density(sym, t, x).p for x in xs], (1 + xs) * np.exp(-xs) / 4, rtol=1e-8)


class TestMethods:
    def test_reference_matches(self, gamma_symbol):
        res = density(gamma_symbol, 2.0, 1.0, method="reference")
        assert res.method_used == "reference"
        assert res.p == pytest.approx(math.exp(-1), rel=1e-8)

    def test_reference_fails_when_not_integrable(self, gamma_symbol):
        with pytest.raises(ToleranceNotMet):
            density(gamma_symbol, 0.5, 1.0, method="reference")

    def test_auto(self, gamma_symbol):
        assert density(gamma_symbol, 2.5, 1.0, method="auto").method_used == "reference"
        assert density(gamma_symbol, 0.5, 1.0, method="auto").method_used == "pairing"
        assert density(parse_symbol("chain:n=2"), 3.0, 1.0, method="auto").method_used == "pairing"

    def test_bad_method(self, gamma_symbol):
        with pytest.raises(ValueError):
            density(gamma_symbol, 1.0, 1.0, method="fft")

    def test_errors(self, gamma_symbol):
        with pytest.raises(SingularityError):
            density(gamma_symbol, 1.0, 0.0)
        with pytest.raises(DomainError):
            density(gamma_symbol, -1.0, 1.0)

    def test_envelope_floor(self, sym2):
        near = density(sym2, 1.0, 1e-7)
        assert near.method_used == "envelope"
        anchor = density(sym2, 1.0, 1e-6)
        assert near.p > anchor.p > 0


class TestGrid:
    def test_gamma_grid(self, gamma_symbol):
        res = density_grid(DensityQuery(gamma_symbol, 2.0, [0.5, 1.0, 2.0]))
        np.testing.assert_allclose([r.p for r in res], [0.5 * math.exp(-0.5), math.exp(-1), 2 * math.exp(-2)], rtol=1e-9)
        assert [r.x for r in res] == [0.5, 1.0, 2.0]

    def test_empty(self, gamma_symbol):
        assert density_grid(DensityQuery(gamma_symbol, 1.0, [])) == []

    def test_symmetric_pm(self, sym2):
        res = density_grid(DensityQuery(sym2, 1.0, [-3.0, 3.0, -0.01, 0.01]))
        assert res[0].p == res[1].p
        assert res[2].p == res[3].p

    def test_threads_env(self, gamma_symbol, monkeypatch):
        monkeypatch.setenv("LEVYDENS_THREADS", "3")
        res = density_grid(DensityQuery(gamma_symbol, 2.0, list(np.geomspace(0.1, 5, 7))))
        assert all(r.error is None for r in res)

    def test_errors_embedded(self, gamma_symbol):
        q = DensityQuery(gamma_symbol, 0.5, [1.0], method="reference")
        res = density_grid(q)
        assert res[0].error and math.isnan(res[0].p)

    def test_query_validation(self, gamma_symbol):
        with pytest.raises(SingularityError):
            DensityQuery(gamma_symbol, 1.0, [0.0])
        with pytest.raises(DomainError):
            DensityQuery(gamma_symbol, 0.0, [1.0])

    @pytest.mark.parametrize("spec,t", [("chain:n=2,eps=1.0", 1.0), ("chain:n=2,eps=0.5", 0.5), ("sym:n=2,eps=1.0", 0.5)])
    def test_positivity(self, spec, t):
        sym = parse_symbol(spec)
        for r in density_grid(DensityQuery(sym, t, list(np.geomspace(1e-4, 1e4, 17)))):
            assert r.p >= -r.err_est

    @pytest.mark.parametrize("spec", ["chain:n=1,eps=1.0", "chain:n=2,eps=1.0", "chain:n=2,eps=0.5"])
    def test_subordinator_support(self, spec):
        sym = parse_symbol(spec)
        for r in density_grid(DensityQuery(sym, 1.0, list(-np.geomspace(0.1, 10, 12)))):
            assert abs(r.p) <= max(r.err_est, 1e-6)


class TestValidators:
    def test_near_zero_mass_exponential(self, gamma_symbol):
        m, err = near_zero_mass(gamma_symbol, 1.0, 0.3)
        assert m == pytest.approx(1 - math.exp(-0.3), abs=1e-10)

    def test_normalization_oracles(self, gamma_symbol, laplace_symbol):
        for sym, t in ((gamma_symbol, 2.0), (laplace_symbol, 1.0)):
            mass, err = normalization(sym, t)
            assert abs(mass - 1) < 1e-6 and err < 1e-6

    def test_cf_roundtrip(self, gamma_symbol, laplace_symbol):
        assert cf_roundtrip(gamma_symbol, 2.0, 0.3) < 1e-3
        assert cf_roundtrip(laplace_symbol, 1.0, 1.0) < 1e-3
        mass, _ = normalization(gamma_symbol, 2.0)
        assert cf_roundtrip(gamma_symbol, 2.0, 0.0) == pytest.approx(abs(mass - 1), abs=1e-15)

    def test_convolution_gamma(self, gamma_symbol):
        assert convolution_check(gamma_symbol, 1.0, 1.0, np.geomspace(0.1, 10, 6)) < 1e-3

    def test_convolution_laplace(self, laplace_symbol):
        assert convolution_check(laplace_symbol, 0.5, 0.5, [0.3, 2.0], y_max=60.0) < 1e-3

    def test_convolution_guards(self, gamma_symbol):
        with pytest.raises(DomainError):
            convolution_check(gamma_symbol, 0.0, 1.0, [1.0])
        assert convolution_check(gamma_symbol, 1.0, 1.0, []) == 0.0

    def test_log_grid(self):
        xs, w = LogGrid(1e-3, 1e3, 2, 8).nodes()
        assert xs.min() > 1e-3 and xs.max() < 1e3
        assert np.sum(w) == pytest.approx(1e3 - 1e-3, rel=1e-12)
        with pytest.raises(DomainError):
            LogGrid(1.0, 0.5)
