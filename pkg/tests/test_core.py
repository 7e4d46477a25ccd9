import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dyadic.core import (CoefficientSequence, ModelParams, RatioDirection, RatioSequence,
                         RegimeTag, SelfSimilarBand, SequenceKind, ShellField, energy, rhs,
                         regime_classify, regime_thresholds, selfsimilar_band,
                         selfsimilar_residual, selfsimilar_residual_scale, sobolev_norm_sq,
                         stationary_residual, stationary_residual_scale,
                         wavenumber)
from dyadic.errors import InvalidParametersError, InvalidStateError


class TestParams:
    def test_defaults(self):
        p = ModelParams()
        assert (p.beta, p.delta1, p.delta2, p.forcing, p.n_shells) == (1.0, 1.0, 1.0, 0.0, 40)

    @pytest.mark.parametrize("kw", [dict(beta=0), dict(beta=-1), dict(delta1=-0.1),
                                    dict(delta1=0, delta2=0), dict(forcing=-1),
                                    dict(n_shells=1), dict(n_shells=2.5), dict(beta=math.nan)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParametersError):
            ModelParams(**kw)

    def test_frozen_and_wavenumbers(self):
        p = ModelParams(n_shells=5)
        with pytest.raises(Exception):
            p.beta = 2.0
        assert p.k.tolist() == [1, 2, 4, 8, 16, 32, 64]
        with pytest.raises(ValueError):
            p.k[0] = 3.0


class TestWavenumber:
    def test_exact_binary(self):
        assert wavenumber(0, 1.0) == 1.0
        assert wavenumber(10, 1.0) == 1024.0
        assert wavenumber(3, 0.5) == 2.0 ** 1.5
        assert wavenumber(4, 0.5) == 4.0

    def test_monotone(self):
        k = [wavenumber(n, 0.7) for n in range(50)]
        assert all(b > a for a, b in zip(k, k[1:]))


class TestRhs:
    def test_zero_field(self):
        p = ModelParams(n_shells=6)
        assert np.all(rhs(np.zeros(7), p) == 0)

    def test_forcing_only_shell0(self):
        p = ModelParams(n_shells=6, forcing=2.5)
        r = rhs(np.zeros(7), p)
        assert r[0] == 2.5 and np.all(r[1:] == 0)

    def test_matches_loop_oracle(self, rng):
        for _ in range(50):
            beta = rng.uniform(0.3, 2)
            d1, d2, F = rng.uniform(0, 3, 3)
            y = rng.normal(size=12)
            p = ModelParams(beta=beta, delta1=d1, delta2=d2, forcing=F, n_shells=11)
            np.testing.assert_allclose(rhs(y, p), oracles.rhs_loop(list(y), beta, d1, d2, F),
                                       rtol=1e-13, atol=1e-13)

    def test_energy_telescoping(self, rng):
        # sum_n Y_n dY_n/dt vanishes for unforced truncation
        for _ in range(1000):
            N = int(rng.integers(2, 40))
            p = ModelParams(beta=rng.uniform(0.2, 2.5), delta1=rng.uniform(0, 5),
                            delta2=rng.uniform(0.01, 5), n_shells=N)
            y = rng.normal(size=N + 1) * rng.uniform(0.1, 10)
            terms = y * rhs(y, p)
            assert abs(terms.sum()) <= 1e-12 * (1 + np.abs(terms).sum())

    def test_kp_and_obukhov_reductions(self, rng):
        y = rng.uniform(0.1, 1, 9)
        p = ModelParams(delta1=1.0, delta2=0.0, n_shells=8)
        k = p.k
        kp = np.array([k[n] * (y[n - 1] ** 2 if n else 0) - k[n + 1] * y[n] * (y[n + 1] if n < 8 else 0)
                       for n in range(9)])
        assert np.max(np.abs(rhs(y, p) - kp)) <= 1e-15
        p = ModelParams(delta1=0.0, delta2=1.0, n_shells=8)
        ob = np.array([-(k[n] * (y[n + 1] if n < 8 else 0) ** 2 - (k[n - 1] * y[n] * y[n - 1] if n else 0))
                       for n in range(9)])
        assert np.max(np.abs(rhs(y, p) - ob)) <= 1e-15

    def test_bad_state(self):
        p = ModelParams(n_shells=4)
        with pytest.raises(InvalidStateError):
            rhs(np.zeros(4), p)
        with pytest.raises(InvalidStateError):
            rhs(np.array([0, 1, np.nan, 0, 0.0]), p)
        with pytest.raises(InvalidStateError):
            ShellField([0.0, np.inf, 1.0])


class TestNorms:
    def test_energy_and_hs(self):
        y = np.array([1.0, 2.0, 3.0])
        assert energy(y) == 14.0
        assert sobolev_norm_sq(y, 0.0) == 14.0
        assert sobolev_norm_sq(y, 1.0) == 1 + 4 * 4 + 16 * 9

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30),
           st.floats(0, 2), st.floats(0, 2))
    def test_hs_monotone_in_s(self, y, s1, s2):
        lo, hi = sorted((s1, s2))
        assert sobolev_norm_sq(y, lo) <= sobolev_norm_sq(y, hi) * (1 + 1e-12)


class TestRegime:
    def test_thresholds(self):
        th = regime_thresholds(ModelParams())
        assert th["selfsimilar_lower"] == 2 ** -4
        assert th["critical"] == 2 ** (-4 / 3)

    @pytest.mark.parametrize("d1,d2,tag", [
        (0.1, 1, RegimeTag.OBUKHOV_DOMINANT), (1, 1, RegimeTag.KP_DOMINANT),
        (0.5, 1, RegimeTag.KP_DOMINANT), (2, 1, RegimeTag.OUTSIDE_SELFSIMILAR_BAND),
        (1, 0, RegimeTag.PURE_KP), (0, 1, RegimeTag.PURE_OBUKHOV),
        (2 ** (-4 / 3), 1, RegimeTag.CRITICAL_RATIO)])
    def test_tags(self, d1, d2, tag):
        assert regime_classify(ModelParams(delta1=d1, delta2=d2)).tag is tag

    def test_pure_kp_ratio(self):
        assert regime_classify(ModelParams(delta1=1, delta2=0)).ratio == math.inf

    @settings(max_examples=300, deadline=None)
    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.integers(-30, 30), st.floats(0.1, 3))
    def test_scale_invariance(self, d1, d2, e, beta):
        # power-of-two scaling keeps the ratio bit-identical
        lam = 2.0 ** e
        a = regime_classify(ModelParams(beta=beta, delta1=d1, delta2=d2))
        b = regime_classify(ModelParams(beta=beta, delta1=lam * d1, delta2=lam * d2))
        assert a.ratio == b.ratio and a.tag is b.tag

    def test_band(self):
        p = ModelParams()
        assert selfsimilar_band(p.replace(delta1=0.05)) is SelfSimilarBand.BELOW
        assert selfsimilar_band(p.replace(delta1=0.0625)) is SelfSimilarBand.MULTIPLE
        assert selfsimilar_band(p.replace(delta1=0.08)) is SelfSimilarBand.MULTIPLE
        assert selfsimilar_band(p.replace(delta1=0.5)) is SelfSimilarBand.UNIQUE
        assert selfsimilar_band(p.replace(delta1=1.0)) is SelfSimilarBand.UNIQUE
        assert selfsimilar_band(p.replace(delta1=1.5)) is SelfSimilarBand.ABOVE


class TestResiduals:
    def test_power_law_constant_solution(self):
        d1, d2, F = 0.3, 0.7, 1.7
        p = ModelParams(beta=1.3, delta1=d1, delta2=d2, forcing=F)
        C = oracles.k41_power_law_constant(1.3, d1, d2, F)
        a = C * 2.0 ** (-1.3 * np.arange(30) / 3)
        rel = np.abs(stationary_residual(a, p)) / stationary_residual_scale(a, p)
        assert np.max(rel) < 1e-14

    def test_component0_definition(self):
        p = ModelParams(delta1=1.0, delta2=2.0, forcing=0.5)
        a = np.array([1.0, 0.5, 0.25])
        assert stationary_residual(a, p)[0] == 1 * 2 * 1 * 0.5 + 2 * 0.25 - 0.5

    def test_selfsimilar_residual_kp_fractions(self):
        # exact KP recursion rescaled by 1/k1 satisfies the model relation
        a = np.array([float(x) / 2 for x in oracles.kp_fraction_sequence(1, 12)])
        p = ModelParams(delta1=1.0, delta2=0.0)
        rel = np.abs(selfsimilar_residual(a, p)) / selfsimilar_residual_scale(a, p)
        assert np.max(rel) < 1e-15

    def test_sequence_types(self):
        p = ModelParams()
        s = CoefficientSequence([1.0, 2.0, 3.0], SequenceKind.CONSTANT, p)
        assert len(s) == 3
        with pytest.raises(ValueError):
            s.values[0] = 2.0
        r = RatioSequence.from_coefficients([1.0, 2 ** (-1 / 3), 2 ** (-2 / 3)], 1.0)
        np.testing.assert_allclose(r.values, 1.0, rtol=1e-15)
        rb = RatioSequence.from_coefficients([1.0, 0.5, 0.2], 1.0, RatioDirection.BACKWARD)
        np.testing.assert_allclose(rb.values * RatioSequence.from_coefficients([1.0, 0.5, 0.2], 1.0).values, 1.0)
