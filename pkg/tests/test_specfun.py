import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma as sp_gamma

from ggbm import specfun
from ggbm.errors import AccuracyError, DomainError, SeriesOverflowError
from ggbm.specfun import MittagLefflerParams, MWrightEval

from oracles import mwright_mp

BETAS = [0.25, 0.3, 0.5, 0.7, 0.75]


class TestLogGamma:
    def test_examples(self):
        assert specfun.log_gamma(1.0) == 0.0
        assert math.isclose(specfun.log_gamma(0.5), math.log(math.sqrt(math.pi)), rel_tol=1e-14)
        assert math.isclose(specfun.log_gamma(10.0), math.log(362880.0), rel_tol=1e-14)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
    def test_rejects_nonpositive(self, x):
        with pytest.raises(DomainError):
            specfun.log_gamma(x)


class TestRecipGamma:
    def test_examples(self):
        assert specfun.recip_gamma(0.0) == 0.0
        assert specfun.recip_gamma(1.0) == 1.0
        assert math.isclose(specfun.recip_gamma(-0.5), -1 / (2 * math.sqrt(math.pi)), rel_tol=1e-13)

    @pytest.mark.parametrize("x", [0.0, -1.0, -2.0, -3.0, -17.0, -250.0])
    def test_exact_zero_at_poles(self, x):
        assert specfun.recip_gamma(x) == 0.0

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.5, 7.3])
    def test_times_gamma(self, x):
        assert abs(specfun.recip_gamma(x) * math.exp(specfun.log_gamma(x)) - 1) < 1e-12

    @pytest.mark.parametrize("beta", [0.3, 0.5, 0.7])
    def test_reflection_identity(self, beta):
        for n in range(21):
            a = beta + beta * n
            lhs = specfun.recip_gamma(1 - beta - beta * n)
            rhs = math.sin(math.pi * a) * math.gamma(a) / math.pi
            if (Fraction(str(beta)) * (n + 1)).denominator == 1:
                assert lhs == 0.0
            else:
                assert abs(lhs - rhs) <= 1e-10 * abs(rhs)

    def test_matches_scipy_away_from_poles(self):
        x = np.linspace(-30.3, 160.7, 1001)
        assert np.allclose(specfun.recip_gamma(x), 1 / sp_gamma(x), rtol=1e-11, atol=0)

    def test_large_arguments_underflow_to_zero(self):
        assert specfun.recip_gamma(400.0) == 0.0
        assert specfun.recip_gamma(170.5) > 0.0
        assert specfun.recip_gamma(200.0) == 0.0  # 1/199! underflows

    def test_zero_when_beta_multiple_is_integer(self):
        # 0.3 * 10 is not exactly 3 in floating point
        assert specfun.recip_gamma(1 - 0.3 - 0.3 * 9) == 0.0
        assert specfun.recip_gamma(1 - 0.5 - 0.5 * 1) == 0.0

    def test_vectorized(self):
        out = specfun.recip_gamma(np.array([0.0, 1.0, 2.0, -1.0]))
        assert out.tolist() == [0.0, 1.0, 1.0, 0.0]


class TestMWright:
    def test_examples(self):
        assert math.isclose(specfun.mwright(0.5, 0.0), 1 / math.sqrt(math.pi), rel_tol=1e-15)
        assert math.isclose(specfun.mwright(0.5, 2.0), math.exp(-1) / math.sqrt(math.pi), rel_tol=1e-12)
        assert math.isclose(specfun.mwright(0.25, 0.0), 1 / math.gamma(0.75), rel_tol=1e-15)

    def test_closed_form_half(self):
        x = np.linspace(0.0, 8.0, 801)
        ref = np.exp(-x**2 / 4) / math.sqrt(math.pi)
        assert np.max(np.abs(specfun.mwright(0.5, x) / ref - 1)) < 1e-8

    @pytest.mark.parametrize("beta", BETAS)
    def test_against_high_precision_series(self, beta):
        for x in [0.1, 0.7, 1.9, 3.3, 5.0, 7.5, 11.0]:
            if specfun.mwright_log_asymptotic(beta, x) < -100:
                continue  # the reference would need hundreds of digits
            ref = mwright_mp(beta, x)
            assert math.isclose(specfun.mwright(beta, x), ref, rel_tol=1e-9), x

    @pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
    def test_nonnegative(self, beta):
        x = np.arange(0.0, 20.0 + 1e-9, 0.05)
        assert np.all(specfun.mwright(beta, x) >= 0)

    @pytest.mark.parametrize("beta", [0.3, 0.5, 0.7])
    def test_normalization_with_tail_bound(self, beta):
        X = 25.0
        body, _ = integrate.quad(lambda t: specfun.mwright(beta, t), 0, X, limit=200,
                                 epsabs=1e-13, points=[specfun.default_crossover(beta)])
        # tail beyond X: the log-asymptote decays faster than exp(-(x - X)),
        # so exp(log_asym(X)) bounds the remaining mass up to O(log X)
        tail = math.exp(specfun.mwright_log_asymptotic(beta, X))
        assert tail < 1e-9
        assert abs(body + tail - 1) < 1e-6

    @pytest.mark.parametrize("beta", BETAS)
    def test_moments_by_quadrature(self, beta):
        cx = specfun.default_crossover(beta)
        for n in range(4):
            val, _ = integrate.quad(lambda t: t**n * specfun.mwright(beta, t), 0, 60,
                                    limit=300, points=[cx], epsabs=1e-13)
            assert math.isclose(val, specfun.mwright_moment(beta, n), rel_tol=1e-9)

    @pytest.mark.parametrize("beta", [0.25, 0.3, 0.5, 0.6])
    def test_branches_continuous_at_crossover(self, beta):
        cx = specfun.default_crossover(beta)
        left = specfun.mwright(beta, cx)
        right = specfun.mwright(beta, np.nextafter(cx, np.inf))
        assert abs(right / left - 1) < 1e-8
        asym = specfun.mwright(MWrightEval.for_beta(beta, tail="asymptotic"), np.nextafter(cx, np.inf))
        assert abs(asym / left - 1) < 0.01

    def test_calibrated_asymptotic_shape(self):
        ev = MWrightEval.for_beta(0.5, tail="asymptotic")
        x = np.array([6.0, 9.0, 14.0])
        ref = np.exp(-x**2 / 4) / math.sqrt(math.pi)
        # prefactor fitted at one point only, so agreement is loose
        assert np.all(np.abs(specfun.mwright(ev, x) / ref - 1) < 0.05)

    def test_crossover_is_cached_and_positive(self):
        for beta in BETAS:
            assert 2.0 < specfun.default_crossover(beta) < 10.0
        assert MWrightEval.for_beta(0.3) is MWrightEval.for_beta(0.3)

    def test_series_beyond_safe_range_raises(self):
        with pytest.raises(AccuracyError):
            MWrightEval(0.3, crossover_x=60.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            specfun.mwright(0.5, -1.0)
        with pytest.raises(DomainError):
            specfun.mwright(1.5, 1.0)

    def test_far_tail_is_zero_not_nan(self):
        assert specfun.mwright(0.7, 500.0) == 0.0


class TestLogAsymptotic:
    def test_examples(self):
        assert specfun.mwright_log_asymptotic(0.5, 4.0) == -4.0
        assert specfun.mwright_log_asymptotic(0.5, 2.0) == -1.0
        for beta in [0.2, 0.5, 0.8]:
            assert math.isclose(specfun.mwright_log_asymptotic(beta, 1 / beta), -(1 - beta) / beta)


class TestMittagLeffler:
    def test_examples(self):
        assert math.isclose(specfun.mittag_leffler(MittagLefflerParams(1, 1), 1.0), math.e, rel_tol=1e-14)
        assert math.isclose(specfun.mittag_leffler(MittagLefflerParams(2, 1), 4.0), math.cosh(2), rel_tol=1e-14)
        assert math.isclose(specfun.mittag_leffler(MittagLefflerParams(0.5, 0.5), 0.0),
                            1 / math.sqrt(math.pi), rel_tol=1e-15)

    def test_exponential_and_cosh(self):
        for z in np.linspace(0.0, 10.0, 101):
            assert abs(specfun.mittag_leffler(MittagLefflerParams(1, 1), z) - math.exp(z)) <= 1e-10 * math.exp(z)
            c = math.cosh(math.sqrt(z))
            assert abs(specfun.mittag_leffler(MittagLefflerParams(2, 1), z) - c) <= 1e-10 * c

    def test_small_u_against_mpmath(self):
        import mpmath

        for u, v, z in [(0.3, 0.3, 2.0), (0.6, 0.6, 5.0), (0.45, 1.0, 1.5)]:
            ref = mpmath.nsum(lambda n: mpmath.mpf(z) ** n * mpmath.rgamma(u * n + v), [0, mpmath.inf])
            assert math.isclose(specfun.mittag_leffler(MittagLefflerParams(u, v), z), float(ref), rel_tol=1e-11)

    def test_overflow_guard(self):
        with pytest.raises(SeriesOverflowError):
            specfun.mittag_leffler(MittagLefflerParams(0.5, 0.5), 1e3)

    def test_cancellation_detected(self):
        with pytest.raises(AccuracyError):
            specfun.mittag_leffler(MittagLefflerParams(1, 1), -40.0)

    def test_params_validated(self):
        with pytest.raises(DomainError):
            MittagLefflerParams(0.0, 1.0)


class TestMWrightMoment:
    def test_examples(self):
        assert specfun.mwright_moment(0.5, 0) == 1.0
        assert math.isclose(specfun.mwright_moment(0.5, 1), 2 / math.sqrt(math.pi), rel_tol=1e-14)
        assert math.isclose(specfun.mwright_moment(0.5, 2), 2.0, rel_tol=1e-14)
