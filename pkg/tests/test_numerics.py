import numpy as np
import pytest

from atmolink import (
    DomainError,
    RandomSource,
    StatisticsError,
    bessel_i0,
    bessel_i0e,
    bessel_i1,
    bessel_i1e,
    lambert_w0,
    lambert_w_of_exp,
    mvn_sqrt_factor,
    sample_mvn,
)

from oracles import i0_series, i0e_asymptotic, i1_series, lambert_newton


class TestBessel:
    def test_i0_at_zero(self):
        assert bessel_i0(0.0) == 1.0

    def test_i0_series_value(self):
        # power-series oracle summed to machine precision
        assert bessel_i0(1.0) == pytest.approx(1.2660658777520084, rel=1e-14)
        assert bessel_i0(1.0) == pytest.approx(i0_series(1.0), rel=1e-14)

    def test_i1_at_zero(self):
        assert bessel_i1(0.0) == 0.0

    @pytest.mark.parametrize("x, expected", [(1.0, 0.5651591039924851), (2.0, 1.5906368546373291)])
    def test_i1_series_values(self, x, expected):
        assert bessel_i1(x) == pytest.approx(expected, rel=1e-14)
        assert bessel_i1(x) == pytest.approx(i1_series(x), rel=1e-14)

    def test_series_oracle_agreement_over_range(self):
        for x in np.linspace(0.0, 60.0, 121):
            assert bessel_i0(x) == pytest.approx(i0_series(x), rel=1e-13)
            assert bessel_i1(x) == pytest.approx(i1_series(x), rel=1e-13)

    def test_scaled_form_large_argument(self):
        # e^{-x} I0(x) at x=800 stays finite and matches the asymptote
        value = bessel_i0e(800.0)
        assert np.isfinite(value)
        assert value == pytest.approx(1.0 / np.sqrt(2.0 * np.pi * 800.0), abs=3e-6)
        assert value == pytest.approx(0.01410, abs=5e-5)
        assert value == pytest.approx(i0e_asymptotic(800.0), rel=1e-13)

    def test_scaled_consistent_with_unscaled(self):
        x = np.linspace(0.01, 200.0, 77)
        assert bessel_i0e(x) * np.exp(x) == pytest.approx(bessel_i0(x), rel=1e-12)

    def test_scaled_no_overflow_far_beyond_exp_range(self):
        for x in (1e4, 1e8):
            assert 0.0 < bessel_i0e(x) < 1.0
            assert 0.0 < bessel_i1e(x) < 1.0

    def test_derivative_identity(self):
        # I0'(x) = I1(x), by central finite differences
        h = 1e-6
        for x in np.linspace(0.1, 50.0, 60):
            derivative = (bessel_i0(x + h) - bessel_i0(x - h)) / (2.0 * h)
            assert derivative == pytest.approx(bessel_i1(x), rel=1e-6)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -1.0])
    def test_domain_errors(self, bad):
        for fn in (bessel_i0, bessel_i1, bessel_i0e, bessel_i1e):
            with pytest.raises(DomainError):
                fn(bad)

    def test_array_in_array_out(self):
        out = bessel_i0(np.array([0.0, 1.0]))
        assert out.shape == (2,)
        assert isinstance(bessel_i0(1.0), float)


class TestLambertW:
    def test_trivial_points(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(np.e) == pytest.approx(1.0, rel=1e-14)

    def test_omega_constant(self):
        # Newton-iteration oracle on w e^w - 1 = 0
        assert lambert_w0(1.0) == pytest.approx(0.5671432904097838, rel=1e-14)
        assert lambert_w0(1.0) == pytest.approx(lambert_newton(1.0), rel=1e-14)

    def test_round_trip_property(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0.0, 1e6, 1000)
        w = lambert_w0(x)
        assert np.all(np.abs(w * np.exp(w) - x) <= 1e-10 * np.maximum(1.0, x))

    def test_of_exp_matches_direct_form(self):
        y = np.linspace(-30.0, 90.0, 61)
        assert lambert_w_of_exp(y) == pytest.approx(lambert_w0(np.exp(y)), rel=1e-12)

    def test_of_exp_beyond_overflow(self):
        # w + log w = y defines W(e^y) without ever forming e^y
        for y in (750.0, 1e4, 1e9):
            w = lambert_w_of_exp(y)
            assert w + np.log(w) == pytest.approx(y, rel=1e-13)

    @pytest.mark.parametrize("bad", [-0.5, np.nan, np.inf])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            lambert_w0(bad)


class TestRandomSource:
    def test_identical_pair_reproduces_bitwise(self):
        a = RandomSource(12345, 3).generator().standard_normal(1000)
        b = RandomSource(12345, 3).generator().standard_normal(1000)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RandomSource(12345, 0).generator().standard_normal(10_000)
        b = RandomSource(12345, 1).generator().standard_normal(10_000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_validation(self):
        with pytest.raises(DomainError):
            RandomSource(-1)
        with pytest.raises(DomainError):
            RandomSource(0, -2)


class TestMvnSampling:
    def test_zero_covariance_returns_mean(self):
        mu = np.array([1.0, -2.0, 0.5, 3.0])
        rng = RandomSource(7).generator()
        draws = sample_mvn(mu, np.zeros((4, 4)), rng, size=50)
        assert np.array_equal(draws, np.tile(mu, (50, 1)))

    def test_identity_covariance_statistics(self):
        rng = RandomSource(8).generator()
        draws = sample_mvn(np.zeros(4), np.eye(4), rng, size=100_000)
        cov = np.cov(draws.T)
        assert np.linalg.norm(cov - np.eye(4)) / np.linalg.norm(np.eye(4)) < 0.05

    def test_diagonal_covariance_variance(self):
        rng = RandomSource(9).generator()
        draws = sample_mvn(np.zeros(4), np.diag([4.0, 1.0, 1.0, 1.0]), rng, size=100_000)
        assert np.var(draws[:, 0]) == pytest.approx(4.0, rel=0.05)

    def test_factor_reproduces_covariance(self):
        sigma = np.array([[2.0, 0.3], [0.3, 1.0]])
        factor = mvn_sqrt_factor(sigma)
        assert factor @ factor.T == pytest.approx(sigma, rel=1e-12)

    def test_asymmetric_rejected(self):
        with pytest.raises(StatisticsError, match="not symmetric"):
            mvn_sqrt_factor(np.array([[1.0, 0.2], [0.1, 1.0]]))

    def test_indefinite_rejected_with_matrix_reported(self):
        sigma = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(StatisticsError, match="positive semidefinite"):
            mvn_sqrt_factor(sigma)

    def test_marginally_negative_eigenvalue_clamped(self):
        sigma = np.diag([1.0, -5e-11])
        factor = mvn_sqrt_factor(sigma)
        assert factor[1, 1] == 0.0
