import numpy as np
import pytest

from atmolink import (
    ChannelStatistics,
    DegenerateChannelError,
    DomainError,
    ExtinctionSpec,
    ScatteringParams,
    StatisticsError,
    TurbulenceParams,
    assemble_statistics,
    beam_wandering_variance,
    divergence_from_microphysics,
    divergence_from_transport,
    extinction_factor,
    rytov_variance,
    spot_moments,
    theta_statistics,
)

OMEGA = 1.0069207223044208
W0 = 0.02


class TestRytovVariance:
    def test_zero_turbulence(self):
        assert rytov_variance(0.0, 8e6, 1600.0) == 0.0

    def test_reference_value(self, geometry):
        # 1.23 Cn^2 k^{7/6} L^{11/6} at Cn^2 = 1e-14, 780 nm, 1600 m
        assert rytov_variance(1e-14, geometry.wave_number, 1600.0) == pytest.approx(
            1.0500852452603406, rel=1e-12
        )

    def test_length_power_law(self, geometry):
        k = geometry.wave_number
        ratio = rytov_variance(1e-14, k, 3200.0) / rytov_variance(1e-14, k, 1600.0)
        assert ratio == pytest.approx(2.0 ** (11.0 / 6.0), rel=1e-12)


class TestDivergenceParameters:
    def test_microphysics_zero_density(self):
        assert divergence_from_microphysics(0.01, 0.0, 1600.0, W0) == 0.0

    def test_microphysics_correlation_length_cancels(self):
        values = [divergence_from_microphysics(z, 1e4, 1600.0, W0) for z in (1e-4, 1e-2, 1.0)]
        assert values[0] == pytest.approx(values[1], rel=1e-12)
        assert values[0] == pytest.approx(values[2], rel=1e-12)

    def test_microphysics_reference_value(self):
        # (pi/24) n0 L W0^2 by independent arithmetic
        assert divergence_from_microphysics(5e-3, 1e4, 1600.0, W0) == pytest.approx(
            837.7580409572781, rel=1e-12
        )

    @pytest.mark.parametrize("albedo, tau", [(0.0, 3.0), (0.9, 0.0)])
    def test_transport_vanishes_without_scattering(self, albedo, tau):
        assert divergence_from_transport(albedo, tau, 1e-4, OMEGA, W0, 1600.0) == 0.0

    def test_transport_round_trip(self):
        # substituting the returned value into the clear-air spot formula
        # must reproduce the transport broadening result
        albedo, tau, psi_sq, length = 0.8, 1.2, 2.5e-9, 1600.0
        xi = divergence_from_transport(albedo, tau, psi_sq, OMEGA, W0, length)
        mean_w_sq, _ = spot_moments(W0, OMEGA, 0.0, xi)
        expected = W0**2 / OMEGA**2 + (2.0 / 3.0) * albedo * tau * length**2 * psi_sq
        assert mean_w_sq == pytest.approx(expected, rel=1e-12)


class TestExtinction:
    def test_molecular_only(self):
        assert extinction_factor(ExtinctionSpec(molecular=0.94), 1600.0) == 0.94

    def test_rain_reference_value(self):
        spec = ExtinctionSpec(molecular=0.94, rain_rate=3.2)
        assert extinction_factor(spec, 1600.0) == pytest.approx(0.4246548680058701, rel=1e-12)

    def test_zero_rain_rate_is_molecular(self):
        spec = ExtinctionSpec(molecular=0.7, rain_rate=0.0)
        assert extinction_factor(spec, 1600.0) == 0.7

    def test_printed_per_meter_coefficient_underflows(self):
        # the raw literature coefficient applied per meter kills the channel
        spec = ExtinctionSpec(molecular=0.94, rain_rate=3.2, rain_coefficient=210.0)
        with pytest.raises(DegenerateChannelError):
            extinction_factor(spec, 1600.0)

    def test_strictly_decreasing_in_rain_and_length(self):
        rates = [extinction_factor(ExtinctionSpec(molecular=0.9, rain_rate=r), 1600.0) for r in (1.0, 2.0, 4.0, 8.0)]
        assert np.all(np.diff(rates) < 0)
        lengths = [extinction_factor(ExtinctionSpec(molecular=0.9, rain_rate=3.2), L) for L in (400.0, 1600.0, 6400.0)]
        assert np.all(np.diff(lengths) < 0)

    def test_validation(self):
        with pytest.raises(DomainError):
            ExtinctionSpec(molecular=0.0)
        with pytest.raises(DomainError):
            ExtinctionSpec(molecular=1.2)


class TestBeamWandering:
    def test_zero_turbulence(self):
        assert beam_wandering_variance(W0, 0.0, OMEGA) == 0.0

    def test_reference_value(self):
        assert beam_wandering_variance(W0, 1.78, OMEGA) == pytest.approx(2.3307701191400943e-4, rel=1e-12)


class TestSpotMoments:
    def test_vacuum_limit(self):
        mean, cov = spot_moments(W0, OMEGA, 0.0, 0.0)
        assert mean == pytest.approx(W0**2 / OMEGA**2, rel=1e-12)
        assert np.all(cov == 0.0)

    def test_reference_values(self):
        mean, cov = spot_moments(W0, OMEGA, 1.78, 5.0)
        assert mean == pytest.approx(4.453751002136936e-3, rel=1e-12)
        assert cov[0, 0] == pytest.approx(2.0062610061695124e-6, rel=1e-12)

    def test_off_diagonal_ratio(self):
        _, cov = spot_moments(W0, OMEGA, 0.9, 3.0)
        assert cov[0, 1] / cov[0, 0] == pytest.approx(-2.0 / 3.0, rel=1e-14)

    def test_mean_monotone_in_turbulence_and_divergence(self):
        means_r = [spot_moments(W0, OMEGA, r, 2.0)[0] for r in np.linspace(0.0, 5.0, 11)]
        assert np.all(np.diff(means_r) > 0)
        means_x = [spot_moments(W0, OMEGA, 1.5, x)[0] for x in np.linspace(0.0, 20.0, 11)]
        assert np.all(np.diff(means_x) > 0)


class TestThetaStatistics:
    def test_deterministic_limit(self):
        mu, sigma = theta_statistics(4.453751002136936e-3, np.zeros((2, 2)), W0)
        assert mu[0] == pytest.approx(np.log(4.453751002136936e-3 / W0**2), rel=1e-12)
        assert np.all(sigma == 0.0)

    def test_reference_values(self):
        mean, cov = spot_moments(W0, OMEGA, 1.78, 5.0)
        mu, sigma = theta_statistics(mean, cov, W0)
        assert mu[0] == pytest.approx(2.3618630572279757, rel=1e-10)
        assert sigma[0, 0] == pytest.approx(0.0963486751875183, rel=1e-10)

    def test_round_trip_identities(self):
        # the log-normal moments must reproduce the spot moments exactly
        for rytov in (0.1, 1.78, 5.0):
            for xi in (0.0, 5.0, 20.0):
                mean, cov = spot_moments(W0, OMEGA, rytov, xi)
                mu, sigma = theta_statistics(mean, cov, W0)
                mean_back = W0**2 * np.exp(mu + 0.5 * np.diag(sigma))
                assert mean_back == pytest.approx([mean, mean], rel=1e-10)
                cov_back = np.outer(mean_back, mean_back) * np.expm1(sigma)
                assert cov_back == pytest.approx(cov, rel=1e-10)

    def test_unphysical_covariance_rejected(self):
        # off-diagonal more negative than the log-normal model can carry
        cov = np.array([[0.5, -1.2], [-1.2, 0.5]])
        with pytest.raises(StatisticsError, match="log-normal"):
            theta_statistics(1.0, cov, W0)


class TestAssembleStatistics:
    def test_fig_like_composition(self, geometry, channel_stats):
        stats = channel_stats["light_haze"]
        assert stats.mu[0] == 0.0 and stats.mu[1] == 0.0
        assert stats.mu[2] == pytest.approx(2.3618630572279757, rel=1e-10)
        assert stats.sigma[0, 0] == pytest.approx(2.3307701191400943e-4, rel=1e-12)
        assert stats.sigma[0, 0] == stats.sigma[1, 1]
        assert stats.mu[2] == stats.mu[3]
        assert stats.sigma[2, 3] == stats.sigma[3, 2]
        assert stats.sigma[0, 2] == 0.0 and stats.sigma[1, 3] == 0.0
        assert stats.chi_ext == 0.51

    def test_all_randomness_off(self, geometry):
        stats = assemble_statistics(
            geometry,
            TurbulenceParams(rytov_sq=0.0),
            ScatteringParams(mode="none"),
            ExtinctionSpec(molecular=1.0),
        )
        assert np.all(stats.sigma == 0.0)

    def test_psd_over_parameter_grid(self, geometry):
        for rytov in np.linspace(0.0, 5.0, 6):
            for xi in np.linspace(0.0, 20.0, 6):
                stats = assemble_statistics(
                    geometry,
                    TurbulenceParams(rytov_sq=rytov),
                    ScatteringParams(mode="phenomenological", xi_divergence=xi),
                    ExtinctionSpec(molecular=0.9),
                )
                assert np.linalg.eigvalsh(stats.sigma).min() >= -1e-12

    def test_indefinite_theta_block_rejected(self):
        # a legal-looking log-normal pair whose off-diagonal overwhelms
        # the diagonal: the assembled covariance must be refused
        s = 0.8  # beyond the 5/12 PSD threshold of the 1.2/-0.8 structure
        sigma = np.zeros((4, 4))
        sigma[2:, 2:] = [[np.log1p(1.2 * s), np.log1p(-0.8 * s)], [np.log1p(-0.8 * s), np.log1p(1.2 * s)]]
        with pytest.raises(StatisticsError, match="positive semidefinite"):
            ChannelStatistics(mu=np.zeros(4), sigma=sigma, chi_ext=0.9)

    def test_both_turbulence_sources_warn_and_prefer_rytov(self, geometry):
        with pytest.warns(UserWarning, match="rytov_sq takes precedence"):
            params = TurbulenceParams(cn2=1e-13, rytov_sq=1.78)
        assert params.resolve_rytov_sq(geometry) == 1.78

    def test_cn2_pathway(self, geometry):
        params = TurbulenceParams(cn2=1e-14)
        assert params.resolve_rytov_sq(geometry) == pytest.approx(1.0500852452603406, rel=1e-12)

    def test_missing_turbulence_source_rejected(self):
        with pytest.raises(DomainError):
            TurbulenceParams()

    def test_scattering_mode_validation(self):
        with pytest.raises(DomainError, match="requires"):
            ScatteringParams(mode="microphysical", zeta0=1e-3)
        with pytest.raises(DomainError, match="mode"):
            ScatteringParams(mode="fog")
        with pytest.raises(DomainError, match="albedo"):
            ScatteringParams(mode="transport", albedo=1.5, optical_depth=1.0, mean_sq_angle=1e-6)
