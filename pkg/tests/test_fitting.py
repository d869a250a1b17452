import numpy as np
import pytest

from atmolink import (
    DomainError,
    FitBudgetError,
    TransmittanceEnsemble,
    chi2_statistic,
    fit_channel,
    sample_ensemble,
    statistics_from_fit_params,
)
from atmolink.fitting import FitBounds, Histogram, _merge_bins, merged_bin_count


class TestHistogram:
    def test_from_samples(self):
        hist = Histogram.from_samples(np.array([0.1, 0.1, 0.9]))
        assert hist.counts.sum() == 3
        assert hist.edges.size == 41

    def test_validation(self):
        with pytest.raises(DomainError, match="edges"):
            Histogram(edges=np.array([0.0, 0.5, 0.4]), counts=np.array([1.0, 1.0]))
        with pytest.raises(DomainError, match="empty"):
            Histogram(edges=np.array([0.0, 0.5, 1.0]), counts=np.array([0.0, 0.0]))
        with pytest.raises(DomainError, match="non-negative"):
            Histogram(edges=np.array([0.0, 0.5, 1.0]), counts=np.array([3.0, -1.0]))


class TestMerging:
    def test_all_groups_reach_floor_in_matched_case(self):
        observed = np.array([1.0, 2.0, 9.0, 50.0, 9.0, 2.0, 1.0])
        expected = np.array([0.5, 2.5, 10.0, 52.0, 8.0, 2.0, 1.0])
        obs, exp = _merge_bins(observed, expected)
        assert np.all(exp >= 5.0)
        assert obs.sum() == observed.sum()
        assert exp.sum() == expected.sum()

    def test_observed_rich_tail_not_folded_away(self):
        # all expected mass in one bin, all observed mass elsewhere: the
        # mismatch must survive merging
        observed = np.array([0.0, 0.0, 100.0, 100.0])
        expected = np.array([200.0, 0.0, 0.0, 0.0])
        obs, exp = _merge_bins(observed, expected)
        assert len(obs) == 2
        assert obs[1] == 200.0 and exp[1] == 0.0


class TestChiSquare:
    def test_self_consistency(self, geometry, channel_stats):
        # a histogram drawn from the channel itself scores chi2/dof near 1
        stats = channel_stats["light_haze"]
        measured = Histogram.from_samples(sample_ensemble(stats, geometry, 200_000, seed=555).samples)
        model = sample_ensemble(stats, geometry, 1_000_000, seed=9_999)
        dof = merged_bin_count(model, measured) - 1
        value = chi2_statistic(model, measured)
        assert 0.5 - 1e-9 <= value / dof <= 1.5

    def test_shifted_histogram_scores_worse(self, geometry, channel_stats):
        stats = channel_stats["light_haze"]
        trace = sample_ensemble(stats, geometry, 100_000, seed=555).samples
        model = sample_ensemble(stats, geometry, 200_000, seed=9_999)
        aligned = Histogram.from_samples(trace)
        shifted = Histogram(edges=aligned.edges, counts=np.roll(aligned.counts, 1))
        assert chi2_statistic(model, shifted) > chi2_statistic(model, aligned)

    def test_zero_overlap_large_but_finite(self, geometry):
        model = sample_ensemble(statistics_from_fit_params(geometry, 0.3, 0.0, 0.1), geometry, 50_000, seed=7)
        measured = Histogram(
            edges=np.linspace(0.8, 1.0, 6), counts=np.array([10.0, 20.0, 30.0, 20.0, 10.0])
        )
        value = chi2_statistic(model, measured)
        assert np.isfinite(value)
        assert value > 1e3


class TestFitChannel:
    def test_budget_exhaustion_reports_progress(self, geometry, channel_stats):
        measured = Histogram.from_samples(
            sample_ensemble(channel_stats["light_haze"], geometry, 20_000, seed=1).samples
        )
        with pytest.raises(FitBudgetError, match="of 72 grid points") as excinfo:
            fit_channel(measured, geometry, FitBounds(), budget=10, seed=2, mc_samples=2_000)
        assert excinfo.value.completed == 10
        assert excinfo.value.total == 72

    def test_bounds_validation(self):
        with pytest.raises(DomainError):
            FitBounds(rytov_sq=(0.0, 5.0))
        with pytest.raises(DomainError):
            FitBounds(chi_ext=(0.5, 1.2))

    def test_recovery_machinery(self, geometry):
        # light version of the self-consistent recovery; the acceptance
        # suite runs the full-budget version on all three channels
        truth = (1.78, 5.0, 0.51)
        trace = sample_ensemble(statistics_from_fit_params(geometry, *truth), geometry, 60_000, seed=11)
        measured = Histogram.from_samples(trace.samples)
        bounds = FitBounds(rytov_sq=(0.5, 4.0), xi_divergence=(0.0, 15.0), chi_ext=(0.2, 0.8))
        result = fit_channel(
            measured, geometry, bounds, budget=400, seed=12, mc_samples=40_000, grid_shape=(6, 7)
        )
        assert result.n_eval <= 400
        assert result.rytov_sq == pytest.approx(truth[0], rel=0.2)
        assert result.xi_divergence == pytest.approx(truth[1], rel=0.25)
        assert result.chi_ext == pytest.approx(truth[2], rel=0.1)
        assert result.dof >= 1

    def test_fit_is_deterministic(self, geometry):
        trace = sample_ensemble(statistics_from_fit_params(geometry, 1.2, 3.0, 0.6), geometry, 30_000, seed=21)
        measured = Histogram.from_samples(trace.samples)
        bounds = FitBounds(rytov_sq=(0.5, 4.0), xi_divergence=(0.0, 10.0), chi_ext=(0.3, 0.9))
        kwargs = dict(budget=150, seed=5, mc_samples=10_000, grid_shape=(4, 5))
        first = fit_channel(measured, geometry, bounds, **kwargs)
        second = fit_channel(measured, geometry, bounds, **kwargs)
        assert first == second
