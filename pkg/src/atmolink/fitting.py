"""Pearson chi-square comparison and channel-parameter fitting.

The fit searches (rytov_sq, xi_divergence, chi_ext) so that the
simulated transmittance distribution matches a measured histogram.  The
objective is a Pearson chi-square statistic between observed counts and
expected counts derived from ensemble proportions.  Two choices keep
the Monte Carlo objective tractable for a simplex optimizer:

* common random numbers: every objective evaluation re-samples with the
  same seed, so parameter changes move the objective smoothly instead
  of through fresh sampling noise;
* coarse grid search first, Nelder-Mead refinement after, under one
  shared evaluation budget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .beam import ChannelGeometry
from .channel import statistics_from_fit_params
from .errors import DomainError, FitBudgetError
from .pdt import TransmittanceEnsemble, sample_ensemble

_MIN_EXPECTED = 5.0  # Pearson validity floor per merged bin
_ZERO_EXPECTED_FLOOR = 0.5  # half a count; keeps zero-overlap cases finite


class _BudgetStop(Exception):
    pass

#: outer box the fit bounds must stay inside
FIT_DOMAIN = {"rytov_sq": (0.0, 10.0), "xi_divergence": (0.0, 50.0), "chi_ext": (0.0, 1.0)}


@dataclass(frozen=True)
class Histogram:
    """Counted transmittance histogram on ascending edges within [0, 1]."""

    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or counts.shape != (edges.size - 1,):
            raise DomainError("Histogram: need k+1 edges and k counts")
        if not (np.all(np.diff(edges) > 0) and edges[0] >= 0.0 and edges[-1] <= 1.0):
            raise DomainError("Histogram: edges must ascend within [0, 1]")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise DomainError("Histogram: counts must be non-negative and finite")
        if counts.sum() <= 0:
            raise DomainError("Histogram: all bins are empty")
        edges.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_samples(cls, samples, n_bins: int = 40) -> "Histogram":
        counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=n_bins, range=(0.0, 1.0))
        return cls(edges=edges, counts=counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True)
class FitBounds:
    """Search box for the fitted triplet; must sit inside FIT_DOMAIN."""

    rytov_sq: tuple[float, float] = (0.2, 8.0)
    xi_divergence: tuple[float, float] = (0.0, 40.0)
    chi_ext: tuple[float, float] = (0.05, 1.0)

    def __post_init__(self):
        for name, (outer_lo, outer_hi) in FIT_DOMAIN.items():
            lo, hi = getattr(self, name)
            if not (outer_lo <= lo < hi <= outer_hi):
                raise DomainError(
                    f"FitBounds.{name} must satisfy {outer_lo} <= lo < hi <= {outer_hi}, got ({lo}, {hi})"
                )
        if self.rytov_sq[0] <= 0.0:
            raise DomainError("FitBounds.rytov_sq lower bound must be positive")
        if self.chi_ext[0] <= 0.0:
            raise DomainError("FitBounds.chi_ext lower bound must be positive")

    def contains(self, params) -> bool:
        return all(
            lo <= value <= hi
            for value, (lo, hi) in zip(params, (self.rytov_sq, self.xi_divergence, self.chi_ext))
        )


@dataclass(frozen=True)
class FitResult:
    rytov_sq: float
    xi_divergence: float
    chi_ext: float
    chi2_statistic: float
    dof: int
    n_eval: int


def _merge_bins(observed: np.ndarray, expected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge adjacent bins until the counts per group reach the floor.

    A single greedy left-to-right pass that closes a group as soon as
    its accumulated expected or observed count reaches the Pearson
    floor.  Where the model fits, expected and observed agree and this
    reduces to the usual merge-until-expected-is-five rule; where it
    does not, regions rich in observed counts but starved of expected
    counts stay groups of their own (with the expected value floored by
    the caller) instead of cancelling against a distant expected bulge,
    so a model that misses the data entirely scores large, not zero.
    """
    obs_groups: list[float] = []
    exp_groups: list[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= _MIN_EXPECTED or acc_o >= _MIN_EXPECTED:
            obs_groups.append(acc_o)
            exp_groups.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0.0 or acc_o > 0.0:
        if exp_groups and acc_o < _MIN_EXPECTED and acc_e < _MIN_EXPECTED:
            obs_groups[-1] += acc_o
            exp_groups[-1] += acc_e
        else:
            obs_groups.append(acc_o)
            exp_groups.append(acc_e)
    return np.asarray(obs_groups), np.asarray(exp_groups)


def chi2_statistic(ensemble: TransmittanceEnsemble, measured: Histogram) -> float:
    """Pearson chi-square of measured counts against ensemble proportions.

    Expected counts are the ensemble bin proportions scaled to the
    measured total, merged to at least five expected counts per bin;
    merged bins still empty of ensemble mass get a half-count floor so
    a non-overlapping model scores large but finite.
    """
    model_counts, _ = np.histogram(ensemble.samples, bins=measured.edges)
    expected = measured.total * model_counts / ensemble.n
    observed, expected = _merge_bins(measured.counts, expected)
    expected = np.maximum(expected, _ZERO_EXPECTED_FLOOR)
    return float(np.sum((observed - expected) ** 2 / expected))


def merged_bin_count(ensemble: TransmittanceEnsemble, measured: Histogram) -> int:
    model_counts, _ = np.histogram(ensemble.samples, bins=measured.edges)
    expected = measured.total * model_counts / ensemble.n
    _, expected = _merge_bins(measured.counts, expected)
    return int(expected.size)


def _grid_axis(lo: float, hi: float, count: int, *, log: bool, offset: float = 0.0) -> np.ndarray:
    if log:
        return np.geomspace(lo + offset, hi + offset, count) - offset
    return np.linspace(lo, hi, count)


def _histogram_mean(hist: Histogram) -> float:
    mids = 0.5 * (hist.edges[:-1] + hist.edges[1:])
    return float(np.sum(mids * hist.counts) / hist.total)


def fit_channel(
    measured: Histogram,
    geometry: ChannelGeometry,
    bounds: FitBounds,
    budget: int,
    seed: int,
    *,
    mc_samples: int = 100_000,
    grid_shape: tuple[int, int] = (8, 9),
) -> FitResult:
    """Fit (rytov_sq, xi_divergence, chi_ext) to a measured histogram.

    Coarse grid search seeds a Nelder-Mead refinement; every objective
    evaluation re-samples ``mc_samples`` transmittances with the same
    seed (common random numbers).  The grid covers (rytov_sq, xi); the
    extinction at each grid point is moment matched, exploiting that it
    is a pure scale factor of the sampled distribution, which resolves
    the ridge where extra beam divergence trades against extinction.
    Raises FitBudgetError if the budget runs out before the grid
    completes.
    """
    if budget < 2:
        raise DomainError(f"fit_channel: budget must be at least 2 evaluations, got {budget}")
    n_eval = 0

    def spend() -> None:
        nonlocal n_eval
        if n_eval >= budget:
            raise _BudgetStop
        n_eval += 1

    def objective(params: np.ndarray) -> float:
        rytov_sq, xi, chi = (float(p) for p in params)
        if not bounds.contains((rytov_sq, xi, chi)):
            # keep the simplex inside the box without spending budget
            overshoot = 0.0
            for value, (lo, hi) in zip(
                (rytov_sq, xi, chi), (bounds.rytov_sq, bounds.xi_divergence, bounds.chi_ext)
            ):
                overshoot += max(lo - value, 0.0, value - hi)
            return 1e12 * (1.0 + overshoot)
        spend()
        stats = statistics_from_fit_params(geometry, rytov_sq, xi, chi)
        ensemble = sample_ensemble(stats, geometry, mc_samples, seed)
        return chi2_statistic(ensemble, measured)

    grid_points = list(
        itertools.product(
            _grid_axis(*bounds.rytov_sq, grid_shape[0], log=True),
            _grid_axis(*bounds.xi_divergence, grid_shape[1], log=True, offset=0.5),
        )
    )
    measured_mean = _histogram_mean(measured)

    best_value = np.inf
    best_point: tuple[float, float, float] | None = None
    for done, (rytov_sq, xi) in enumerate(grid_points):
        try:
            spend()
        except _BudgetStop:
            raise FitBudgetError(
                f"budget of {budget} evaluations exhausted after {done} of {len(grid_points)} grid points",
                completed=done,
                total=len(grid_points),
            ) from None
        stats = statistics_from_fit_params(geometry, rytov_sq, xi, 1.0)
        clear = sample_ensemble(stats, geometry, mc_samples, seed)
        chi = float(np.clip(measured_mean / np.mean(clear.samples), *bounds.chi_ext))
        value = chi2_statistic(
            TransmittanceEnsemble(samples=chi * clear.samples, seed=seed), measured
        )
        if value < best_value:
            best_value = value
            best_point = (rytov_sq, xi, chi)

    remaining = budget - n_eval
    x = np.asarray(best_point)
    if remaining > 4:
        steps = np.array(
            [
                max(0.15 * x[0], 0.05),
                max(0.15 * x[1], 0.25),
                max(0.08 * x[2], 0.02),
            ]
        )
        simplex = np.vstack([x, x + np.diag(steps)])
        try:
            result = optimize.minimize(
                objective,
                x,
                method="Nelder-Mead",
                options={
                    "initial_simplex": simplex,
                    "maxfev": remaining,
                    "xatol": 1e-3,
                    "fatol": 0.2,
                },
            )
            if result.fun < best_value:
                best_value = float(result.fun)
                x = np.asarray(result.x)
        except _BudgetStop:
            pass  # keep the best point seen before the budget ran dry

    rytov_sq, xi, chi = (float(v) for v in x)
    stats = statistics_from_fit_params(geometry, rytov_sq, xi, chi)
    ensemble = sample_ensemble(stats, geometry, mc_samples, seed)
    dof = merged_bin_count(ensemble, measured) - 1 - 3
    return FitResult(
        rytov_sq=rytov_sq,
        xi_divergence=xi,
        chi_ext=chi,
        chi2_statistic=best_value,
        dof=dof,
        n_eval=n_eval,
    )
