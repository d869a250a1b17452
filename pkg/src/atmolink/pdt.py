"""Monte Carlo estimation of the probability distribution of transmittance.

Sampling draws the beam-parameter vector from its Gaussian statistics
and the ellipse orientation uniformly on [0, pi/2], pushes each
realization through the aperture transmittance, and multiplies by the
extinction factor.  Chunks use independent counter-based sub-streams
keyed by chunk index and are reduced in index order, so an ensemble is
a pure function of (statistics, geometry, n, seed) no matter how many
worker threads execute the chunks.

Density estimation uses a Gaussian kernel with reflection at both ends
of [0, 1]; plain kernel smoothing would leak mass past the boundaries
and break normalization.  Large ensembles are first accumulated on a
fine grid (binned KDE); the binning error is negligible as long as the
bandwidth spans several fine bins, which is enforced by falling back to
the exact sum otherwise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .beam import ChannelGeometry, aperture_transmittance
from .channel import ChannelStatistics
from .errors import DomainError, EmptySelectionError, StatisticsError
from .numerics import RandomSource, mvn_sqrt_factor

CHUNK_SIZE = 1 << 16  # fixed: chunk layout is part of the determinism contract

_BINNED_KDE_MIN_N = 20_000
_FINE_BINS = 16_384


@dataclass(frozen=True)
class TransmittanceEnsemble:
    """Seeded collection of sampled transmittances in [0, 1]."""

    samples: np.ndarray
    seed: int
    chi_ext_applied: bool = True

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise StatisticsError("TransmittanceEnsemble: samples must be a non-empty 1-D array")
        if not np.all((samples >= 0.0) & (samples <= 1.0)):
            raise StatisticsError("TransmittanceEnsemble: samples must lie in [0, 1]")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True)
class DensityEstimate:
    """Kernel density estimate of the transmittance distribution."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    degenerate: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if grid.shape != dens.shape or grid.ndim != 1:
            raise StatisticsError("DensityEstimate: grid and density must be 1-D arrays of equal length")
        if np.any(dens < 0):
            raise StatisticsError("DensityEstimate: density must be non-negative")
        integral = float(np.trapezoid(dens, grid))
        if not 0.98 <= integral <= 1.02:
            raise StatisticsError(f"DensityEstimate: density integrates to {integral:.4f}, outside [0.98, 1.02]")
        grid.flags.writeable = False
        dens.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)

    @property
    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    standard_error: float


@dataclass(frozen=True)
class PostselectedMoments:
    """Moments of the sub-ensemble above a postselection threshold."""

    eta_min: float
    mean_eta: float
    mean_sqrt_eta: float
    fraction_kept: float
    mean_eta_stderr: float
    mean_sqrt_eta_stderr: float


def _chunk_bounds(n: int) -> list[tuple[int, int]]:
    return [(start, min(start + CHUNK_SIZE, n)) for start in range(0, n, CHUNK_SIZE)]


def sample_ensemble(
    stats: ChannelStatistics,
    geometry: ChannelGeometry,
    n: int,
    seed: int,
    *,
    workers: int = 1,
) -> TransmittanceEnsemble:
    """Draw n transmittance samples chi_ext * eta(v, phi).

    Within each chunk the parameter vector draws come first and the
    orientation draws second, from the chunk's own sub-stream; the
    result is bitwise independent of ``workers``.
    """
    if n < 1:
        raise DomainError(f"sample_ensemble: n must be >= 1, got {n}")
    factor = mvn_sqrt_factor(stats.sigma)
    mu = stats.mu
    out = np.empty(n)
    bounds = _chunk_bounds(n)

    def run_chunk(index: int) -> None:
        start, stop = bounds[index]
        m = stop - start
        rng = RandomSource(seed, index).generator()
        v = mu + rng.standard_normal((m, 4)) @ factor
        phi = rng.uniform(0.0, 0.5 * np.pi, m)
        out[start:stop] = stats.chi_ext * aperture_transmittance(
            v[:, 0],
            v[:, 1],
            v[:, 2],
            v[:, 3],
            phi,
            beam_waist_w0=geometry.beam_waist_w0,
            aperture_radius=geometry.aperture_radius,
        )

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, range(len(bounds))))
    else:
        for index in range(len(bounds)):
            run_chunk(index)
    return TransmittanceEnsemble(samples=out, seed=seed)


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Silverman's rule of thumb, robust to heavy tails via the IQR."""
    n = samples.size
    std = float(np.std(samples))
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = float(q75 - q25)
    candidates = [s for s in (std, iqr / 1.34) if s > 0.0]
    if not candidates:
        return 0.0
    return 0.9 * min(candidates) * n ** (-0.2)


def _reflected_kernel_density(grid, centers, weights, h):
    """Sum of boundary-reflected Gaussian kernels, explicit reduction order."""
    norm = 1.0 / (h * np.sqrt(2.0 * np.pi))
    density = np.zeros_like(grid)
    for image in (centers, -centers, 2.0 - centers):
        z = (grid[:, None] - image[None, :]) / h
        density += np.sum(weights[None, :] * np.exp(-0.5 * z * z), axis=1)
    return density * norm


def estimate_density(
    ensemble: TransmittanceEnsemble,
    grid_size: int = 512,
    bandwidth: float | None = None,
) -> DensityEstimate:
    """Gaussian-kernel density on [0, 1] with reflection at both ends.

    The default bandwidth follows Silverman's rule.  A zero-variance
    sample set cannot support a data-driven bandwidth; it yields a
    narrow spike two grid steps wide, flagged as degenerate.
    """
    if ensemble.n < 100:
        raise StatisticsError(f"estimate_density: need at least 100 samples, got {ensemble.n}")
    if grid_size < 16:
        raise DomainError(f"estimate_density: grid_size must be >= 16, got {grid_size}")
    samples = ensemble.samples
    grid = np.linspace(0.0, 1.0, int(grid_size))
    spacing = grid[1] - grid[0]

    degenerate = False
    if bandwidth is not None:
        if bandwidth <= 0.0:
            raise DomainError("estimate_density: bandwidth must be positive")
        h = float(bandwidth)
    else:
        h = silverman_bandwidth(samples)
        if h <= 1e-12:  # zero sample variance up to rounding noise
            degenerate = True
            h = 2.0 * spacing
        else:
            h = max(h, spacing)  # keep the kernel resolvable on the grid

    if ensemble.n >= _BINNED_KDE_MIN_N and h >= 8.0 / _FINE_BINS:
        counts, edges = np.histogram(samples, bins=_FINE_BINS, range=(0.0, 1.0))
        mask = counts > 0
        centers = 0.5 * (edges[:-1] + edges[1:])[mask]
        weights = counts[mask] / ensemble.n
        density = _reflected_kernel_density(grid, centers, weights, h)
    else:
        density = np.zeros_like(grid)
        for start in range(0, ensemble.n, 100_000):
            block = samples[start : start + 100_000]
            density += _reflected_kernel_density(grid, block, np.full(block.size, 1.0 / ensemble.n), h)
    return DensityEstimate(grid=grid, density=density, bandwidth=h, degenerate=degenerate)


def estimate_moment(ensemble: TransmittanceEnsemble, f) -> MomentEstimate:
    """Monte Carlo mean of f(eta) with its standard error."""
    values = np.asarray(f(ensemble.samples), dtype=float)
    if values.shape != ensemble.samples.shape:
        values = np.broadcast_to(values, ensemble.samples.shape)
    if not np.all(np.isfinite(values)):
        raise DomainError("estimate_moment: f produced non-finite values on [0, 1]")
    mean = float(np.mean(values))
    stderr = float(np.std(values) / np.sqrt(values.size))
    return MomentEstimate(value=mean, standard_error=stderr)


def postselected_moments(ensemble: TransmittanceEnsemble, eta_min: float) -> PostselectedMoments:
    """Mean transmittance and mean root transmittance above a threshold."""
    if not 0.0 <= eta_min < 1.0:
        raise DomainError(f"postselected_moments: eta_min must lie in [0, 1), got {eta_min}")
    kept = ensemble.samples[ensemble.samples >= eta_min]
    if kept.size == 0:
        raise EmptySelectionError(f"postselection at eta_min={eta_min} left no events")
    roots = np.sqrt(kept)
    return PostselectedMoments(
        eta_min=float(eta_min),
        mean_eta=float(np.mean(kept)),
        mean_sqrt_eta=float(np.mean(roots)),
        fraction_kept=kept.size / ensemble.n,
        mean_eta_stderr=float(np.std(kept) / np.sqrt(kept.size)),
        mean_sqrt_eta_stderr=float(np.std(roots) / np.sqrt(kept.size)),
    )
