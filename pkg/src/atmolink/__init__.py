"""Fluctuating-loss free-space optical quantum channel toolkit.

Simulates the probability distribution of transmittance of a Gaussian
beam through turbulence, haze, and rain in the elliptic-beam
approximation, fits channel parameters to measured transmittance
traces, and evaluates quadrature squeezing and Gaussian entanglement
transfer through the resulting channel.
"""

from .beam import (
    BeamSample,
    ChannelGeometry,
    aperture_transmittance,
    effective_spot_radius_sq,
    eta_centered,
    scale_radius,
    shape_exponent,
    transmittance,
)
from .channel import (
    ChannelStatistics,
    ExtinctionSpec,
    ScatteringParams,
    TurbulenceParams,
    assemble_statistics,
    beam_wandering_variance,
    divergence_from_microphysics,
    divergence_from_transport,
    extinction_factor,
    rytov_variance,
    spot_moments,
    statistics_from_fit_params,
    theta_statistics,
)
from .config import RunConfig, load_config
from .errors import (
    AtmolinkError,
    ConfigError,
    DegenerateChannelError,
    DomainError,
    EmptySelectionError,
    FitBudgetError,
    IngestError,
    StatisticsError,
)
from .fitting import FitBounds, FitResult, Histogram, chi2_statistic, fit_channel
from .numerics import (
    RandomSource,
    bessel_i0,
    bessel_i0e,
    bessel_i1,
    bessel_i1e,
    lambert_w0,
    lambert_w_of_exp,
    mvn_sqrt_factor,
    sample_mvn,
)
from .pdt import (
    DensityEstimate,
    MomentEstimate,
    PostselectedMoments,
    TransmittanceEnsemble,
    estimate_density,
    estimate_moment,
    postselected_moments,
    sample_ensemble,
)
from .quantum import (
    ChannelMoments,
    EntanglementRegion,
    GaussianTwoModeState,
    MomentMatrix,
    SingleModeGaussianState,
    SqueezingCurve,
    channel_moments,
    entanglement_region,
    partial_transpose,
    simon_test,
    squeezing_vs_threshold,
    tmsv_moment_matrix,
    transmit_single_mode,
)

__version__ = "0.1.0"
