import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the shared oracles module

from atmolink import ChannelGeometry, sample_ensemble, statistics_from_fit_params

#: 1.6 km focused urban link used throughout the tests
LINK = dict(
    wavelength=780e-9,
    beam_waist_w0=0.02,
    link_length=1600.0,
    focal_length=1600.0,
    aperture_radius=0.075,
)

#: fitted (rytov_sq, xi_divergence, chi_ext) triplets of the three channels
CHANNELS = {
    "light_haze": (1.78, 5.0, 0.51),
    "dense_haze": (1.05, 12.0, 0.40),
    "rain": (2.88, 0.2, 0.43),
}

#: receiver optics times detector efficiency
DETERMINISTIC_FACTOR = 0.88 * 0.9

CONFIG_DIR = Path(__file__).parent.parent / "configs"


@pytest.fixture(scope="session")
def geometry() -> ChannelGeometry:
    return ChannelGeometry(**LINK)


@pytest.fixture(scope="session")
def channel_stats(geometry):
    return {name: statistics_from_fit_params(geometry, *params) for name, params in CHANNELS.items()}


@pytest.fixture(scope="session")
def channel_ensembles(geometry, channel_stats):
    """Medium-size ensembles shared by the module tests."""
    return {
        name: sample_ensemble(stats, geometry, 200_000, seed=20_240_824)
        for name, stats in channel_stats.items()
    }


@pytest.fixture(scope="session")
def light_haze_ensemble(channel_ensembles):
    return channel_ensembles["light_haze"]
