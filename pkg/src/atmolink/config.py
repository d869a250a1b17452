"""Run configuration: one YAML file with six blocks.

geometry, turbulence, scattering, and extinction describe the channel;
sampling controls the Monte Carlo engine; quantum holds the state
transfer settings.  An optional fit block configures the fitting
workflow.  Unknown keys are rejected with their location so typos fail
loudly at load time, and every numeric field is validated through the
domain types' own invariants.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .beam import ChannelGeometry
from .channel import DEFAULT_RAIN_COEFFICIENT, ExtinctionSpec, ScatteringParams, TurbulenceParams
from .errors import AtmolinkError, ConfigError
from .fitting import FitBounds


@dataclass(frozen=True)
class SamplingConfig:
    n: int = 1_000_000
    seed: int = 0
    grid_size: int = 512
    bandwidth: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"sampling.n must be >= 1, got {self.n}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"sampling.seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.grid_size < 16:
            raise ConfigError(f"sampling.grid_size must be >= 16, got {self.grid_size}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError(f"sampling.bandwidth must be positive when set, got {self.bandwidth}")
        if self.workers < 1:
            raise ConfigError(f"sampling.workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class QuantumConfig:
    input_db: float = -2.4
    eta_opt: float = 0.88
    eta_det: float = 0.9
    eta_min: float = 0.0
    thresholds: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 0.48, 25))
    xi_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 2.0, 41))
    displacement_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 120.0, 241))

    def __post_init__(self):
        if not self.input_db < 0:
            raise ConfigError(f"quantum.input_db must be negative (a squeezed input), got {self.input_db}")
        for name in ("eta_opt", "eta_det"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"quantum.{name} must lie in (0, 1], got {value}")
        if not 0.0 <= self.eta_min < 1.0:
            raise ConfigError(f"quantum.eta_min must lie in [0, 1), got {self.eta_min}")
        for name in ("thresholds", "xi_grid", "displacement_grid"):
            grid = np.asarray(getattr(self, name), dtype=float)
            if grid.ndim != 1 or grid.size < 1 or not np.all(np.isfinite(grid)):
                raise ConfigError(f"quantum.{name} must be a non-empty finite 1-D grid")
            if np.any(np.diff(grid) <= 0):
                raise ConfigError(f"quantum.{name} must strictly increase")
            if grid[0] < 0:
                raise ConfigError(f"quantum.{name} must be non-negative")
            grid.flags.writeable = False
            object.__setattr__(self, name, grid)

    @property
    def deterministic_factor(self) -> float:
        return self.eta_opt * self.eta_det


@dataclass(frozen=True)
class FitConfig:
    bounds: FitBounds = field(default_factory=FitBounds)
    budget: int = 500
    mc_samples: int = 100_000
    n_bins: int = 40

    def __post_init__(self):
        if self.budget < 2:
            raise ConfigError(f"fit.budget must be >= 2, got {self.budget}")
        if self.mc_samples < 1000:
            raise ConfigError(f"fit.mc_samples must be >= 1000, got {self.mc_samples}")
        if not 4 <= self.n_bins <= 1000:
            raise ConfigError(f"fit.n_bins must lie in [4, 1000], got {self.n_bins}")


@dataclass(frozen=True)
class RunConfig:
    geometry: ChannelGeometry
    turbulence: TurbulenceParams
    scattering: ScatteringParams
    extinction: ExtinctionSpec
    sampling: SamplingConfig
    quantum: QuantumConfig
    fit: FitConfig

    def resolved_dict(self) -> dict:
        """Plain mapping of every effective setting, for provenance hashing."""

        def clean(obj) -> dict:
            out = {}
            for key, value in vars(obj).items():
                if isinstance(value, np.ndarray):
                    out[key] = [float(v) for v in value]
                elif isinstance(value, FitBounds):
                    out[key] = {
                        "rytov_sq": list(value.rytov_sq),
                        "xi_divergence": list(value.xi_divergence),
                        "chi_ext": list(value.chi_ext),
                    }
                else:
                    out[key] = value
            return out

        return {
            "geometry": clean(self.geometry),
            "turbulence": clean(self.turbulence),
            "scattering": clean(self.scattering),
            "extinction": clean(self.extinction),
            "sampling": clean(self.sampling),
            "quantum": clean(self.quantum),
            "fit": clean(self.fit),
        }

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, sampling=replace(self.sampling, seed=seed))


_BLOCK_KEYS = {
    "geometry": {"wavelength", "beam_waist_w0", "link_length", "focal_length", "aperture_radius"},
    "turbulence": {"cn2", "rytov_sq"},
    "scattering": {"mode", "zeta0", "n0", "xi_divergence", "albedo", "optical_depth", "mean_sq_angle"},
    "extinction": {"molecular", "rain_rate", "rain_coefficient"},
    "sampling": {"n", "seed", "grid_size", "bandwidth", "workers"},
    "quantum": {"input_db", "eta_opt", "eta_det", "eta_min", "thresholds", "xi_grid", "displacement_grid"},
    "fit": {"bounds", "budget", "mc_samples", "n_bins"},
}
_REQUIRED_BLOCKS = ("geometry", "turbulence")


def _check_keys(mapping: dict, allowed: set[str], location: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{location}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _grid_from(value, location: str) -> np.ndarray:
    if isinstance(value, dict):
        _check_keys(value, {"start", "stop", "count"}, location)
        try:
            return np.linspace(float(value["start"]), float(value["stop"]), int(value["count"]))
        except KeyError as exc:
            raise ConfigError(f"{location}: grid mapping needs start, stop, count (missing {exc})") from None
    if isinstance(value, (list, tuple)):
        return np.asarray(value, dtype=float)
    raise ConfigError(f"{location}: expected a list of numbers or a start/stop/count mapping")


def load_config(path) -> RunConfig:
    """Load and validate a run configuration from a YAML file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping of configuration blocks")
    return config_from_mapping(raw, source=str(path))


def config_from_mapping(raw: dict, source: str = "<config>") -> RunConfig:
    _check_keys(raw, set(_BLOCK_KEYS), source)
    for block in _REQUIRED_BLOCKS:
        if block not in raw:
            raise ConfigError(f"{source}: missing required block '{block}'")
    for block, value in raw.items():
        if not isinstance(value, dict):
            raise ConfigError(f"{source}: block '{block}' must be a mapping")
        _check_keys(value, _BLOCK_KEYS[block], f"{source}: {block}")

    def build(block: str, builder, **kwargs):
        try:
            return builder(**kwargs)
        except (AtmolinkError, TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: {block}: {exc}") from None

    geometry = build("geometry", ChannelGeometry, **{k: float(v) for k, v in raw["geometry"].items()})

    turb_raw = {k: (None if v is None else float(v)) for k, v in raw["turbulence"].items()}
    turbulence = build("turbulence", TurbulenceParams, **turb_raw)

    scat_raw = dict(raw.get("scattering", {"mode": "none"}))
    mode = scat_raw.pop("mode", "none")
    scattering = build(
        "scattering",
        ScatteringParams,
        mode=str(mode),
        **{k: (None if v is None else float(v)) for k, v in scat_raw.items()},
    )

    ext_raw = {k: (None if v is None else float(v)) for k, v in raw.get("extinction", {}).items()}
    extinction = build("extinction", ExtinctionSpec, **ext_raw)

    samp_raw = dict(raw.get("sampling", {}))
    for key in ("n", "seed", "grid_size", "workers"):
        if key in samp_raw:
            samp_raw[key] = int(samp_raw[key])
    if samp_raw.get("bandwidth") is not None and "bandwidth" in samp_raw:
        samp_raw["bandwidth"] = float(samp_raw["bandwidth"])
    sampling = build("sampling", SamplingConfig, **samp_raw)

    quant_raw = dict(raw.get("quantum", {}))
    for key in ("thresholds", "xi_grid", "displacement_grid"):
        if key in quant_raw:
            quant_raw[key] = _grid_from(quant_raw[key], f"{source}: quantum.{key}")
    for key in ("input_db", "eta_opt", "eta_det", "eta_min"):
        if key in quant_raw:
            quant_raw[key] = float(quant_raw[key])
    quantum = build("quantum", QuantumConfig, **quant_raw)

    fit_raw = dict(raw.get("fit", {}))
    if "bounds" in fit_raw:
        bounds_raw = fit_raw["bounds"]
        if not isinstance(bounds_raw, dict):
            raise ConfigError(f"{source}: fit.bounds must be a mapping of parameter to [lo, hi]")
        _check_keys(bounds_raw, {"rytov_sq", "xi_divergence", "chi_ext"}, f"{source}: fit.bounds")
        kwargs = {}
        for key, pair in bounds_raw.items():
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise ConfigError(f"{source}: fit.bounds.{key} must be a [lo, hi] pair")
            kwargs[key] = (float(pair[0]), float(pair[1]))
        fit_raw["bounds"] = build("fit.bounds", FitBounds, **kwargs)
    for key in ("budget", "mc_samples", "n_bins"):
        if key in fit_raw:
            fit_raw[key] = int(fit_raw[key])
    fit = build("fit", FitConfig, **fit_raw)

    return RunConfig(
        geometry=geometry,
        turbulence=turbulence,
        scattering=scattering,
        extinction=extinction,
        sampling=sampling,
        quantum=quantum,
        fit=fit,
    )
