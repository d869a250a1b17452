"""Elliptic-beam aperture transmittance.

A single atmospheric realization deforms the transmitted Gaussian beam
into a displaced ellipse.  Given that realization, the fraction of
power passing a circular receiver aperture of radius ``a`` is
approximated in closed form:

    eta = eta0 * exp(-[(rho0/a) / R(2/W_eff)]^lambda(2/W_eff))

where ``eta0`` is the transmittance of the centered ellipse, ``rho0``
the centroid displacement, ``W_eff`` an angle-dependent effective spot
radius obtained through the Lambert W function, and ``lambda``/``R``
shape and scale functions built from scaled Bessel functions.  The
functions in this module are pure and accept numpy arrays; atmospheric
extinction is applied downstream by the sampling engine.

Numerical handling that is easy to get wrong:

* lambda(xi) and R(xi) are 0/0 at xi = 0; small arguments go through
  series-stable branches (lambda -> 2, R ~ sqrt(2)/(a|xi|), divergent).
* The Lambert W argument for W_eff contains exp(2a^2(1/W1^2 + 1/W2^2)),
  which overflows for small beams; it is evaluated in log domain.
* In eta0 the printed factor exp(-(a^2/2)(1/W1 - 1/W2)) is used in its
  dimensionless square form (a^2/2)(1/W1 - 1/W2)^2: the first-power
  variant depends on the unit of length and breaks the swap symmetry
  W1 <-> W2; the squared form is the one that agrees with brute-force
  disk integration of the elliptic Gaussian (see tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import _i0e_core, _i1e_core, lambert_w_of_exp

_SHAPE_SERIES_T = 1e-2   # below this, 1 - e^{-t} I0(t) and friends use series
_SHAPE_LIMIT_T = 1e-4    # below this, lambda = 2 exactly to double precision
_DEGENERATE_REL = 1e-9   # |W1 - W2| / max(W1, W2) below which eta0 is circular
_EXP_CLIP = 700.0


@dataclass(frozen=True)
class ChannelGeometry:
    """Transmitter beam, link length, and receiver aperture.

    Lengths are in meters.  The beam is focused at ``focal_length``;
    the statistics model assumes a focused link (focal_length equal to
    link_length), which is how the bundled configurations are set up.
    """

    wavelength: float
    beam_waist_w0: float
    link_length: float
    focal_length: float
    aperture_radius: float

    def __post_init__(self):
        for name in ("wavelength", "beam_waist_w0", "link_length", "focal_length", "aperture_radius"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"ChannelGeometry.{name} must be a positive finite number, got {value!r}")

    @property
    def wave_number(self) -> float:
        """Optical wave number k = 2 pi / wavelength."""
        return 2.0 * math.pi / self.wavelength

    @property
    def fresnel_number(self) -> float:
        """Fresnel number of the transmitter, k W0^2 / (2 L)."""
        return self.wave_number * self.beam_waist_w0**2 / (2.0 * self.link_length)


@dataclass(frozen=True)
class BeamSample:
    """One beam realization at the aperture plane.

    ``x0``/``y0`` are the centroid coordinates in meters, ``theta1``
    and ``theta2`` the log spot-size parameters (semi-axes follow as
    W_i^2 = W0^2 exp(theta_i)), and ``phi`` the ellipse orientation in
    [0, pi/2].
    """

    x0: float
    y0: float
    theta1: float
    theta2: float
    phi: float

    def __post_init__(self):
        for name in ("x0", "y0", "theta1", "theta2", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"BeamSample.{name} must be finite")
        if not 0.0 <= self.phi <= 0.5 * math.pi:
            raise DomainError(f"BeamSample.phi must lie in [0, pi/2], got {self.phi}")

    @property
    def centroid_distance(self) -> float:
        return math.hypot(self.x0, self.y0)

    @property
    def centroid_azimuth(self) -> float:
        """atan2 azimuth of the centroid; defined as 0 at the origin."""
        if self.x0 == 0.0 and self.y0 == 0.0:
            return 0.0
        return math.atan2(self.y0, self.x0)


def _one_minus_e_i0(t: np.ndarray) -> np.ndarray:
    """1 - e^{-t} I0(t), series-stable near zero."""
    out = np.empty_like(t)
    small = t < _SHAPE_SERIES_T
    if np.any(small):
        ts = t[small]
        # 1 - e^{-t} I0(t) = t (1 - 3t/4 + 5t^2/12 - 35t^3/192 + 21t^4/320 - 77t^5/3840 + ...)
        out[small] = ts * (
            1.0
            + ts
            * (-0.75 + ts * (5.0 / 12.0 + ts * (-35.0 / 192.0 + ts * (21.0 / 320.0 - ts * (77.0 / 3840.0)))))
        )
    if not np.all(small):
        tl = t[~small]
        out[~small] = 1.0 - _i0e_core(tl)
    return out


def _gap(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    """g(t) - f(t) with g = 2(1 - e^{-t/2}), stable against cancellation."""
    out = np.empty_like(t)
    small = t < _SHAPE_SERIES_T
    if np.any(small):
        ts = t[small]
        # g - f = t^2 (1/2 - 3t/8 + 17t^2/96 - 25t^3/384 + 461t^4/23040 - ...)
        out[small] = ts * ts * (
            0.5 + ts * (-0.375 + ts * (17.0 / 96.0 + ts * (-25.0 / 384.0 + ts * (461.0 / 23040.0))))
        )
    if not np.all(small):
        tl = t[~small]
        out[~small] = -2.0 * np.expm1(-0.5 * tl) - f[~small]
    return out


def _shape_scale_from_t(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shape exponent lambda and scale radius R as functions of t = (a xi)^2.

    Returns (lam, R).  R diverges like sqrt(2/t) for t -> 0, which is the
    correct limit: an infinitely wide beam loses nothing to a finite
    displacement.
    """
    t = np.asarray(t, dtype=float)
    lam = np.full_like(t, 2.0)
    ln_bracket = np.empty_like(t)

    tiny = t < _SHAPE_LIMIT_T
    if np.any(tiny):
        ts = t[tiny]
        # log of the bracket: t/2 - t^2/8 + t^3/96 + O(t^4)
        ln_bracket[tiny] = 0.5 * ts * (1.0 - 0.25 * ts * (1.0 - ts / 12.0))
    big = ~tiny
    if np.any(big):
        tb = t[big]
        f = _one_minus_e_i0(tb)
        d = _gap(tb, f)
        lnr = np.log1p(d / f)
        lam[big] = 2.0 * tb * _i1e_core(tb) / (f * lnr)
        ln_bracket[big] = lnr

    with np.errstate(divide="ignore"):
        # R = ln_bracket^{-1/lam}; ln_bracket -> 0+ gives R -> inf
        r = np.exp(-np.log(ln_bracket) / lam)
    r = np.where(t == 0.0, np.inf, r)
    return lam, r


def shape_exponent(xi, aperture_radius: float):
    """Shape exponent lambda(xi) of the off-axis attenuation law.

    Even in ``xi`` (enters through (a xi)^2), continuous at xi = 0 with
    limit 2, the Gaussian-beam exponent.
    """
    arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("shape_exponent: xi must be finite")
    if not aperture_radius > 0:
        raise DomainError("shape_exponent: aperture_radius must be positive")
    lam, _ = _shape_scale_from_t((aperture_radius * arr) ** 2)
    return float(lam) if arr.ndim == 0 else lam


def scale_radius(xi, aperture_radius: float):
    """Scale radius R(xi) of the off-axis attenuation law.

    Even in ``xi`` and positive; diverges like sqrt(2)/(a |xi|) as
    xi -> 0 (returns ``inf`` at exactly zero), so the attenuation factor
    exp(-[(rho0/a)/R]^lambda) tends to 1 for an arbitrarily wide beam.
    """
    arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("scale_radius: xi must be finite")
    if not aperture_radius > 0:
        raise DomainError("scale_radius: aperture_radius must be positive")
    _, r = _shape_scale_from_t((aperture_radius * arr) ** 2)
    return float(r) if arr.ndim == 0 else r


def _eta_centered_core(w1_sq: np.ndarray, w2_sq: np.ndarray, a: float) -> np.ndarray:
    a2 = a * a
    inv1 = 1.0 / w1_sq
    inv2 = 1.0 / w2_sq
    u = a2 * np.abs(inv1 - inv2)
    v = a2 * (inv1 + inv2)
    term1 = _i0e_core(u) * np.exp(u - v)  # u - v = -2 a^2 / max(W1^2, W2^2)

    w1 = np.sqrt(w1_sq)
    w2 = np.sqrt(w2_sq)
    degenerate = np.abs(w1 - w2) <= _DEGENERATE_REL * np.maximum(w1, w2)

    xi3 = 1.0 / w1 - 1.0 / w2
    t3 = a2 * xi3 * xi3
    lam3, r3 = _shape_scale_from_t(t3)
    bracket = -np.expm1(-0.5 * t3)
    dw = np.where(degenerate, 1.0, np.abs(w1 - w2))
    ratio = (w1 + w2) / dw
    with np.errstate(divide="ignore", over="ignore"):
        exponent = np.minimum(lam3 * np.log(ratio / r3), _EXP_CLIP)
    term3 = 2.0 * bracket * np.exp(-np.exp(exponent))

    eta0 = 1.0 - term1 - term3
    # circular limit: the closed form 1 - exp(-2 a^2/W^2) is exact
    w_sq_mean = 0.5 * (w1_sq + w2_sq)
    eta0 = np.where(degenerate, -np.expm1(-2.0 * a2 / w_sq_mean), eta0)
    return np.clip(eta0, 0.0, 1.0)


def eta_centered(w1_sq, w2_sq, aperture_radius: float):
    """Maximal transmittance of a centered elliptic beam.

    Evaluated with exponentially scaled Bessel products so that small
    beams (large a^2/W^2) do not overflow; beams circular to within
    1e-9 relative use the exact closed form.
    """
    w1 = np.asarray(w1_sq, dtype=float)
    w2 = np.asarray(w2_sq, dtype=float)
    if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2)) and np.all(w1 > 0) and np.all(w2 > 0)):
        raise DomainError("eta_centered: squared spot radii must be positive and finite")
    if not aperture_radius > 0:
        raise DomainError("eta_centered: aperture_radius must be positive")
    scalar = w1.ndim == 0 and w2.ndim == 0
    out = _eta_centered_core(np.atleast_1d(w1), np.atleast_1d(w2), float(aperture_radius))
    return float(out[0]) if scalar else out.reshape(np.broadcast_shapes(np.shape(w1_sq), np.shape(w2_sq)))


def _w_eff_lambert_t(w1_sq, w2_sq, cos2chi, a2):
    """t = a^2 (2/W_eff)^2, i.e. the Lambert W value itself, in log domain."""
    inv1 = 1.0 / w1_sq
    inv2 = 1.0 / w2_sq
    ln_arg = (
        np.log(4.0 * a2)
        - 0.5 * (np.log(w1_sq) + np.log(w2_sq))
        + a2 * (2.0 * (inv1 + inv2) + (inv1 - inv2) * cos2chi)
    )
    return lambert_w_of_exp(ln_arg)


def effective_spot_radius_sq(w1_sq, w2_sq, angle, aperture_radius: float):
    """Effective squared spot radius W_eff^2(angle) of the displaced ellipse.

    ``angle`` is the ellipse orientation measured from the centroid
    azimuth; the result is pi-periodic and even in it, and reduces to
    W^2 for a circular beam.
    """
    w1 = np.asarray(w1_sq, dtype=float)
    w2 = np.asarray(w2_sq, dtype=float)
    ang = np.asarray(angle, dtype=float)
    if not (np.all(w1 > 0) and np.all(w2 > 0) and np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
        raise DomainError("effective_spot_radius_sq: squared spot radii must be positive and finite")
    if not np.all(np.isfinite(ang)):
        raise DomainError("effective_spot_radius_sq: angle must be finite")
    if not aperture_radius > 0:
        raise DomainError("effective_spot_radius_sq: aperture_radius must be positive")
    a2 = aperture_radius * aperture_radius
    t = _w_eff_lambert_t(w1, w2, np.cos(2.0 * ang), a2)
    out = 4.0 * a2 / t
    scalar = w1.ndim == 0 and w2.ndim == 0 and ang.ndim == 0
    return float(out) if scalar else out


def aperture_transmittance(x0, y0, theta1, theta2, phi, *, beam_waist_w0: float, aperture_radius: float):
    """Vectorized aperture transmittance of displaced elliptic beams.

    All five sample arrays broadcast together.  Returns values in
    [0, 1]; extinction is not applied here.
    """
    x0, y0, theta1, theta2, phi = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (x0, y0, theta1, theta2, phi))
    )
    a = float(aperture_radius)
    a2 = a * a
    w0_sq = float(beam_waist_w0) ** 2
    w1_sq = w0_sq * np.exp(theta1)
    w2_sq = w0_sq * np.exp(theta2)

    eta0 = _eta_centered_core(w1_sq, w2_sq, a)

    rho0 = np.hypot(x0, y0)
    phi0 = np.arctan2(y0, x0)  # 0 at the origin, where the angle is irrelevant
    t_eff = _w_eff_lambert_t(w1_sq, w2_sq, np.cos(2.0 * (phi - phi0)), a2)
    lam, r = _shape_scale_from_t(t_eff)

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        log_z = np.log(rho0 / (a * r))
        decay = np.exp(-np.exp(np.minimum(lam * log_z, _EXP_CLIP)))
    decay = np.where(rho0 == 0.0, 1.0, decay)
    return eta0 * decay


def transmittance(sample: BeamSample, geometry: ChannelGeometry) -> float:
    """Atmosphere-free aperture transmittance of one beam realization.

    Returns a value in [0, eta0]; equals eta0 exactly for a centered
    beam.  The extinction factor is applied by the sampling engine, not
    here.
    """
    out = aperture_transmittance(
        sample.x0,
        sample.y0,
        sample.theta1,
        sample.theta2,
        sample.phi,
        beam_waist_w0=geometry.beam_waist_w0,
        aperture_radius=geometry.aperture_radius,
    )
    return float(out)
