"""Special functions and seeded correlated-Gaussian sampling.

The modified Bessel functions I0, I1 and the principal-branch Lambert W
function are the entire special-function surface of the aperture
transmittance model, so they are implemented here rather than imported:
their accuracy and overflow contracts are part of this package's test
surface.

Accuracy notes
--------------
* ``bessel_i0`` / ``bessel_i1`` use the ascending power series for
  x <= 30 (all terms positive, no cancellation) and the large-argument
  asymptotic expansion above.  The crossover sits where the asymptotic
  series already reaches ~1e-16 relative error; a lower crossover such
  as x ~ 7.75 would cap the asymptotic accuracy near 1e-7 and break the
  1e-12 contract.
* The exponentially scaled forms ``bessel_i0e`` / ``bessel_i1e`` never
  overflow and are the ones used in hot loops.
* ``lambert_w0`` uses Halley iteration; ``lambert_w_of_exp`` evaluates
  W(e^y) directly from y, solving w + log(w) = y for large y, so that
  arguments far beyond the overflow threshold of e^y remain usable.

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StatisticsError

_BESSEL_SWITCH = 30.0
_SERIES_MAX_TERMS = 90
_ASYM_TERMS = 18


def _as_float_array(x, name: str, *, allow_negative: bool = False) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    if not allow_negative and np.any(arr < 0.0):
        raise DomainError(f"{name}: argument must be non-negative")
    return arr, (arr.ndim == 0)


def _maybe_scalar(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def _i_series(x: np.ndarray, order: int) -> np.ndarray:
    """Ascending series of I0 (order=0) or I1 (order=1) for x <= 30."""
    t = 0.25 * x * x
    term = np.ones_like(t)
    total = np.ones_like(t)
    for k in range(1, _SERIES_MAX_TERMS):
        term = term * t / (k * (k + order))
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    if order == 1:
        total = total * 0.5 * x
    return total


def _ive_asym(x: np.ndarray, order: int) -> np.ndarray:
    """Scaled asymptotic expansion e^{-x} I_order(x) for x > 30."""
    mu = 4.0 * order * order
    c = np.ones_like(x)
    total = np.ones_like(x)
    inv8x = 1.0 / (8.0 * x)
    for k in range(_ASYM_TERMS):
        c = c * ((2 * k + 1) ** 2 - mu) * inv8x / (k + 1)
        total = total + c
    return total / np.sqrt(2.0 * np.pi * x)


def _i0e_core(x: np.ndarray) -> np.ndarray:
    small = x <= _BESSEL_SWITCH
    out = np.empty_like(x)
    if np.any(small):
        xs = x[small]
        out[small] = _i_series(xs, 0) * np.exp(-xs)
    if not np.all(small):
        out[~small] = _ive_asym(x[~small], 0)
    return out


def _i1e_core(x: np.ndarray) -> np.ndarray:
    small = x <= _BESSEL_SWITCH
    out = np.empty_like(x)
    if np.any(small):
        xs = x[small]
        out[small] = _i_series(xs, 1) * np.exp(-xs)
    if not np.all(small):
        out[~small] = _ive_asym(x[~small], 1)
    return out


def bessel_i0(x):
    """Modified Bessel function I0(x) for x >= 0.

    Overflows to ``inf`` beyond x ~ 713 like the function itself; use
    :func:`bessel_i0e` when an e^{-x} factor is available.
    """
    arr, scalar = _as_float_array(x, "bessel_i0")
    small = arr <= _BESSEL_SWITCH
    out = np.empty_like(arr)
    if np.any(small):
        out[small] = _i_series(arr[small], 0)
    if not np.all(small):
        xl = arr[~small]
        with np.errstate(over="ignore"):
            out[~small] = _ive_asym(xl, 0) * np.exp(xl)
    return _maybe_scalar(out, scalar)


def bessel_i1(x):
    """Modified Bessel function I1(x) for x >= 0."""
    arr, scalar = _as_float_array(x, "bessel_i1")
    small = arr <= _BESSEL_SWITCH
    out = np.empty_like(arr)
    if np.any(small):
        out[small] = _i_series(arr[small], 1)
    if not np.all(small):
        xl = arr[~small]
        with np.errstate(over="ignore"):
            out[~small] = _ive_asym(xl, 1) * np.exp(xl)
    return _maybe_scalar(out, scalar)


def bessel_i0e(x):
    """Exponentially scaled e^{-x} I0(x); finite for all x >= 0."""
    arr, scalar = _as_float_array(x, "bessel_i0e")
    return _maybe_scalar(_i0e_core(arr), scalar)


def bessel_i1e(x):
    """Exponentially scaled e^{-x} I1(x); finite for all x >= 0."""
    arr, scalar = _as_float_array(x, "bessel_i1e")
    return _maybe_scalar(_i1e_core(arr), scalar)


def _lambert_halley(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    for _ in range(12):
        ew = np.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        step = f / (ew * wp1 - 0.5 * (w + 2.0) * f / wp1)
        w = w - step
        if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(w))):
            break
    return w


def lambert_w0(x):
    """Principal branch of the Lambert W function for x >= 0.

    Solves w e^w = x to relative accuracy ~1e-14 via Halley iteration.
    """
    arr, scalar = _as_float_array(x, "lambert_w0")
    w = np.empty_like(arr)
    big = arr >= np.e
    if np.any(big):
        # asymptotic seed: W ~ log x - log log x + log log x / log x
        l1 = np.log(arr[big])
        l2 = np.log(l1)
        w[big] = l1 - l2 + l2 / l1
    if not np.all(big):
        xs = arr[~big]
        w[~big] = xs / (1.0 + xs)
    w = _lambert_halley(arr, w)
    return _maybe_scalar(w, scalar)


def lambert_w_of_exp(y):
    """W(e^y) evaluated from the exponent y, safe for y far above 709.

    For large y the defining relation is solved in log domain,
    w + log(w) = y, with Newton iteration from the asymptotic seed
    y - log(y) + log(y)/y.
    """
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("lambert_w_of_exp: argument must be finite")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    big = arr > 100.0
    if np.any(big):
        yb = arr[big]
        ly = np.log(yb)
        w = yb - ly + ly / yb
        for _ in range(8):
            step = (w + np.log(w) - yb) * w / (w + 1.0)
            w = w - step
            if np.all(np.abs(step) <= 1e-15 * w):
                break
        out[big] = w
    if not np.all(big):
        out[~big] = lambert_w0(np.exp(arr[~big]))
    out = out.reshape(np.shape(y))
    return _maybe_scalar(out, scalar)


@dataclass(frozen=True)
class RandomSource:
    """Counter-based random stream identified by (seed, stream_id).

    Identical pairs reproduce identical sample sequences bit for bit;
    distinct ``stream_id`` values give statistically independent
    sub-streams, which is how chunk-parallel sampling stays
    deterministic regardless of worker count.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError(f"RandomSource: seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise DomainError(f"RandomSource: stream_id must be non-negative, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))


def mvn_sqrt_factor(sigma, *, eig_floor: float = -1e-10) -> np.ndarray:
    """Symmetric square root of a covariance matrix, with clamping.

    Eigenvalues in [eig_floor, 0) are clamped to zero; anything below
    ``eig_floor`` raises, reporting the offending matrix.  The symmetric
    (rather than Cholesky) root keeps the factor well defined for
    exactly singular covariances.
    """
    arr = np.asarray(sigma, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StatisticsError(f"covariance must be square, got shape {arr.shape}")
    scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0)
    asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
    if asym > 1e-12 * scale:
        raise StatisticsError(f"covariance is not symmetric (max asymmetry {asym:.3e}):\n{arr}")
    vals, vecs = np.linalg.eigh(arr)
    if float(vals.min(initial=0.0)) < eig_floor:
        raise StatisticsError(
            f"covariance is not positive semidefinite (min eigenvalue {vals.min():.3e}):\n{arr}"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def sample_mvn(mu, sigma, rng: np.random.Generator, size: int | None = None):
    """Draw from N(mu, sigma) using the symmetric square-root factor.

    With ``size=None`` returns a single vector; otherwise an array of
    shape (size, dim).  Ensemble code factorises sigma once and applies
    the factor to a whole block of standard normals; this helper exists
    for one-off draws and tests.
    """
    mu = np.asarray(mu, dtype=float)
    factor = mvn_sqrt_factor(sigma)
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, mu.size))
    draws = mu + z @ factor  # factor is symmetric
    return draws[0] if size is None else draws
