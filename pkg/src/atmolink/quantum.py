"""Gaussian-state transfer through the fluctuating-loss channel.

The channel acts on a bosonic mode as a_out = sqrt(eta) a_in
+ sqrt(1 - eta) c with the environment c in vacuum and the
transmittance eta drawn from the sampled distribution, statistically
independent of the state.  Averaging over eta at fixed input moments
gives closed forms in the two channel moments <eta> and <sqrt(eta)>:

    <a_out>              = <sqrt(eta)> <a>
    <Da_out^+ Da_out>    = <eta> <Da^+ Da> + (<eta> - <sqrt(eta)>^2) |<a>|^2
    <Da_out^2>           = <eta> <Da^2>   + (<eta> - <sqrt(eta)>^2) <a>^2
    cross moments with an untouched mode scale by <sqrt(eta)>

The excess terms proportional to <eta> - <sqrt(eta)>^2 (non-negative by
Jensen) are the signature of fluctuating loss: they vanish for a
deterministic attenuator and grow with the coherent displacement, which
is what eventually breaks the Gaussian entanglement test.

Vacuum convention: quadrature variance of vacuum is 1 with x = a + a^+,
so squeezing in dB is 10 log10(V).

Every analytic transform here is validated in the tests against a
brute-force oracle that applies the input-output relation per sampled
eta and averages the mixture moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StatisticsError
from .pdt import TransmittanceEnsemble, postselected_moments


@dataclass(frozen=True)
class ChannelMoments:
    """Postselected channel moments with deterministic losses folded in.

    ``mean_eta`` and ``mean_sqrt_eta`` describe the total transmission
    including the deterministic factor (receiver optics times detector
    efficiency); the Jensen chain mean_sqrt_eta^2 <= mean_eta
    <= mean_sqrt_eta holds for any distribution on [0, 1].
    """

    mean_eta: float
    mean_sqrt_eta: float
    eta_min: float = 0.0
    deterministic_factor: float = 1.0
    fraction_kept: float = 1.0
    mean_eta_stderr: float = 0.0
    mean_sqrt_eta_stderr: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.deterministic_factor <= 1.0:
            raise DomainError(f"ChannelMoments: deterministic_factor must lie in (0, 1], got {self.deterministic_factor}")
        t2, t1 = self.mean_eta, self.mean_sqrt_eta
        slack = 1e-12
        if not (0.0 <= t2 <= 1.0 + slack and 0.0 <= t1 <= 1.0 + slack):
            raise StatisticsError(f"ChannelMoments: moments must lie in [0, 1], got ({t2}, {t1})")
        if t1 * t1 > t2 + slack or t2 > t1 + slack:
            raise StatisticsError(
                f"ChannelMoments: Jensen chain violated, mean_sqrt_eta^2={t1*t1:.6g}, mean_eta={t2:.6g}, mean_sqrt_eta={t1:.6g}"
            )

    @property
    def loss_fluctuation(self) -> float:
        """<eta> - <sqrt(eta)>^2, the variance of sqrt(eta); zero for deterministic loss."""
        return max(0.0, self.mean_eta - self.mean_sqrt_eta**2)


@dataclass(frozen=True)
class SingleModeGaussianState:
    """Displaced single-mode Gaussian state in quadrature form (vacuum = 1)."""

    displacement: complex = 0.0
    quad_variance_x: float = 1.0
    quad_variance_p: float = 1.0

    def __post_init__(self):
        if not (self.quad_variance_x > 0 and self.quad_variance_p > 0):
            raise DomainError("SingleModeGaussianState: quadrature variances must be positive")
        if self.quad_variance_x * self.quad_variance_p < 1.0 - 1e-12:
            raise StatisticsError(
                f"SingleModeGaussianState violates the uncertainty relation: "
                f"Vx Vp = {self.quad_variance_x * self.quad_variance_p:.6g} < 1"
            )

    @classmethod
    def squeezed_from_db(cls, squeezing_db: float, displacement: complex = 0.0) -> "SingleModeGaussianState":
        """Minimum-uncertainty state with the x variance set in dB (negative = squeezed)."""
        v = 10.0 ** (squeezing_db / 10.0)
        return cls(displacement=displacement, quad_variance_x=v, quad_variance_p=1.0 / v)


@dataclass(frozen=True)
class GaussianTwoModeState:
    """Two-mode squeezed vacuum with a coherent displacement on mode A."""

    squeezing_xi: float
    displacement_a: complex = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.squeezing_xi) and self.squeezing_xi >= 0.0):
            raise DomainError(f"GaussianTwoModeState: squeezing_xi must be >= 0, got {self.squeezing_xi}")


@dataclass(frozen=True)
class MomentMatrix:
    """4x4 second-order matrix of central creation/annihilation moments.

    Row and column order pairs mode A then mode B:

        [ <Da+Da>  <Da+2>   <Da+Db>  <Da+Db+> ]
        [ <Da2>    <DaDa+>  <DaDb>   <DaDb+>  ]
        [ <DaDb+>  <Da+Db+> <Db+Db>  <Db+2>   ]
        [ <DaDb>   <Da+Db>  <Db2>    <DbDb+>  ]
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise StatisticsError(f"MomentMatrix must be 4x4, got {m.shape}")
        for lo, hi in ((0, 1), (2, 3)):
            commutator = m[hi, hi] - m[lo, lo]
            if abs(commutator - 1.0) > 1e-9:
                raise StatisticsError(
                    f"MomentMatrix: bosonic commutator violated on mode block ({lo},{hi}): {commutator}"
                )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


def channel_moments(
    ensemble: TransmittanceEnsemble,
    eta_min: float = 0.0,
    deterministic_factor: float = 1.0,
) -> ChannelMoments:
    """Postselect the ensemble and fold in deterministic efficiencies.

    The threshold applies to the sampled (atmospheric) transmittance;
    the deterministic factor f then scales <eta> by f and <sqrt(eta)>
    by sqrt(f).
    """
    if not 0.0 < deterministic_factor <= 1.0:
        raise DomainError(f"channel_moments: deterministic_factor must lie in (0, 1], got {deterministic_factor}")
    post = postselected_moments(ensemble, eta_min)
    f = deterministic_factor
    root_f = math.sqrt(f)
    return ChannelMoments(
        mean_eta=f * post.mean_eta,
        mean_sqrt_eta=root_f * post.mean_sqrt_eta,
        eta_min=float(eta_min),
        deterministic_factor=f,
        fraction_kept=post.fraction_kept,
        mean_eta_stderr=f * post.mean_eta_stderr,
        mean_sqrt_eta_stderr=root_f * post.mean_sqrt_eta_stderr,
    )


def transmit_single_mode(state: SingleModeGaussianState, moments: ChannelMoments) -> SingleModeGaussianState:
    """Output Gaussian state after the fluctuating-loss channel.

    Quadrature means scale by <sqrt(eta)>; each quadrature variance
    transforms as <eta> V + (1 - <eta>) plus the fluctuation excess
    (<eta> - <sqrt(eta)>^2) times the squared quadrature mean.
    """
    t2 = moments.mean_eta
    t1 = moments.mean_sqrt_eta
    fluct = moments.loss_fluctuation
    alpha = complex(state.displacement)
    mean_x = 2.0 * alpha.real  # <x> with x = a + a^+
    mean_p = 2.0 * alpha.imag
    vx = t2 * state.quad_variance_x + (1.0 - t2) + fluct * mean_x**2
    vp = t2 * state.quad_variance_p + (1.0 - t2) + fluct * mean_p**2
    return SingleModeGaussianState(displacement=t1 * alpha, quad_variance_x=vx, quad_variance_p=vp)


@dataclass(frozen=True)
class SqueezingPoint:
    eta_min: float
    output_db: float
    fraction_kept: float
    output_db_stderr: float


@dataclass(frozen=True)
class SqueezingCurve:
    points: tuple[SqueezingPoint, ...]
    truncated_thresholds: tuple[float, ...]

    @property
    def output_db(self) -> np.ndarray:
        return np.array([p.output_db for p in self.points])


def squeezing_vs_threshold(
    input_db: float,
    ensemble: TransmittanceEnsemble,
    thresholds,
    deterministic_factor: float = 1.0,
) -> SqueezingCurve:
    """Transmitted squeezing (dB of the squeezed quadrature) per threshold.

    The curve ends at the last threshold with a non-empty postselected
    sub-ensemble; thresholds beyond it are reported as truncated rather
    than evaluated to NaN.
    """
    if input_db >= 0:
        raise DomainError(f"squeezing_vs_threshold: input_db must be negative (squeezed), got {input_db}")
    state = SingleModeGaussianState.squeezed_from_db(input_db)
    v_in = state.quad_variance_x
    max_sample = float(ensemble.samples.max())
    points = []
    truncated = []
    for eta_min in thresholds:
        if eta_min > max_sample:
            truncated.append(float(eta_min))
            continue
        m = channel_moments(ensemble, eta_min, deterministic_factor)
        out = transmit_single_mode(state, m)
        v_out = out.quad_variance_x
        # d(10 log10 V)/dV * dV/d<eta> * stderr(<eta>)
        stderr_db = 10.0 / math.log(10.0) * abs(v_in - 1.0) * m.mean_eta_stderr / v_out
        points.append(
            SqueezingPoint(
                eta_min=float(eta_min),
                output_db=10.0 * math.log10(v_out),
                fraction_kept=m.fraction_kept,
                output_db_stderr=stderr_db,
            )
        )
    return SqueezingCurve(points=tuple(points), truncated_thresholds=tuple(truncated))


def tmsv_moment_matrix(state: GaussianTwoModeState, moments: ChannelMoments) -> MomentMatrix:
    """Moment matrix of a displaced TMSV with mode A sent through the channel.

    Before the channel the central moments are <Da+Da> = <Db+Db>
    = sinh(xi)^2, <DaDb> = sinh(xi)cosh(xi), all quadratic a-only and
    b-only moments zero, independent of the displacement.  Mode A then
    picks up the fluctuation excess in <Da+Da> and <Da2> while its
    cross moments scale by <sqrt(eta)>.
    """
    t2 = moments.mean_eta
    t1 = moments.mean_sqrt_eta
    fluct = moments.loss_fluctuation
    alpha = complex(state.displacement_a)
    n = math.sinh(state.squeezing_xi) ** 2
    c = math.sinh(state.squeezing_xi) * math.cosh(state.squeezing_xi)

    naa = t2 * n + fluct * abs(alpha) ** 2
    ma = fluct * alpha * alpha        # <Da^2>
    cab = t1 * c                      # <Da Db>
    dab = 0.0 + 0.0j                  # <Da Db^+> vanishes for the TMSV
    nb = float(n)
    mb = 0.0 + 0.0j                   # <Db^2>

    conj = np.conj
    matrix = np.array(
        [
            [naa, conj(ma), conj(dab), conj(cab)],
            [ma, naa + 1.0, cab, dab],
            [dab, conj(cab), nb, conj(mb)],
            [cab, conj(dab), mb, nb + 1.0],
        ],
        dtype=complex,
    )
    return MomentMatrix(matrix=matrix)


def partial_transpose(matrix: MomentMatrix) -> MomentMatrix:
    """Partial transposition on mode B at the moment level.

    Transposing the B part of each operator product maps b <-> b^+ and
    reverses the operator order of the B factors.  Consequently single-b
    cross moments swap with their b^+ counterparts, <Db^2> swaps with
    <Db+2>, while the ordered products <Db+Db> and <DbDb+> are
    individually invariant (the swap and the order reversal cancel).
    """
    m = matrix.matrix
    p = m.copy()
    p[0, 2], p[0, 3] = m[0, 3], m[0, 2]
    p[1, 2], p[1, 3] = m[1, 3], m[1, 2]
    p[2, 0], p[2, 1] = m[3, 0], m[3, 1]
    p[3, 0], p[3, 1] = m[2, 0], m[2, 1]
    p[2, 3], p[3, 2] = m[3, 2], m[2, 3]
    return MomentMatrix(matrix=p)


def simon_test(matrix: MomentMatrix) -> float:
    """Determinant of the partially transposed moment matrix.

    Negative values certify Gaussian entanglement; separable states
    always score non-negative.
    """
    det = np.linalg.det(partial_transpose(matrix).matrix)
    if abs(det.imag) > 1e-9 * max(1.0, abs(det.real)):
        raise StatisticsError(f"simon_test: determinant has a non-negligible imaginary part: {det}")
    return float(det.real)


@dataclass(frozen=True)
class EntanglementRegion:
    """Simon-test values on a (squeezing, displacement) grid with its boundary.

    ``boundary`` holds one (xi, displacement) vertex per squeezing grid
    value whose zero crossing falls inside the displacement grid; for a
    deterministic channel the test is displacement-independent and the
    boundary is empty.
    """

    xi_grid: np.ndarray
    displacement_grid: np.ndarray
    w_values: np.ndarray
    boundary: tuple[tuple[float, float], ...]


def entanglement_region(
    moments: ChannelMoments,
    xi_grid,
    displacement_grid,
) -> EntanglementRegion:
    """Evaluate the Simon test over a grid and extract the zero contour.

    For each squeezing value with an entangled zero-displacement point,
    the boundary displacement is located by linear interpolation of the
    sign change along the displacement axis.
    """
    xi_grid = np.asarray(xi_grid, dtype=float)
    disp_grid = np.asarray(displacement_grid, dtype=float)
    if np.any(xi_grid < 0) or np.any(disp_grid < 0):
        raise DomainError("entanglement_region: grids must be non-negative")
    w = np.empty((xi_grid.size, disp_grid.size))
    for i, xi in enumerate(xi_grid):
        for j, disp in enumerate(disp_grid):
            state = GaussianTwoModeState(squeezing_xi=float(xi), displacement_a=complex(disp))
            w[i, j] = simon_test(tmsv_moment_matrix(state, moments))

    boundary = []
    for i, xi in enumerate(xi_grid):
        row = w[i]
        if row[0] >= 0.0:
            continue  # not entangled even without displacement
        crossings = np.nonzero((row[:-1] < 0.0) & (row[1:] >= 0.0))[0]
        if crossings.size == 0:
            continue  # boundary beyond the grid
        j = int(crossings[0])
        x0, x1 = disp_grid[j], disp_grid[j + 1]
        w0, w1 = row[j], row[j + 1]
        boundary.append((float(xi), float(x0 + (0.0 - w0) * (x1 - x0) / (w1 - w0))))
    return EntanglementRegion(
        xi_grid=xi_grid,
        displacement_grid=disp_grid,
        w_values=w,
        boundary=tuple(boundary),
    )
