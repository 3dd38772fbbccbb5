"""Field observables: two-time correlations and time-frequency maps.

The first-order correlation kernel C(t1, t2) = <a^dag(t1) a(t2)> is either
assembled directly from the cavity amplitude (exact in the
single-excitation sector, rank one) or propagated with the quantum
regression theorem under the full Lindblad generator.  The chronocyclic
Wigner map resamples the kernel along skew diagonals with the finite
detection-window limits applied verbatim and Fourier-transforms in the
lag variable; the energy spectral density is the corresponding
double-time transform.  Frequencies are detunings from the rotating-frame
zero in rad/ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.ndimage import gaussian_filter, map_coordinates, maximum_filter
from scipy.signal import find_peaks, peak_widths

from .control import ControlSchedule
from .dynamics import Trajectory, _max_step_for, _solver_failed, collective_operators
from .errors import GridResolutionError
from .params import PhysicalParams

__all__ = [
    "CorrelationKernel",
    "TimeFrequencyMap",
    "SpectralDensity",
    "correlation_single_excitation",
    "quantum_regression",
    "wigner_ville",
    "spectral_density",
]


@dataclass
class CorrelationKernel:
    """First-order field correlation on a uniform time grid.

    ``matrix[i, j] = <a^dag(t_i) a(t_j)>``; Hermitian with a real
    non-negative diagonal equal to the instantaneous photon number.
    """

    t: np.ndarray
    matrix: np.ndarray
    amp: np.ndarray | None = None  # cavity amplitude when rank one

    def __post_init__(self):
        n = self.t.size
        if self.matrix.shape != (n, n):
            raise ValueError("kernel matrix must be square on the time grid")
        dts = np.diff(self.t)
        if n > 1 and not np.allclose(dts, dts[0], rtol=1e-9, atol=1e-12):
            raise ValueError("kernel requires a uniform time grid")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    @property
    def window(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diagonal(self.matrix))

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        sym = 0.5 * (self.matrix + self.matrix.conj().T)
        return np.linalg.eigvalsh(sym)


def correlation_single_excitation(traj: Trajectory) -> CorrelationKernel:
    """Rank-one kernel from a single-excitation amplitude trajectory."""
    if traj.amps is None:
        raise ValueError(
            "rank-one correlation needs an amplitude trajectory; "
            "driven master-equation runs must use quantum_regression"
        )
    c = traj.amps[2]
    return CorrelationKernel(t=traj.t, matrix=np.outer(np.conj(c), c), amp=c.copy())


def quantum_regression(
    p: PhysicalParams,
    ctrl: ControlSchedule,
    init: np.ndarray,
    n_max: int = 1,
    *,
    sample_dt: float = 0.05,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    frame_offset: float = 0.0,
) -> CorrelationKernel:
    """Two-time correlation under the full Lindblad generator.

    For each grid time t1, the operator a rho(t1) is propagated forward
    with the same generator and traced against a^dag, filling one
    triangle; the other follows by Hermitian symmetry.
    """
    ops = collective_operators(n_max)
    dim = ops["dim"]
    rho0 = np.asarray(init, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"density matrix shape {rho0.shape} != {(dim, dim)}")

    a, ad = ops["a"], ops["ad"]
    s_s, s_a = ops["sigma_s"], ops["sigma_a"]
    lind = [
        (p.kappa, a, ad),
        (p.gamma_plus, s_s, s_s.conj().T),
        (p.gamma_minus, s_a, s_a.conj().T),
    ]
    lind = [(r, L, Ld) for (r, L, Ld) in lind if r > 0]
    sqrt2 = math.sqrt(2.0)
    h_static = (
        p.omega12 * (ops["Ns"] - ops["Na"])
        + (p.omega_c - frame_offset) * ops["Nc"]
        + 1j * sqrt2 * p.g * (ad @ s_s - a @ s_s.conj().T)
    )
    h_delta = ops["Xas"] + ops["Xas"].conj().T
    h_shift = ops["Ns"] + ops["Na"]
    h_drive = -1j * (ad - a)
    a0 = -1j * h_static
    for r, L, Ld in lind:
        a0 = a0 - 0.5 * r * (Ld @ L)

    has_drive = ctrl.has_drive

    def generator(t, y):
        m = y.reshape(dim, dim)
        drift = (
            a0
            + ctrl.delta12_at(t) * (-1j) * h_delta
            + (ctrl.omega0_at(t) - frame_offset) * (-1j) * h_shift
        )
        if has_drive:
            ep = ctrl.drive_at(t)
            if ep != 0.0:
                drift = drift + ep * (-1j) * h_drive
        dm = drift @ m + m @ drift.conj().T
        for r, L, Ld in lind:
            dm += r * (L @ m @ Ld)
        return dm.ravel()

    n_samples = int(round(ctrl.t_end / sample_dt)) + 1
    ts = np.linspace(0.0, ctrl.t_end, n_samples)
    max_step = _max_step_for(ctrl)
    sol = solve_ivp(
        generator,
        (0.0, ctrl.t_end),
        rho0.ravel(),
        method="RK45",
        t_eval=ts,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    err = _solver_failed(sol)
    if err is not None:
        raise err
    rhos = sol.y.T.reshape(n_samples, dim, dim)

    kernel = np.zeros((n_samples, n_samples), dtype=complex)
    ad_t = ad.T.copy()
    for i in range(n_samples):
        seed = a @ rhos[i]
        kernel[i, i] = np.sum(ad_t * seed)
        if i == n_samples - 1:
            break
        sub = solve_ivp(
            generator,
            (ts[i], ts[-1]),
            seed.ravel(),
            method="RK45",
            t_eval=ts[i:],
            rtol=rtol,
            atol=atol,
            max_step=max_step,
        )
        err = _solver_failed(sub)
        if err is not None:
            raise err
        mats = sub.y.T.reshape(-1, dim, dim)
        # Tr[a^dag M(t2)] = <a^dag(t2) a(t1)> = C(t2, t1)
        vals = np.einsum("ij,kji->k", ad, mats)
        kernel[i:, i] = vals
        kernel[i, i:] = np.conj(vals)
    return CorrelationKernel(t=ts, matrix=kernel)


# ---------------------------------------------------------------------------
# time-frequency analysis

@dataclass
class TimeFrequencyMap:
    """Real chronocyclic map W(t, omega) with its grids and diagnostics."""

    t: np.ndarray
    omega: np.ndarray
    values: np.ndarray
    window: float
    imag_residue: float

    def time_marginal(self) -> np.ndarray:
        """Integral over the stored frequency band, per time sample."""
        domega = float(self.omega[1] - self.omega[0])
        return self.values.sum(axis=1) * domega

    def frequency_marginal(self) -> np.ndarray:
        dt = float(self.t[1] - self.t[0])
        return self.values.sum(axis=0) * dt

    def slice_at_time(self, t_query: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.t - t_query)))
        return self.values[idx]


def shortest_emission_feature(t: np.ndarray, intensity: np.ndarray) -> float:
    """FWHM of the narrowest intensity peak; inf when nothing is emitted."""
    top = float(np.max(intensity))
    if top <= 0.0:
        return math.inf
    dt = float(t[1] - t[0])
    peaks, _ = find_peaks(intensity, height=0.05 * top)
    if peaks.size == 0:
        # monotone profile: use the span above half maximum
        above = intensity >= 0.5 * top
        return float(np.count_nonzero(above)) * dt
    widths = peak_widths(intensity, peaks, rel_height=0.5)[0]
    return float(np.min(widths)) * dt


def carrier_estimate(kernel: CorrelationKernel) -> float:
    """Mean emission frequency from the one-lag phase of the kernel.

    For an amplitude at frame detuning eps the one-lag element carries
    exp(-i eps dt), so the estimate is minus its phase over dt.
    """
    c1 = np.sum(np.diagonal(kernel.matrix, offset=1))
    return 0.0 if c1 == 0 else -float(np.angle(c1)) / kernel.dt


def default_frequency_grid(kernel: CorrelationKernel, span: float = 60.0, n: int = 601):
    """Band centered on the mean emission frequency estimated from one lag."""
    center = carrier_estimate(kernel)
    return np.linspace(center - span / 2.0, center + span / 2.0, n)


def wigner_ville(
    kernel: CorrelationKernel,
    omega: np.ndarray | None = None,
    *,
    min_feature_samples: int = 8,
) -> TimeFrequencyMap:
    """Chronocyclic Wigner map of the emitted field.

    For each time t the kernel is resampled along the skew diagonal
    (t + tau/2, t - tau/2) with bilinear interpolation, the finite
    detection-window lag limits |tau| <= T/2 - |t - T/2| are applied
    verbatim, and the lag axis is Fourier-transformed onto the requested
    frequency grid.  The fast carrier phase is divided out of the kernel
    before interpolation and restored analytically in the transform, so
    the bilinear error scales with the envelope bandwidth rather than the
    carrier.  Aborts when the grid resolves the shortest emission feature
    with fewer than ``min_feature_samples`` samples.
    """
    t = kernel.t
    n = t.size
    if n < 4:
        raise GridResolutionError("kernel grid too short for a time-frequency map")
    dt = kernel.dt
    big_t = kernel.window
    feature = shortest_emission_feature(t, kernel.diagonal)
    if math.isfinite(feature) and feature / dt < min_feature_samples:
        raise GridResolutionError(
            f"kernel grid spacing {dt:.4g} ns resolves the shortest emission "
            f"feature ({feature:.4g} ns) with fewer than {min_feature_samples} "
            f"samples; rerun with sample_dt <= {feature / min_feature_samples:.4g} ns"
        )
    if omega is None:
        omega = default_frequency_grid(kernel)
    omega = np.asarray(omega, dtype=float)

    tr = t - t[0]
    m = n if n % 2 == 1 else n - 1
    tau = (np.arange(m) - m // 2) * dt
    tau_max = 0.5 * big_t - np.abs(tr - 0.5 * big_t)
    mask = np.abs(tau)[None, :] <= tau_max[:, None] + 1e-12 * big_t

    eps = carrier_estimate(kernel)
    # the kernel carries exp(+i eps (t1 - t2)); strip it before resampling
    demod = np.exp(-1j * eps * tr)
    envelope = demod[:, None] * kernel.matrix * np.conj(demod)[None, :]

    rows = (tr[:, None] + 0.5 * tau[None, :]) / dt
    cols = (tr[:, None] - 0.5 * tau[None, :]) / dt
    coords = np.stack([rows.ravel(), cols.ravel()])
    skew = (
        map_coordinates(envelope.real, coords, order=1, mode="nearest")
        + 1j * map_coordinates(envelope.imag, coords, order=1, mode="nearest")
    ).reshape(n, m)
    skew[~mask] = 0.0

    phase = np.exp(-1j * np.outer(tau, omega - eps))
    w_complex = skew @ phase * (dt / (2.0 * math.pi))
    scale = float(np.max(np.abs(w_complex.real)))
    residue = float(np.max(np.abs(w_complex.imag))) / scale if scale > 0 else 0.0
    return TimeFrequencyMap(
        t=t.copy(),
        omega=omega,
        values=np.ascontiguousarray(w_complex.real),
        window=big_t,
        imag_residue=residue,
    )


def dominant_lobes(
    wmap: TimeFrequencyMap,
    *,
    t_smooth: float = 0.15,
    omega_smooth: float = 5.0,
    threshold: float = 0.3,
) -> list[tuple[float, float, float]]:
    """Locate the positive wavepacket lobes of a time-frequency map.

    Interference lattices oscillate on the fringe scale and average to
    zero under a Gaussian blur of that size, while genuine wavepacket
    lobes survive; returns (t, omega, relative height) for every local
    maximum of the smoothed map above ``threshold`` of its global
    maximum.
    """
    dt = float(wmap.t[1] - wmap.t[0])
    dw = float(wmap.omega[1] - wmap.omega[0])
    smooth = gaussian_filter(
        wmap.values, sigma=(t_smooth / dt, omega_smooth / abs(dw)), mode="nearest"
    )
    top = float(smooth.max())
    if top <= 0:
        return []
    size = (
        max(3, 2 * int(round(t_smooth / dt)) + 1),
        max(3, 2 * int(round(omega_smooth / abs(dw))) + 1),
    )
    footprint = maximum_filter(smooth, size=size, mode="nearest")
    hits = np.argwhere((smooth == footprint) & (smooth >= threshold * top))
    return [
        (float(wmap.t[i]), float(wmap.omega[j]), float(smooth[i, j] / top))
        for i, j in hits
    ]


@dataclass
class SpectralDensity:
    """Energy spectral density S(omega) of the emitted field."""

    omega: np.ndarray
    values: np.ndarray

    def total(self) -> float:
        return float(np.trapezoid(self.values, self.omega))


def spectral_density(
    kernel: CorrelationKernel, omega: np.ndarray | None = None
) -> SpectralDensity:
    """Double-time Fourier transform of the correlation kernel.

    ``S(omega) = (1/2pi) sum_{t1,t2} C(t1,t2) e^{-i omega (t1-t2)} dt^2``,
    non-negative for a positive-semidefinite kernel; for rank-one kernels
    this is |FT of the cavity amplitude|^2 / 2pi, and its frequency
    integral equals the time-integrated photon number (Parseval).
    """
    if omega is None:
        omega = default_frequency_grid(kernel)
    omega = np.asarray(omega, dtype=float)
    dt = kernel.dt
    if kernel.amp is not None:
        ft = (kernel.amp * dt) @ np.exp(1j * np.outer(kernel.t, omega))
        vals = (np.abs(ft) ** 2) / (2.0 * math.pi)
    else:
        u = np.exp(1j * np.outer(kernel.t, omega)) * dt
        v = kernel.matrix @ u
        vals = np.real(np.einsum("ik,ik->k", np.conj(u), v)) / (2.0 * math.pi)
    return SpectralDensity(omega=omega, values=vals)
