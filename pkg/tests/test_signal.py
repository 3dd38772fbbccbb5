"""Correlation kernels, the chronocyclic map, and spectral densities."""

import math

import numpy as np
import pytest

import duoatom as da
from duoatom.control import Channel, ControlSchedule, GaussPulse
from duoatom.dynamics import (
    SingleExcitationState,
    integrate_amplitudes,
    pure_state_density,
    single_excitation_vector,
)
from duoatom.errors import GridResolutionError
from duoatom.signal import (
    CorrelationKernel,
    correlation_single_excitation,
    quantum_regression,
    spectral_density,
    wigner_ville,
)

UEV = da.energy_to_angular


def exponential_kernel(gamma=1.0, carrier=-5.0, t_end=12.0, dt=0.02):
    """Amplitude at frame detuning ``carrier``: the spectrum peaks there."""
    t = np.arange(0.0, t_end + dt / 2, dt)
    amp = np.exp((-0.5 * gamma - 1j * carrier) * t)
    return CorrelationKernel(t=t, matrix=np.outer(np.conj(amp), amp), amp=amp)


def gaussian_kernel(sigma=0.5, carrier=-5.0, t_end=8.0, dt=0.02):
    """Wavepacket centered mid-window; lag coherence fits the window limits."""
    t = np.arange(0.0, t_end + dt / 2, dt)
    amp = np.exp(-((t - t_end / 2) ** 2) / (2 * sigma**2) - 1j * carrier * t)
    return CorrelationKernel(t=t, matrix=np.outer(np.conj(amp), amp), amp=amp)


def alias_band(center, dt, k):
    """Frequency comb spanning exactly one alias band of the lag grid."""
    span = 2.0 * math.pi / dt
    domega = span / k
    return center - span / 2.0 + domega * np.arange(k)


def ideal_params(paper_params):
    """gamma12 = gamma exactly: lossless dark waits for covariance tests."""
    return da.PhysicalParams(
        g=paper_params.g,
        kappa=paper_params.kappa,
        gamma=paper_params.gamma,
        gamma12=paper_params.gamma,
        omega12=paper_params.omega12,
        omega_c=paper_params.omega_c,
    )


def burst_schedule(t_pulse, t_end, peak_uev=30.0):
    chan = Channel(pulses=(GaussPulse(center=t_pulse, fwhm=0.3, peak=UEV(peak_uev)),))
    om12 = UEV(31.0)
    return ControlSchedule(t_end=t_end, delta12=chan, omega0_lock=True, omega12=om12)


class TestRankOneKernel:
    def test_zero_amplitude(self, paper_params):
        ctrl = ControlSchedule(t_end=1.0)
        traj = integrate_amplitudes(paper_params, ctrl, SingleExcitationState.minus())
        k = correlation_single_excitation(traj)
        assert np.all(k.matrix == 0.0)

    def test_exponential_closed_form(self):
        k = exponential_kernel(gamma=2.0, carrier=0.0, t_end=4.0)
        t1, t2 = np.meshgrid(k.t, k.t, indexing="ij")
        assert np.max(np.abs(k.matrix - np.exp(-(t1 + t2)))) < 1e-12

    def test_rejects_master_trajectory(self, paper_params):
        rho0 = pure_state_density(single_excitation_vector(SingleExcitationState.minus(), 1))
        from duoatom.dynamics import integrate_master

        ctrl = ControlSchedule(t_end=1.0)
        traj = integrate_master(paper_params, ctrl, rho0, 1)
        with pytest.raises(ValueError, match="quantum_regression"):
            correlation_single_excitation(traj)

    def test_hermitian_psd_pure(self, fig4_bundles):
        kernel = fig4_bundles["dt5"][0].kernel
        assert kernel.hermiticity_residual() < 1e-10
        diag = kernel.diagonal
        assert np.all(diag >= -1e-15)
        ev = kernel.eigenvalues()
        assert ev[0] > -1e-8
        assert ev[-2] / ev[-1] < 1e-6  # single-photon purity


class TestQuantumRegression:
    def test_vacuum_zero(self, paper_params):
        rho0 = np.zeros((8, 8), complex)
        rho0[0, 0] = 1.0
        ctrl = ControlSchedule(t_end=1.0, delta12=Channel(base=UEV(20.0)))
        k = quantum_regression(paper_params, ctrl, rho0, 1, sample_dt=0.1)
        assert np.max(np.abs(k.matrix)) < 1e-12

    def test_agrees_with_rank_one(self, paper_params):
        from duoatom.control import Ramp

        chan = Channel(base=0.0, changes=(Ramp(start=0.4, duration=0.3, to=UEV(25.0)),))
        ctrl = ControlSchedule(t_end=3.0, delta12=chan)
        traj = integrate_amplitudes(
            paper_params, ctrl, SingleExcitationState.minus(), rtol=1e-11, atol=1e-13,
            sample_dt=0.075,
        )
        k_amp = correlation_single_excitation(traj)
        rho0 = pure_state_density(single_excitation_vector(SingleExcitationState.minus(), 1))
        k_reg = quantum_regression(
            paper_params, ctrl, rho0, 1, sample_dt=0.075, rtol=1e-10, atol=1e-13
        )
        assert np.max(np.abs(k_amp.matrix - k_reg.matrix)) < 1e-6

    def test_empty_cavity_closed_form(self, paper_params):
        p = da.PhysicalParams(
            g=0.0,
            kappa=paper_params.kappa,
            gamma=paper_params.gamma,
            gamma12=paper_params.gamma12,
            omega12=paper_params.omega12,
            omega_c=paper_params.omega_c,
        )
        ctrl = ControlSchedule(t_end=0.02)
        rho0 = pure_state_density(single_excitation_vector(SingleExcitationState.cavity(), 1))
        k = quantum_regression(p, ctrl, rho0, 1, sample_dt=5e-4, rtol=1e-10, atol=1e-14)
        t1, t2 = np.meshgrid(k.t, k.t, indexing="ij")
        expected = np.exp(1j * p.omega_c * (t1 - t2)) * np.exp(-p.kappa * (t1 + t2) / 2)
        assert np.max(np.abs(k.matrix - expected)) < 1e-8


class TestWignerVille:
    def test_zero_kernel(self):
        t = np.linspace(0, 1, 64)
        k = CorrelationKernel(t=t, matrix=np.zeros((64, 64), complex))
        w = wigner_ville(k, omega=np.linspace(-5, 5, 32))
        assert np.all(w.values == 0.0)

    def test_resolution_guard(self):
        # decay at 2/ns: half-max feature ~0.35 ns, fine at dt=0.02, coarse at 0.1
        fine = exponential_kernel(gamma=2.0, t_end=4.0, dt=0.02)
        coarse = exponential_kernel(gamma=2.0, t_end=4.0, dt=0.1)
        wigner_ville(fine, omega=np.linspace(-10, 0, 32))
        with pytest.raises(GridResolutionError, match="sample_dt"):
            wigner_ville(coarse, omega=np.linspace(-10, 0, 32))

    def test_real_and_marginal_full_band(self):
        """Over one full alias band the time marginal recovers <a^dag a>(t)."""
        k = exponential_kernel(gamma=1.0, carrier=-5.0, t_end=12.0, dt=0.02)
        omega = alias_band(-5.0, dt=0.02, k=1200)
        w = wigner_ville(k, omega)
        assert w.imag_residue < 1e-9
        marginal = w.time_marginal()
        diag = k.diagonal
        assert np.max(np.abs(marginal - diag)) < 1e-3 * diag.max()

    def test_parseval_frequency_marginal(self):
        k = gaussian_kernel(sigma=0.5, carrier=-5.0, t_end=8.0, dt=0.02)
        omega = alias_band(-5.0, dt=0.02, k=1200)
        w = wigner_ville(k, omega)
        total_w = float(np.sum(w.values) * (w.omega[1] - w.omega[0]) * (w.t[1] - w.t[0]))
        total_n = float(np.trapezoid(k.diagonal, k.t))
        assert total_w == pytest.approx(total_n, rel=1e-3)

    def test_spectral_density_consistency(self):
        """For a compactly correlated field S(omega) equals the W time integral,
        and the residual shrinks under grid doubling (bilinear skew sampling)."""
        omega = np.linspace(-25.0, 15.0, 801)
        errs = {}
        for dt in (0.02, 0.01):
            k = gaussian_kernel(sigma=0.5, carrier=-5.0, t_end=8.0, dt=dt)
            s = spectral_density(k, omega)
            from_w = wigner_ville(k, omega).frequency_marginal()
            errs[dt] = float(np.max(np.abs(from_w - s.values)) / s.values.max())
        assert errs[0.01] < 1e-3
        assert errs[0.01] < 0.5 * errs[0.02]

    def test_time_translation_covariance(self, paper_params):
        p = ideal_params(paper_params)
        dt = 0.01
        base = burst_schedule(t_pulse=1.2, t_end=4.0)
        delayed = base.shifted(0.5)
        omega = np.linspace(-90.0, -10.0, 257)
        maps = []
        for ctrl in (base, delayed):
            traj = integrate_amplitudes(
                p, ctrl, SingleExcitationState.minus(), rtol=1e-11, atol=1e-13, sample_dt=dt
            )
            maps.append(wigner_ville(correlation_single_excitation(traj), omega))
        w0, w1 = maps
        shift = int(round(0.5 / dt))
        n = w0.values.shape[0]
        resid = np.abs(w1.values[shift : shift + n - shift] - w0.values[: n - shift])
        assert resid.max() < 1e-6 * np.abs(w0.values).max()

    def test_frequency_covariance(self, paper_params):
        """A rigid frequency shift of emitters+cavity translates the map."""
        p = ideal_params(paper_params)
        shift = 4.0  # rad/ns
        base = burst_schedule(t_pulse=1.2, t_end=4.0)
        shifted = ControlSchedule(
            t_end=base.t_end,
            delta12=base.delta12,
            omega0=Channel(base=shift),
            omega0_lock=True,
            omega12=base.omega12,
        )
        p_shifted = da.PhysicalParams(
            g=p.g,
            kappa=p.kappa,
            gamma=p.gamma,
            gamma12=p.gamma12,
            omega12=p.omega12,
            omega_c=p.omega_c + shift,
        )
        omega = np.linspace(-90.0, -10.0, 401)
        t0 = integrate_amplitudes(
            p, base, SingleExcitationState.minus(), rtol=1e-11, atol=1e-13, sample_dt=0.01
        )
        t1 = integrate_amplitudes(
            p_shifted, shifted, SingleExcitationState.minus(), rtol=1e-11, atol=1e-13,
            sample_dt=0.01,
        )
        w0 = wigner_ville(correlation_single_excitation(t0), omega)
        w1 = wigner_ville(correlation_single_excitation(t1), omega + shift)
        assert np.max(np.abs(w1.values - w0.values)) < 1e-6 * np.abs(w0.values).max()


class TestSpectralDensity:
    def test_lorentzian_width(self):
        gamma = 2.0
        k = exponential_kernel(gamma=gamma, carrier=-5.0, t_end=30.0, dt=0.02)
        omega = np.linspace(-25.0, 15.0, 4001)
        s = spectral_density(k, omega)
        top = s.values.max()
        above = omega[s.values >= top / 2]
        fwhm = above[-1] - above[0]
        assert fwhm == pytest.approx(gamma, rel=0.01)
        assert omega[np.argmax(s.values)] == pytest.approx(-5.0, abs=0.02)

    def test_parseval(self):
        # the discrete-time transform is periodic: integrate one alias band
        k = exponential_kernel(gamma=1.0, carrier=-5.0, t_end=25.0, dt=0.02)
        omega = alias_band(-5.0, dt=0.02, k=3000)
        s = spectral_density(k, omega)
        total_s = float(np.sum(s.values) * (omega[1] - omega[0]))
        total_n = float(np.sum(k.diagonal) * k.dt)
        assert total_s == pytest.approx(total_n, rel=1e-3)

    def test_general_kernel_path_matches_rank_one(self):
        k = exponential_kernel(gamma=1.5, carrier=-3.0, t_end=8.0, dt=0.04)
        k_general = CorrelationKernel(t=k.t, matrix=k.matrix)  # amp not provided
        omega = np.linspace(-20.0, 10.0, 301)
        s1 = spectral_density(k, omega)
        s2 = spectral_density(k_general, omega)
        assert np.max(np.abs(s1.values - s2.values)) < 1e-10 * s1.values.max()

    def test_nonnegative(self, fig4_bundles):
        s = fig4_bundles["dt5"][0].spectrum
        assert np.all(s.values >= -1e-12 * s.values.max())
