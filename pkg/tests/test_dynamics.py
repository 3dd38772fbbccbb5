"""Hamiltonian assembly, amplitude integrator, master equation, adiabaticity."""

import math

import numpy as np
import pytest

import duoatom as da
from duoatom.control import Channel, ControlSchedule, GaussPulse, Ramp, Step
from duoatom.dynamics import (
    SingleExcitationState,
    adiabaticity_check,
    assemble_hamiltonian,
    integrate_amplitudes,
    integrate_master,
    pure_state_density,
    single_excitation_vector,
)
from duoatom.errors import IntegrationError

UEV = da.energy_to_angular


def hand_built_hamiltonian(p, d12, shift, omega_c, ep, n_max):
    """Independent construction by enumerating basis states |q1 q2 n>."""
    nf = n_max + 1
    dim = 4 * nf

    def idx(q1, q2, n):
        return (q1 * 2 + q2) * nf + n

    s1 = np.zeros((dim, dim), complex)
    s2 = np.zeros((dim, dim), complex)
    a = np.zeros((dim, dim), complex)
    for q1 in range(2):
        for q2 in range(2):
            for n in range(nf):
                if q1 == 1:
                    s1[idx(0, q2, n), idx(1, q2, n)] = 1.0
                if q2 == 1:
                    s2[idx(q1, 0, n), idx(q1, 1, n)] = 1.0
                if n >= 1:
                    a[idx(q1, q2, n - 1), idx(q1, q2, n)] = math.sqrt(n)
    ss = (s1 + s2) / math.sqrt(2)
    sa = (s1 - s2) / math.sqrt(2)
    h = p.omega12 * (ss.conj().T @ ss - sa.conj().T @ sa)
    h = h + shift * (ss.conj().T @ ss + sa.conj().T @ sa)
    h = h + omega_c * (a.conj().T @ a)
    h = h + d12 * (ss.conj().T @ sa + sa.conj().T @ ss)
    h = h + 1j * math.sqrt(2) * p.g * (a.conj().T @ ss - a @ ss.conj().T)
    h = h + (-1j * ep) * (a.conj().T - a)
    return h


class TestAssembleHamiltonian:
    def test_decoupled_limit(self, paper_params):
        p = da.PhysicalParams(
            g=0.0,
            kappa=paper_params.kappa,
            gamma=paper_params.gamma,
            gamma12=paper_params.gamma12,
            omega12=paper_params.omega12,
            omega_c=paper_params.omega_c,
        )
        ctrl = ControlSchedule(t_end=1.0)
        h = assemble_hamiltonian(p, ctrl, 0.5)
        minus = single_excitation_vector(SingleExcitationState.minus(), 1)
        plus = single_excitation_vector(SingleExcitationState.plus(), 1)
        assert np.vdot(minus, h @ minus).real == pytest.approx(-p.omega12, rel=1e-12)
        assert np.vdot(plus, h @ plus).real == pytest.approx(+p.omega12, rel=1e-12)

    def test_atomic_block_eigenvalues(self, paper_params):
        p = da.PhysicalParams(
            g=0.0,
            kappa=paper_params.kappa,
            gamma=paper_params.gamma,
            gamma12=paper_params.gamma12,
            omega12=paper_params.omega12,
            omega_c=paper_params.omega_c,
        )
        d12 = UEV(25.0)
        ctrl = ControlSchedule(t_end=1.0, delta12=Channel(base=d12))
        h = assemble_hamiltonian(p, ctrl, 0.0)
        basis = np.stack(
            [
                single_excitation_vector(SingleExcitationState.minus(), 1),
                single_excitation_vector(SingleExcitationState.plus(), 1),
            ],
            axis=1,
        )
        block = basis.conj().T @ h @ basis
        eig = np.linalg.eigvalsh(block)
        split = math.hypot(d12, p.omega12)
        assert eig[0] == pytest.approx(-split, rel=1e-12)
        assert eig[1] == pytest.approx(+split, rel=1e-12)

    def test_against_hand_assembly(self, paper_params):
        d12 = UEV(10.0)
        shift = UEV(3.0)
        ep = UEV(0.2)
        ctrl = ControlSchedule(
            t_end=2.0,
            delta12=Channel(base=d12),
            omega0=Channel(base=shift),
            drive=Channel(base=ep),
        )
        for n_max in (1, 3):
            h = assemble_hamiltonian(paper_params, ctrl, 1.0, n_max=n_max)
            oracle = hand_built_hamiltonian(
                paper_params, d12, shift, paper_params.omega_c, ep, n_max
            )
            assert np.max(np.abs(h - oracle)) < 1e-12 * np.max(np.abs(oracle))
            assert np.max(np.abs(h - h.conj().T)) < 1e-12

    def test_time_bounds(self, paper_params):
        ctrl = ControlSchedule(t_end=1.0)
        with pytest.raises(ValueError):
            assemble_hamiltonian(paper_params, ctrl, 1.5)


class TestAmplitudeIntegrator:
    def test_dark_state_decay(self, paper_params):
        ctrl = ControlSchedule(t_end=5.0)
        traj = integrate_amplitudes(
            paper_params, ctrl, SingleExcitationState.minus(), rtol=1e-11, atol=1e-13
        )
        expected = np.exp(-paper_params.gamma_minus * traj.t)
        assert np.max(np.abs(traj.pop_asym - expected)) < 1e-8
        assert traj.pop_sym.max() == 0.0
        assert traj.pop_cav.max() == 0.0

    def test_cavity_only_decay(self, paper_params):
        p = da.PhysicalParams(
            g=0.0,
            kappa=paper_params.kappa,
            gamma=paper_params.gamma,
            gamma12=paper_params.gamma12,
            omega12=paper_params.omega12,
            omega_c=paper_params.omega_c,
        )
        ctrl = ControlSchedule(t_end=0.05)
        traj = integrate_amplitudes(
            p, ctrl, SingleExcitationState.cavity(), rtol=1e-11, atol=1e-14, sample_dt=5e-4
        )
        assert np.max(np.abs(traj.pop_cav - np.exp(-p.kappa * traj.t))) < 1e-8

    def test_ramp_ordering(self, fig3_bundles):
        slow = fig3_bundles["d10"].trajectory
        fast = fig3_bundles["d50"].trajectory
        t_peak_slow = slow.t[np.argmax(slow.power)]
        t_peak_fast = fast.t[np.argmax(fast.power)]
        assert t_peak_fast < t_peak_slow
        # both turn on right after the gate opens at 0.7 ns
        for traj in (slow, fast):
            on = traj.t[traj.power > 0.05 * traj.power.max()][0]
            assert 0.7 <= on <= 1.2

        def efold(traj):
            i0 = np.argmax(traj.power)
            target = traj.power[i0] / math.e
            later = np.where(traj.power[i0:] <= target)[0]
            return traj.t[i0:][later[0]] - traj.t[i0]

        assert efold(fast) < efold(slow) / 3

    def test_drive_rejected(self, paper_params):
        ctrl = ControlSchedule(
            t_end=1.0, drive=Channel(pulses=(GaussPulse(center=0.5, fwhm=0.1, peak=1.0),))
        )
        with pytest.raises(ValueError, match="drive-free"):
            integrate_amplitudes(paper_params, ctrl, SingleExcitationState.minus())

    def test_flux_conservation(self, paper_params):
        chan = Channel(base=0.0, changes=(Ramp(start=0.5, duration=0.3, to=UEV(30.0)),))
        ctrl = ControlSchedule(t_end=4.0, delta12=chan)
        traj = integrate_amplitudes(paper_params, ctrl, SingleExcitationState.minus())
        assert traj.flux_balance_residual() < 1e-4

    def test_perfect_dark_state(self, paper_params):
        p = da.PhysicalParams(
            g=paper_params.g,
            kappa=paper_params.kappa,
            gamma=paper_params.gamma,
            gamma12=paper_params.gamma,  # gamma_minus exactly zero
            omega12=paper_params.omega12,
            omega_c=paper_params.omega_c,
        )
        ctrl = ControlSchedule(t_end=10.0)
        traj = integrate_amplitudes(
            p,
            ctrl,
            SingleExcitationState.minus(),
            rtol=1e-12,
            atol=1e-14,
            method="DOP853",
        )
        assert np.max(np.abs(traj.pop_asym - 1.0)) < 1e-10

    def test_convergence_estimate(self, paper_params):
        chan = Channel(base=0.0, changes=(Ramp(start=0.5, duration=0.3, to=UEV(20.0)),))
        ctrl = ControlSchedule(t_end=3.0, delta12=chan)
        runs = {
            rtol: integrate_amplitudes(
                paper_params, ctrl, SingleExcitationState.minus(), rtol=rtol, atol=1e-14
            )
            for rtol in (1e-8, 5e-9)
        }
        diff = max(
            abs(runs[1e-8].pop_asym[-1] - runs[5e-9].pop_asym[-1]),
            abs(runs[1e-8].pop_sym[-1] - runs[5e-9].pop_sym[-1]),
            abs(runs[1e-8].pop_cav[-1] - runs[5e-9].pop_cav[-1]),
        )
        assert diff < runs[1e-8].error_estimate


class TestMasterEquation:
    def test_vacuum_stationary(self, paper_params):
        rho0 = np.zeros((8, 8), complex)
        rho0[0, 0] = 1.0
        ctrl = ControlSchedule(t_end=2.0, delta12=Channel(base=UEV(20.0)))
        traj = integrate_master(paper_params, ctrl, rho0, 1)
        assert traj.excitation.max() < 1e-12
        assert np.max(np.abs(traj.trace - 1.0)) < 1e-10

    def test_single_excitation_equivalence(self, paper_params):
        chan = Channel(
            base=0.0,
            changes=(Ramp(start=0.7, duration=0.28, to=UEV(10.0)),),
            pulses=(GaussPulse(center=2.0, fwhm=0.3, peak=UEV(20.0)),),
        )
        ctrl = ControlSchedule(t_end=4.0, delta12=chan)
        ta = integrate_amplitudes(
            paper_params, ctrl, SingleExcitationState.minus(), rtol=1e-10, atol=1e-13
        )
        rho0 = pure_state_density(single_excitation_vector(SingleExcitationState.minus(), 1))
        tm = integrate_master(paper_params, ctrl, rho0, 1, rtol=1e-9, atol=1e-13, sample_dt=0.01)
        for attr in ("pop_asym", "pop_sym", "pop_cav"):
            assert np.max(np.abs(getattr(ta, attr) - getattr(tm, attr))) < 1e-6

    def test_positivity_and_hermiticity(self, paper_params):
        rho0 = pure_state_density(single_excitation_vector(SingleExcitationState.minus(), 1))
        ctrl = ControlSchedule(t_end=3.0, delta12=Channel(base=UEV(30.0)))
        traj = integrate_master(paper_params, ctrl, rho0, 1)
        assert traj.herm_residual < 1e-10
        assert traj.eigmin.min() > -1e-8
        assert np.max(np.abs(traj.trace - 1.0)) < 1e-8
        assert np.all(np.diff(traj.t) > 0) and np.ptp(np.diff(traj.t)) < 1e-12
        for pops in (traj.pop_asym, traj.pop_sym, traj.pop_cav,
                     traj.pop_minus_eff, traj.pop_plus_eff):
            assert np.all(pops >= -1e-8)
            assert np.all(pops <= 1.0 + 1e-8)

    def test_top_fock_guard(self, paper_params):
        from duoatom.control import gaussian_drive_envelope

        # a strong pulse overfills a 2-photon truncation
        drive = Channel(
            pulses=(gaussian_drive_envelope(paper_params.kappa, 0.5, 1.0, 0.3),)
        )
        ctrl = ControlSchedule(t_end=2.0, delta12=Channel(base=UEV(40.0)), drive=drive)
        rho0 = np.zeros((8, 8), complex)
        rho0[0, 0] = 1.0
        with pytest.raises(IntegrationError, match="n_max"):
            integrate_master(paper_params, ctrl, rho0, 1, rtol=1e-7)

    def test_rejects_bad_density(self, paper_params):
        ctrl = ControlSchedule(t_end=1.0)
        bad = np.zeros((8, 8), complex)
        with pytest.raises(ValueError, match="trace"):
            integrate_master(paper_params, ctrl, bad, 1)


class TestAdiabaticity:
    def test_constant_passes(self, paper_params):
        ctrl = ControlSchedule(t_end=2.0, delta12=Channel(base=UEV(40.0)))
        report = adiabaticity_check(ctrl, paper_params)
        assert report.passed and report.max_ratio == 0.0

    def test_ramp_ratio_analytic(self, paper_params):
        chan = Channel(base=0.0, changes=(Ramp(start=0.7, duration=0.28, to=UEV(10.0)),))
        ctrl = ControlSchedule(t_end=2.0, delta12=chan)
        report = adiabaticity_check(ctrl, paper_params)
        expected = UEV(10.0) * math.pi / (2 * 0.28) / paper_params.omega12**2
        assert report.max_ratio == pytest.approx(expected, rel=1e-3)
        assert report.passed

    def test_step_fails_with_location(self, paper_params):
        chan = Channel(base=0.0, changes=(Step(at=1.25, to=UEV(10.0)),))
        ctrl = ControlSchedule(t_end=2.0, delta12=chan)
        report = adiabaticity_check(ctrl, paper_params)
        assert not report.passed
        assert math.isinf(report.max_ratio)
        assert report.time_of_max == 1.25
