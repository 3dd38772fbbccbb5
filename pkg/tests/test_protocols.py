"""Emission scenarios, pulse equalization, and the photon memory."""

import math
from dataclasses import replace

import numpy as np
import pytest

import duoatom as da
from duoatom.control import Channel, ControlSchedule, GaussPulse
from duoatom.errors import DuoatomError
from duoatom.protocols import (
    EmissionScenario,
    equalize_pulse_powers,
    release_replay,
    run_emission,
    run_memory,
    timing_sensitivity,
)

UEV = da.energy_to_angular


class TestRunEmission:
    def test_adiabaticity_gate(self, paper_params):
        chan = Channel(base=0.0, changes=())
        fast = Channel(pulses=(GaussPulse(center=1.0, fwhm=0.1, peak=UEV(60.0)),))
        scenario = EmissionScenario(
            params=paper_params,
            schedule=ControlSchedule(t_end=3.0, delta12=fast),
        )
        with pytest.raises(DuoatomError, match="allow_nonadiabatic"):
            run_emission(scenario)
        bundle = run_emission(replace(scenario, allow_nonadiabatic=True))
        assert bundle.warnings

    def test_leakage_small_on_builtins(self, fig3_bundles, fig4_bundles, fig5_bundle):
        bundles = [b for b in fig3_bundles.values()]
        bundles += [entry[0] for entry in fig4_bundles.values()]
        bundles.append(fig5_bundle[0])
        for b in bundles:
            assert b.leakage_fraction < 0.05

    def test_dark_schedule_emits_nothing(self, paper_params):
        scenario = EmissionScenario(
            params=paper_params, schedule=ControlSchedule(t_end=6.0)
        )
        traj = run_emission(scenario).trajectory
        assert traj.flux_cav[-1] == 0.0
        assert traj.flux_asym[-1] == pytest.approx(1.0 - traj.excitation[-1], abs=1e-6)


class TestEqualize:
    def test_single_pulse_unchanged(self, paper_params):
        chan = Channel(pulses=(GaussPulse(center=1.5, fwhm=0.4, peak=UEV(20.0)),))
        scenario = EmissionScenario(
            params=paper_params, schedule=ControlSchedule(t_end=4.0, delta12=chan)
        )
        out, info = equalize_pulse_powers(scenario)
        assert out.schedule.delta12.pulses == chan.pulses
        assert info["exhausted"] == []

    def test_two_bin_second_higher(self, fig4_bundles):
        for label, (_, scenario, info) in fig4_bundles.items():
            amps = info["amplitudes"]
            assert amps[1] > amps[0]
            traj = run_emission(scenario).trajectory
            centers = sorted(p.center for p in scenario.schedule.delta12.pulses)
            mid = 0.5 * (centers[0] + centers[1])
            p1 = traj.power[traj.t < mid].max()
            p2 = traj.power[traj.t >= mid].max()
            assert abs(p2 - p1) <= 0.025 * p1

    def test_compass_strictly_increasing(self, fig5_bundle):
        _, _, info = fig5_bundle
        amps = info["amplitudes"]
        assert all(b > a for a, b in zip(amps, amps[1:]))
        assert info["exhausted"] == []

    def test_unreachable_reports_max(self, paper_params):
        chan = Channel(
            pulses=(
                GaussPulse(center=1.0, fwhm=0.4, peak=UEV(40.0)),
                GaussPulse(center=3.0, fwhm=0.4, peak=UEV(10.0)),
            )
        )
        scenario = EmissionScenario(
            params=paper_params,
            schedule=ControlSchedule(t_end=5.0, delta12=chan),
            allow_nonadiabatic=True,
        )
        out, info = equalize_pulse_powers(scenario, max_peak=UEV(12.0))
        assert info["exhausted"] == [1]
        assert out.schedule.delta12.pulses[1].peak == UEV(12.0)


def short_memory(scenario, **overrides):
    base = dict(t_end=8.0, release_time=100.0)
    base.update(overrides)
    return replace(scenario, **base)


class TestRunMemory:
    def test_zero_drive(self, fig6_scenario):
        res = run_memory(short_memory(fig6_scenario, n_mean=0.0, t_end=5.0))
        assert res.efficiency == 0.0

    def test_ideal_cross_damping_holds_population(self, fig6_scenario):
        p = fig6_scenario.params
        ideal = da.PhysicalParams(
            g=p.g, kappa=p.kappa, gamma=p.gamma, gamma12=p.gamma,
            omega12=p.omega12, omega_c=p.omega_c,
        )
        m = replace(fig6_scenario, params=ideal, t_end=12.0, release_time=100.0)
        res = run_memory(m)
        traj = res.trajectory
        window = (traj.t > 5.0) & (traj.t < 12.0)
        pop = traj.atomic_population[window]
        assert np.ptp(pop) < 1e-8

    def test_release_replay_consistency(self, fig6_scenario):
        m = replace(fig6_scenario, n_mean=0.001, release_time=8.0, t_end=12.0)
        res = run_memory(m)
        t, master_flux, replay_flux = release_replay(res)
        scale = master_flux.max()
        assert np.max(np.abs(master_flux - replay_flux)) < 0.01 * scale

    def test_weak_drive_linearity(self, fig6_scenario):
        etas = {}
        for n in (0.001, 0.01):
            res = run_memory(short_memory(fig6_scenario, n_mean=n))
            etas[n] = res.efficiency
        assert etas[0.001] == pytest.approx(etas[0.01], rel=0.01)

    def test_storage_decay_rate(self, fig6_result, fig6_scenario):
        assert fig6_result.storage_rate == pytest.approx(
            fig6_scenario.params.gamma_minus, rel=0.02
        )

    def test_flux_accounting(self, fig6_result, fig6_scenario):
        assert fig6_result.balance_residual < 1e-3 * fig6_scenario.n_mean

    def test_carrier_matches_lower_eigenstate(self, fig6_scenario):
        expected = -math.hypot(fig6_scenario.absorb_delta12, fig6_scenario.params.omega12)
        assert fig6_scenario.resolved_carrier() == pytest.approx(expected, rel=1e-12)


class TestScans:
    def test_bandwidth_rows(self, bandwidth_scan):
        eta = dict(zip(np.round(bandwidth_scan.delta12 * da.HBAR_UEV_NS, 1), bandwidth_scan.eta))
        assert eta[3.0] < 0.2  # vanishing coupling absorbs almost nothing
        assert eta[80.0] < bandwidth_scan.optimum_eta  # over-broadened absorber

    def test_timing_reference(self, timing_scan):
        assert timing_scan.reference_eta == pytest.approx(
            float(timing_scan.eta[timing_scan.offsets == 0.0][0])
        )

    def test_offsets_bounded(self, fig6_scenario):
        with pytest.raises(ValueError):
            timing_sensitivity(short_memory(fig6_scenario), [1.0])

    def test_worker_count_invariance(self, fig6_scenario):
        m = short_memory(fig6_scenario, t_end=5.0, pulse_center=1.5)
        offsets = [-0.1, 0.0, 0.1]
        serial = timing_sensitivity(m, offsets, workers=1)
        parallel = timing_sensitivity(m, offsets, workers=2)
        assert np.array_equal(serial.eta, parallel.eta)
