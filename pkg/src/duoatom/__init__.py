"""duoatom: tunable one-dimensional atom simulator.

Two dipole-coupled two-level emitters in a lossy cavity under
time-dependent detuning control: closed-form spectral layer, amplitude
and Lindblad time-domain engines, chronocyclic signal analysis, and the
shaped-emission / photon-memory protocols built on top of them.
"""

__version__ = "0.1.0"

from .control import Channel, ControlSchedule, GaussPulse, Ramp, Step
from .dynamics import (
    SingleExcitationState,
    Trajectory,
    adiabaticity_check,
    assemble_hamiltonian,
    integrate_amplitudes,
    integrate_master,
)
from .errors import ConfigError, DuoatomError, GridResolutionError, IntegrationError
from .params import (
    HBAR_UEV_NS,
    DipoleGeometry,
    PhysicalParams,
    angular_to_energy,
    dipole_rates,
    energy_to_angular,
    purcell_factor,
)
from .protocols import (
    EmissionScenario,
    MemoryScenario,
    bandwidth_optimum_scan,
    emission_efold_scan,
    equalize_pulse_powers,
    run_emission,
    run_memory,
    timing_sensitivity,
)
from .signal import (
    CorrelationKernel,
    correlation_single_excitation,
    quantum_regression,
    spectral_density,
    wigner_ville,
)
from .spectral import effective_rates, hybrid_eigenstates, mu_nu, spectral_scan

__all__ = [
    "__version__",
    "HBAR_UEV_NS",
    "PhysicalParams",
    "DipoleGeometry",
    "energy_to_angular",
    "angular_to_energy",
    "dipole_rates",
    "purcell_factor",
    "mu_nu",
    "hybrid_eigenstates",
    "effective_rates",
    "spectral_scan",
    "Channel",
    "ControlSchedule",
    "Ramp",
    "Step",
    "GaussPulse",
    "SingleExcitationState",
    "Trajectory",
    "assemble_hamiltonian",
    "integrate_amplitudes",
    "integrate_master",
    "adiabaticity_check",
    "CorrelationKernel",
    "correlation_single_excitation",
    "quantum_regression",
    "wigner_ville",
    "spectral_density",
    "EmissionScenario",
    "MemoryScenario",
    "run_emission",
    "run_memory",
    "equalize_pulse_powers",
    "bandwidth_optimum_scan",
    "timing_sensitivity",
    "emission_efold_scan",
    "DuoatomError",
    "ConfigError",
    "IntegrationError",
    "GridResolutionError",
]
