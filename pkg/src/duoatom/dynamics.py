"""Time-domain engine: amplitude equations and Lindblad master equation.

Two integrators share one frame convention.  The rotating frame is fixed
at ``omega0_ref + frame_offset`` for the whole run; a time-dependent mean
emitter frequency enters as an equal shift of both atomic diagonals, so
the cavity amplitude keeps the physical phase needed by two-time
correlators.  With a static mean frequency and zero ``frame_offset`` this
reduces to the textbook frame rotating at the mean emitter frequency.

The closed 3x3 amplitude system covers undriven single-excitation runs;
the full master equation on (2 TLS) x (Fock 0..n_max) additionally
supports a coherent cavity drive with real envelope (the frame is then
chosen at the drive carrier via ``frame_offset``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .control import ControlSchedule
from .errors import IntegrationError
from .params import SQRT2, PhysicalParams
from .spectral import mu_nu

__all__ = [
    "SingleExcitationState",
    "Trajectory",
    "AdiabaticityReport",
    "assemble_hamiltonian",
    "integrate_amplitudes",
    "integrate_master",
    "adiabaticity_check",
    "collective_operators",
    "pure_state_density",
    "single_excitation_vector",
]


# ---------------------------------------------------------------------------
# states and operators

@dataclass(frozen=True)
class SingleExcitationState:
    """Amplitudes on (antisymmetric, symmetric, one-cavity-photon) basis states."""

    amp_a: complex = 0.0
    amp_s: complex = 0.0
    amp_cav: complex = 0.0

    def __post_init__(self):
        if self.norm_sq > 1.0 + 1e-9:
            raise ValueError(f"state norm^2 = {self.norm_sq} exceeds 1")

    @property
    def norm_sq(self) -> float:
        return abs(self.amp_a) ** 2 + abs(self.amp_s) ** 2 + abs(self.amp_cav) ** 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.amp_a, self.amp_s, self.amp_cav], dtype=complex)

    @classmethod
    def minus(cls) -> "SingleExcitationState":
        return cls(amp_a=1.0)

    @classmethod
    def plus(cls) -> "SingleExcitationState":
        return cls(amp_s=1.0)

    @classmethod
    def cavity(cls) -> "SingleExcitationState":
        return cls(amp_cav=1.0)

    @classmethod
    def minus_eff(cls, p: PhysicalParams, delta12: float) -> "SingleExcitationState":
        """Exact lower eigenstate of the static atomic block at ``delta12``."""
        mu, nu = mu_nu(delta12 / p.omega12)
        return cls(amp_a=nu, amp_s=-mu)


@lru_cache(maxsize=8)
def collective_operators(n_max: int) -> dict:
    """Operators on (emitter1 g/e) x (emitter2 g/e) x (Fock 0..n_max)."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    nf = n_max + 1
    sm = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e| with basis (g, e)
    i2 = np.eye(2)
    ic = np.eye(nf)
    a_f = np.diag(np.sqrt(np.arange(1, nf)), k=1)
    sigma1 = np.kron(np.kron(sm, i2), ic)
    sigma2 = np.kron(np.kron(i2, sm), ic)
    a = np.kron(np.kron(i2, i2), a_f)
    sigma_s = (sigma1 + sigma2) / SQRT2
    sigma_a = (sigma1 - sigma2) / SQRT2
    dim = 4 * nf
    top = np.zeros(dim, dtype=bool)
    fock = np.tile(np.arange(nf), 4)
    top[fock == n_max] = True
    return {
        "dim": dim,
        "n_max": n_max,
        "a": a,
        "ad": a.conj().T,
        "sigma_s": sigma_s,
        "sigma_a": sigma_a,
        "Ns": sigma_s.conj().T @ sigma_s,
        "Na": sigma_a.conj().T @ sigma_a,
        "Nc": a.conj().T @ a,
        "Xas": sigma_a.conj().T @ sigma_s,
        "top_mask": top,
    }


def single_excitation_vector(state: SingleExcitationState, n_max: int) -> np.ndarray:
    """Embed a single-excitation state into the full truncated space."""
    ops = collective_operators(n_max)
    dim = ops["dim"]
    ground = np.zeros(dim, dtype=complex)
    ground[0] = 1.0  # |g,g,0>
    vec = (
        state.amp_a * (ops["sigma_a"].conj().T @ ground)
        + state.amp_s * (ops["sigma_s"].conj().T @ ground)
        + state.amp_cav * (ops["ad"] @ ground)
    )
    # remainder sits in the ground state so the vector is normalized
    res = 1.0 - state.norm_sq
    vec[0] = math.sqrt(max(res, 0.0))
    return vec


def pure_state_density(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, v.conj())


def assemble_hamiltonian(
    p: PhysicalParams,
    ctrl: ControlSchedule,
    t: float,
    n_max: int = 1,
    frame_offset: float = 0.0,
) -> np.ndarray:
    """Hamiltonian at time ``t`` on the truncated space, in rad/ns.

    Frame fixed at ``omega0_ref + frame_offset``: the mean-frequency shift
    of the emitters appears as an equal diagonal term on both atomic
    excitations, the cavity diagonal is its static offset minus the frame
    offset, and the drive enters with a real envelope.
    """
    if not 0.0 <= t <= ctrl.t_end:
        raise ValueError(f"t = {t} outside schedule horizon [0, {ctrl.t_end}]")
    ops = collective_operators(n_max)
    d12 = ctrl.delta12_at(t)
    shift = ctrl.omega0_at(t) - frame_offset
    ep = ctrl.drive_at(t)
    h = p.omega12 * (ops["Ns"] - ops["Na"])
    h = h + shift * (ops["Ns"] + ops["Na"])
    h = h + (p.omega_c - frame_offset) * ops["Nc"]
    h = h + d12 * (ops["Xas"] + ops["Xas"].conj().T)
    h = h + 1j * SQRT2 * p.g * (ops["ad"] @ ops["sigma_s"] - ops["a"] @ ops["sigma_s"].conj().T)
    if ep != 0.0:
        h = h + (-1j * ep) * (ops["ad"] - ops["a"])
    return h


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class Trajectory:
    """Sampled expectation values of one integration run.

    ``excitation`` is the total excitation number; ``flux_*`` are the
    cumulative emitted quanta through the cavity port and the two leaky
    channels (integrated inside the ODE system, not by post-hoc
    quadrature).  Amplitude runs carry the raw amplitudes; master runs
    carry trace/positivity diagnostics and, when driven, the cumulative
    input/output photon numbers.
    """

    t: np.ndarray
    pop_asym: np.ndarray
    pop_sym: np.ndarray
    pop_cav: np.ndarray
    pop_minus_eff: np.ndarray
    pop_plus_eff: np.ndarray
    power: np.ndarray
    excitation: np.ndarray
    flux_cav: np.ndarray
    flux_sym: np.ndarray
    flux_asym: np.ndarray
    rtol: float
    error_estimate: float
    nsteps: int
    nfev: int
    frame_offset: float = 0.0
    amps: np.ndarray | None = None
    mean_a: np.ndarray | None = None
    mean_sa: np.ndarray | None = None
    mean_ss: np.ndarray | None = None
    trace: np.ndarray | None = None
    herm_residual: float | None = None
    eigmin: np.ndarray | None = None
    flux_in: np.ndarray | None = None
    flux_out: np.ndarray | None = None

    @property
    def atomic_population(self) -> np.ndarray:
        return self.pop_asym + self.pop_sym

    def flux_balance_residual(self) -> float:
        """Worst-sample excitation bookkeeping error.

        Undriven runs: initial excitation vs remaining + integrated fluxes.
        Driven runs: injected photons vs output-port + leaked + remaining.
        """
        leaked = self.flux_cav + self.flux_sym + self.flux_asym
        if self.flux_in is None:
            target = self.excitation[0]
            return float(np.max(np.abs(target - (self.excitation + leaked))))
        budget = self.flux_out + self.flux_sym + self.flux_asym + self.excitation
        return float(np.max(np.abs(self.flux_in - budget)))


def _eff_populations(ctrl, p, ts, pop_a, pop_s, cross_as):
    """Populations of the instantaneous hybridized eigenstates.

    ``cross_as`` is <sigma_a^dag sigma_s> (complex) per sample; for pure
    amplitude runs it equals conj(amp_a) * amp_s.
    """
    delta = ctrl.delta12.values(ts) / p.omega12
    mu, nu = mu_nu(delta)
    cross = 2.0 * mu * nu * np.real(cross_as)
    p_minus = nu * nu * pop_a + mu * mu * pop_s - cross
    p_plus = mu * mu * pop_a + nu * nu * pop_s + cross
    return p_minus, p_plus


def _solver_failed(sol):
    if sol.success:
        return None
    return IntegrationError(f"integrator failed: {sol.message}")


def _max_step_for(ctrl: ControlSchedule) -> float:
    feature = ctrl.shortest_feature()
    if not math.isfinite(feature):
        return ctrl.t_end / 16.0
    # never leap over a narrow control feature
    return min(feature / 4.0, ctrl.t_end / 16.0)


# ---------------------------------------------------------------------------
# closed single-excitation system

def integrate_amplitudes(
    p: PhysicalParams,
    ctrl: ControlSchedule,
    init: SingleExcitationState,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    sample_dt: float = 0.01,
    frame_offset: float = 0.0,
    method: str = "RK45",
) -> Trajectory:
    """Integrate the closed 3x3 non-Hermitian amplitude system.

    Requires a drive-free schedule (the closed system has no source term).
    Emitted power is ``kappa * |amp_cav|^2``; channel fluxes accumulate as
    extra quadrature components of the same ODE.
    """
    if ctrl.has_drive:
        raise ValueError("amplitude integration requires a drive-free schedule")
    om12 = p.omega12
    gm, gp, kap, g = p.gamma_minus, p.gamma_plus, p.kappa, p.g
    cav_diag = p.omega_c - frame_offset - 0.5j * kap
    coup = SQRT2 * g

    d12_at = ctrl.delta12_at
    om0_at = ctrl.omega0_at

    def rhs(t, y):
        ca, cs, cc = y[0], y[1], y[2]
        d12 = d12_at(t)
        shift = om0_at(t) - frame_offset
        da = -1j * ((shift - om12 - 0.5j * gm) * ca + d12 * cs)
        ds = -1j * (d12 * ca + (shift + om12 - 0.5j * gp) * cs + (-1j * coup) * cc)
        dc = -1j * ((1j * coup) * cs + cav_diag * cc)
        return [
            da,
            ds,
            dc,
            kap * (cc.real * cc.real + cc.imag * cc.imag),
            gp * (cs.real * cs.real + cs.imag * cs.imag),
            gm * (ca.real * ca.real + ca.imag * ca.imag),
        ]

    y0 = np.zeros(6, dtype=complex)
    y0[:3] = init.as_vector()
    n_samples = int(round(ctrl.t_end / sample_dt)) + 1
    ts = np.linspace(0.0, ctrl.t_end, n_samples)
    sol = solve_ivp(
        rhs,
        (0.0, ctrl.t_end),
        y0,
        method=method,
        t_eval=ts,
        rtol=rtol,
        atol=atol,
        max_step=_max_step_for(ctrl),
    )
    err = _solver_failed(sol)
    if err is not None:
        raise err

    amps = sol.y[:3]
    pops = np.abs(amps) ** 2
    norm = pops.sum(axis=0)
    growth = float(np.max(norm - norm[0]))
    if growth > 1e-6:
        raise IntegrationError(
            f"amplitude norm grew by {growth:.2e} (> 1e-6): integrator misconfigured"
        )
    cross = np.conj(amps[0]) * amps[1]
    p_minus, p_plus = _eff_populations(ctrl, p, ts, pops[0], pops[1], cross)
    return Trajectory(
        t=ts,
        pop_asym=pops[0],
        pop_sym=pops[1],
        pop_cav=pops[2],
        pop_minus_eff=p_minus,
        pop_plus_eff=p_plus,
        power=kap * pops[2],
        excitation=norm,
        flux_cav=sol.y[3].real,
        flux_sym=sol.y[4].real,
        flux_asym=sol.y[5].real,
        rtol=rtol,
        error_estimate=100.0 * rtol + 10.0 * atol,
        nsteps=sol.nfev // 6,
        nfev=sol.nfev,
        frame_offset=frame_offset,
        amps=amps,
    )


# ---------------------------------------------------------------------------
# Lindblad master equation

def integrate_master(
    p: PhysicalParams,
    ctrl: ControlSchedule,
    init: np.ndarray,
    n_max: int = 1,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    sample_dt: float = 0.02,
    frame_offset: float = 0.0,
    method: str = "RK45",
) -> Trajectory:
    """Integrate the Lindblad master equation on the truncated space.

    Dissipators: cavity loss at kappa, superradiant channel at
    gamma + gamma12, subradiant channel at gamma - gamma12.  The drive
    envelope is interpreted in the rotating frame set by ``frame_offset``
    (choose it equal to the drive carrier offset for a resonant pulse).
    Aborts on trace drift beyond 1e-6 and, for driven runs, when the top
    Fock level accumulates more than 1e-6 population.
    """
    ops = collective_operators(n_max)
    dim = ops["dim"]
    rho0 = np.asarray(init, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"density matrix shape {rho0.shape} != {(dim, dim)}")
    tr0 = np.trace(rho0).real
    if abs(tr0 - 1.0) > 1e-8:
        raise ValueError(f"initial trace = {tr0}, expected 1")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10:
        raise ValueError("initial density matrix is not Hermitian")

    a, ad = ops["a"], ops["ad"]
    s_s, s_a = ops["sigma_s"], ops["sigma_a"]
    lind = [
        (p.kappa, a, ad),
        (p.gamma_plus, s_s, s_s.conj().T),
        (p.gamma_minus, s_a, s_a.conj().T),
    ]
    lind = [(r, L, Ld) for (r, L, Ld) in lind if r > 0]

    # drift operator A = -i H0 - (1/2) sum r L^dag L; rho' = A rho + rho A^dag + jumps
    h_static = (
        p.omega12 * (ops["Ns"] - ops["Na"])
        + (p.omega_c - frame_offset) * ops["Nc"]
        + 1j * SQRT2 * p.g * (ad @ s_s - a @ s_s.conj().T)
    )
    h_delta = ops["Xas"] + ops["Xas"].conj().T
    h_shift = ops["Ns"] + ops["Na"]
    h_drive = -1j * (ad - a)
    a0 = -1j * h_static
    for r, L, Ld in lind:
        a0 = a0 - 0.5 * r * (Ld @ L)
    a_delta = -1j * h_delta
    a_shift = -1j * h_shift
    a_drive = -1j * h_drive

    jump = [(r, L, Ld) for (r, L, Ld) in lind]
    kap, gp, gm = p.kappa, p.gamma_plus, p.gamma_minus
    nc, ns, na = ops["Nc"], ops["Ns"], ops["Na"]

    d12_at = ctrl.delta12_at
    om0_at = ctrl.omega0_at
    drive_at = ctrl.drive_at
    has_drive = ctrl.has_drive
    n2 = dim * dim

    def rhs(t, y):
        rho = y[:n2].reshape(dim, dim)
        drift = a0 + d12_at(t) * a_delta + (om0_at(t) - frame_offset) * a_shift
        ep = drive_at(t) if has_drive else 0.0
        if ep != 0.0:
            drift = drift + ep * a_drive
        dr = drift @ rho
        dr += dr.conj().T
        for r, L, Ld in jump:
            dr += r * (L @ rho @ Ld)
        exp_nc = np.einsum("ij,ji->", nc, rho).real
        exp_ns = np.einsum("ij,ji->", ns, rho).real
        exp_na = np.einsum("ij,ji->", na, rho).real
        out = np.empty(n2 + 5, dtype=complex)
        out[:n2] = dr.ravel()
        out[n2] = kap * exp_nc
        out[n2 + 1] = gp * exp_ns
        out[n2 + 2] = gm * exp_na
        if has_drive:
            alpha2 = ep * ep / kap
            exp_a = np.einsum("ij,ji->", a, rho)
            out[n2 + 3] = alpha2
            out[n2 + 4] = alpha2 + 2.0 * ep * exp_a.real + kap * exp_nc
        else:
            out[n2 + 3] = 0.0
            out[n2 + 4] = 0.0
        return out

    y0 = np.zeros(n2 + 5, dtype=complex)
    y0[:n2] = rho0.ravel()
    n_samples = int(round(ctrl.t_end / sample_dt)) + 1
    ts = np.linspace(0.0, ctrl.t_end, n_samples)
    sol = solve_ivp(
        rhs,
        (0.0, ctrl.t_end),
        y0,
        method=method,
        t_eval=ts,
        rtol=rtol,
        atol=atol,
        max_step=_max_step_for(ctrl),
    )
    err = _solver_failed(sol)
    if err is not None:
        raise err

    rhos = sol.y[:n2].T.reshape(n_samples, dim, dim)
    trace = np.einsum("kii->k", rhos).real
    drift_tr = float(np.max(np.abs(trace - 1.0)))
    if drift_tr > 1e-6:
        raise IntegrationError(f"trace drifted by {drift_tr:.2e} (> 1e-6)")
    herm = float(np.max(np.abs(rhos - rhos.conj().transpose(0, 2, 1))))
    if herm > 1e-8:
        raise IntegrationError(f"hermiticity residual {herm:.2e} (> 1e-8)")
    if has_drive:
        top = np.einsum("kii->ki", rhos).real[:, ops["top_mask"]].sum(axis=1)
        worst = float(np.max(top))
        if worst > 1e-6:
            raise IntegrationError(
                f"top Fock level reached population {worst:.2e} (> 1e-6): "
                f"raise n_max above {n_max}"
            )

    herm_sym = 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))
    eigmin = np.array([np.linalg.eigvalsh(r)[0] for r in herm_sym])
    exp_na = np.einsum("ij,kji->k", na, rhos).real
    exp_ns = np.einsum("ij,kji->k", ns, rhos).real
    exp_nc = np.einsum("ij,kji->k", nc, rhos).real
    exp_x = np.einsum("ij,kji->k", ops["Xas"], rhos)
    exp_a = np.einsum("ij,kji->k", a, rhos)
    exp_sa = np.einsum("ij,kji->k", s_a, rhos)
    exp_ss = np.einsum("ij,kji->k", s_s, rhos)
    p_minus, p_plus = _eff_populations(ctrl, p, ts, exp_na, exp_ns, exp_x)
    return Trajectory(
        t=ts,
        pop_asym=exp_na,
        pop_sym=exp_ns,
        pop_cav=exp_nc,
        pop_minus_eff=p_minus,
        pop_plus_eff=p_plus,
        power=p.kappa * exp_nc,
        excitation=exp_na + exp_ns + exp_nc,
        flux_cav=sol.y[n2].real,
        flux_sym=sol.y[n2 + 1].real,
        flux_asym=sol.y[n2 + 2].real,
        rtol=rtol,
        error_estimate=100.0 * rtol + 10.0 * atol,
        nsteps=sol.nfev // 6,
        nfev=sol.nfev,
        frame_offset=frame_offset,
        mean_a=exp_a,
        mean_sa=exp_sa,
        mean_ss=exp_ss,
        trace=trace,
        herm_residual=herm,
        eigmin=eigmin,
        flux_in=sol.y[n2 + 3].real if has_drive else None,
        flux_out=sol.y[n2 + 4].real if has_drive else None,
    )


# ---------------------------------------------------------------------------
# adiabaticity

@dataclass(frozen=True)
class AdiabaticityReport:
    """Worst ratio |d(delta12)/dt| / omega12^2 over the schedule."""

    max_ratio: float
    time_of_max: float
    threshold: float
    passed: bool


def adiabaticity_check(
    ctrl: ControlSchedule,
    p: PhysicalParams,
    threshold: float = 0.1,
    *,
    oversample: int = 400,
) -> AdiabaticityReport:
    """Check the detuning slew rate against the eigenstate-following bound.

    The detuning channel's analytic derivative is scanned densely (step
    discontinuities count as infinite slope and fail at their location).
    """
    if p.omega12 <= 0:
        raise ValueError("adiabaticity check requires omega12 > 0")
    steps = ctrl.delta12.step_times
    if steps:
        return AdiabaticityReport(
            max_ratio=math.inf,
            time_of_max=steps[0],
            threshold=threshold,
            passed=False,
        )
    feature = ctrl.delta12.shortest_feature()
    if math.isfinite(feature):
        n = max(oversample, int(math.ceil(ctrl.t_end / feature * 40)))
    else:
        n = oversample
    ts = np.linspace(0.0, ctrl.t_end, n + 1)
    slopes = np.abs(ctrl.delta12.slopes(ts))
    idx = int(np.argmax(slopes))
    ratio = float(slopes[idx]) / (p.omega12 * p.omega12)
    return AdiabaticityReport(
        max_ratio=ratio,
        time_of_max=float(ts[idx]),
        threshold=threshold,
        passed=ratio <= threshold,
    )
