"""Figure rendering for CLI output bundles.

Every report panel is rendered next to its CSV payload as a PNG; figures
are a convenience view and are not part of the determinism contract (the
CSV files are).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .params import angular_to_energy

__all__ = [
    "render_eigen_scan",
    "render_emission",
    "render_wigner",
    "render_spectrum",
    "render_memory",
    "render_scan",
]

_DPI = 150


def _save(fig, path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return Path(path)


def render_eigen_scan(rows, path) -> Path:
    x = [r.delta12_over_kappa for r in rows]
    beta = [r.beta for r in rows]
    gg0 = [r.Gamma_over_Gamma0 for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(x, beta, "C0-")
    ax1.set_xlabel(r"$\Delta_{12}/\kappa$")
    ax1.set_ylabel(r"mode coupling $\beta$")
    ax1.set_ylim(0, 1)
    ax1.grid(alpha=0.3)
    ax2.plot(x, gg0, "C1-")
    ax2.set_xlabel(r"$\Delta_{12}/\kappa$")
    ax2.set_ylabel(r"$\Gamma_{-,\mathrm{eff}}/\Gamma_0$")
    ax2.grid(alpha=0.3)
    return _save(fig, path)


def render_emission(bundle, path) -> Path:
    traj = bundle.trajectory
    sched = bundle.scenario.schedule
    d12 = np.array([angular_to_energy(sched.delta12_at(t)) for t in traj.t])
    om0 = np.array([angular_to_energy(sched.omega0_at(t)) for t in traj.t])
    fig, axes = plt.subplots(3, 1, figsize=(7, 7), sharex=True)
    axes[0].plot(traj.t, d12, "C2-", label=r"$\Delta_{12}(t)$")
    axes[0].plot(traj.t, om0, "C3--", label=r"$\omega_0(t)-\omega_0^{ref}$")
    axes[0].set_ylabel("control (ueV)")
    axes[0].legend(fontsize="small")
    axes[0].grid(alpha=0.3)
    axes[1].plot(traj.t, traj.pop_minus_eff, "C0-", label="lower eigenstate")
    axes[1].plot(traj.t, traj.pop_plus_eff, "C1-", label="upper eigenstate")
    axes[1].plot(traj.t, traj.pop_cav, "C4-", label="cavity")
    axes[1].set_ylabel("population")
    axes[1].legend(fontsize="small")
    axes[1].grid(alpha=0.3)
    axes[2].plot(traj.t, traj.power, "k-")
    axes[2].set_ylabel(r"$\kappa\langle a^\dagger a\rangle$ (1/ns)")
    axes[2].set_xlabel("t (ns)")
    axes[2].grid(alpha=0.3)
    return _save(fig, path)


def render_spectrum(spectrum, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(spectrum.omega, spectrum.values, "C0-")
    ax.set_xlabel(r"$\omega-\omega_0^{ref}$ (rad/ns)")
    ax.set_ylabel(r"$S(\omega)$ (quanta per rad/ns)")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_wigner(wmap, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    scale = float(np.max(np.abs(wmap.values))) or 1.0
    mesh = ax.pcolormesh(
        wmap.t,
        wmap.omega,
        wmap.values.T,
        cmap="RdBu_r",
        vmin=-scale,
        vmax=scale,
        shading="auto",
        rasterized=True,
    )
    fig.colorbar(mesh, ax=ax, label=r"$W(t,\omega)$")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"$\omega-\omega_0^{ref}$ (rad/ns)")
    return _save(fig, path)


def render_memory(result, path) -> Path:
    traj = result.trajectory
    m = result.scenario
    sched = m.build_schedule()
    d12 = np.array([angular_to_energy(sched.delta12_at(t)) for t in traj.t])
    drive = np.array([sched.drive_at(t) for t in traj.t])
    norm_pop = traj.atomic_population / max(m.n_mean, 1e-30)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.8))
    for ax, tmax in ((ax1, traj.t[-1]), (ax2, min(6.0, traj.t[-1]))):
        sel = traj.t <= tmax
        ax.plot(traj.t[sel], norm_pop[sel], "C0-", label="atomic population / <n>")
        axd = ax.twinx()
        axd.plot(traj.t[sel], d12[sel], "C2--", label=r"$\Delta_{12}$ (ueV)")
        dmax = float(np.max(drive))
        if dmax > 0:
            axd.plot(
                traj.t[sel],
                drive[sel] / dmax * np.max(d12),
                "k:",
                alpha=0.6,
                label="input envelope",
            )
        ax.set_xlabel("t (ns)")
        ax.set_ylabel("normalized population")
        axd.set_ylabel(r"$\Delta_{12}$ (ueV)")
        ax.grid(alpha=0.3)
    ax1.set_title(f"storage efficiency = {result.efficiency:.3f}")
    return _save(fig, path)


def render_scan(x, eta, xlabel, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(x, eta, "C0o-")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("storage efficiency")
    ax.grid(alpha=0.3)
    return _save(fig, path)
