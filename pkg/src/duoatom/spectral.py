"""Closed-form spectral layer: hybridized eigenstates and emission rates.

At a static inter-emitter detuning, the single-excitation eigenstates are
superpositions of the bare subradiant/superradiant states with weights
(nu, mu); the cavity-routed and leaky emission rates of the lower
("effective antisymmetric") eigenstate follow golden-rule expressions in
the bad-cavity regime.  Everything here is a pure function of
:class:`~duoatom.params.PhysicalParams` and the detuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import PhysicalParams

__all__ = [
    "HybridEigenstates",
    "EffectiveRates",
    "SpectralScanRow",
    "mu_nu",
    "hybrid_eigenstates",
    "effective_rates",
    "spectral_scan",
]


def mu_nu(delta):
    """Mixing weights of the hybridized eigenstates at reduced detuning delta.

    ``mu`` is the symmetric admixture of the lower eigenstate (odd in
    delta, ->  +-1/sqrt(2) as delta -> +-inf), ``nu`` the antisymmetric one
    (even, nu >= 1/sqrt(2)).  Accepts scalars or arrays.
    """
    d = np.asarray(delta, dtype=float)
    root = np.sqrt(1.0 + d * d)
    denom = np.sqrt(d * d + (1.0 + root) ** 2)
    mu = d / denom
    nu = (1.0 + root) / denom
    if np.ndim(delta) == 0:
        return float(mu), float(nu)
    return mu, nu


@dataclass(frozen=True)
class HybridEigenstates:
    """Eigenstate weights and eigenfrequencies at a static detuning.

    Eigenfrequencies are relative to the mean emitter frequency (rad/ns):
    the lower state sits at ``-sqrt(delta12^2 + omega12^2)``.
    """

    mu: float
    nu: float
    delta: float
    omega_minus_eff: float
    omega_plus_eff: float


def hybrid_eigenstates(p: PhysicalParams, delta12: float) -> HybridEigenstates:
    """Diagonalize the static 2x2 atomic block at detuning ``delta12`` (rad/ns)."""
    if p.omega12 <= 0:
        raise ValueError("hybrid eigenstates require omega12 > 0")
    delta = delta12 / p.omega12
    mu, nu = mu_nu(delta)
    split = math.hypot(delta12, p.omega12)
    return HybridEigenstates(
        mu=mu, nu=nu, delta=delta, omega_minus_eff=-split, omega_plus_eff=split
    )


@dataclass(frozen=True)
class EffectiveRates:
    """Emission rates of the lower eigenstate and its mode coupling.

    ``dark`` marks the exactly decoupled point (zero symmetric admixture)
    where the cavity/leaky ratio is indeterminate; ``beta`` is then
    reported as 0 by convention.
    """

    Gamma_minus_eff: float
    gamma_minus_eff: float
    beta: float
    Delta_c: float
    Gamma0: float
    dark: bool


def effective_rates(p: PhysicalParams, delta12: float) -> EffectiveRates:
    """Golden-rule cavity rate, leaky rate, and mode coupling at ``delta12``.

    The cavity rate is ``(8 mu^2 g^2 / kappa) / (1 + (2 Delta_c / kappa)^2)``
    with ``Delta_c`` the detuning of the lower eigenstate from the cavity;
    the leaky rate uses the exact superradiant damping ``gamma + gamma12``
    rather than its 2*gamma approximation.
    """
    if p.kappa <= 0:
        raise ValueError("effective rates require kappa > 0")
    eig = hybrid_eigenstates(p, delta12)
    delta_c = eig.omega_minus_eff - p.omega_c
    gamma0 = 4.0 * p.g * p.g / p.kappa
    lorentz = 1.0 / (1.0 + (2.0 * delta_c / p.kappa) ** 2)
    mu2 = eig.mu * eig.mu
    big_gamma = 2.0 * mu2 * gamma0 * lorentz
    small_gamma = mu2 * p.gamma_plus
    dark = big_gamma + small_gamma == 0.0
    beta = 0.0 if dark else big_gamma / (big_gamma + small_gamma)
    return EffectiveRates(
        Gamma_minus_eff=big_gamma,
        gamma_minus_eff=small_gamma,
        beta=beta,
        Delta_c=delta_c,
        Gamma0=gamma0,
        dark=dark,
    )


def total_linewidth(p: PhysicalParams, delta12: float) -> float:
    """Total decay rate (rad/ns) of the lower eigenstate: cavity + leaky."""
    r = effective_rates(p, delta12)
    return r.Gamma_minus_eff + r.gamma_minus_eff


@dataclass(frozen=True)
class SpectralScanRow:
    delta12_over_kappa: float
    mu: float
    nu: float
    Gamma_over_Gamma0: float
    beta: float
    dark: bool


def spectral_scan(p: PhysicalParams, delta12_grid) -> list[SpectralScanRow]:
    """Evaluate :func:`effective_rates` on a sorted, non-negative detuning grid."""
    grid = np.asarray(delta12_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("detuning grid must be a non-empty 1-d sequence")
    if np.any(grid < 0):
        raise ValueError("detuning grid must be non-negative")
    if np.any(np.diff(grid) < 0):
        raise ValueError("detuning grid must be sorted ascending")
    rows = []
    for d12 in grid:
        eig = hybrid_eigenstates(p, float(d12))
        rates = effective_rates(p, float(d12))
        rows.append(
            SpectralScanRow(
                delta12_over_kappa=float(d12) / p.kappa,
                mu=eig.mu,
                nu=eig.nu,
                Gamma_over_Gamma0=rates.Gamma_minus_eff / rates.Gamma0,
                beta=rates.beta,
                dark=rates.dark,
            )
        )
    return rows
