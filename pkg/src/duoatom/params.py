"""Static physical parameters, unit conversions, and dipole-derived rates.

Internal unit convention used everywhere in this package: angular
frequencies and rates in rad/ns, times in ns.  Configuration crosses the
boundary in ueV (energies) and ps/ns (times); :func:`energy_to_angular`
is the single bridge between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Reduced Planck constant in ueV*ns.  Dividing an energy in ueV by this
# value yields an angular frequency in rad/ns, exactly invertible.
HBAR_UEV_NS: float = 0.6582119569

SQRT2 = math.sqrt(2.0)

__all__ = [
    "HBAR_UEV_NS",
    "PhysicalParams",
    "DipoleGeometry",
    "energy_to_angular",
    "angular_to_energy",
    "dipole_rates",
    "purcell_factor",
]


def energy_to_angular(value_uev: float) -> float:
    """Convert an energy in ueV to an angular frequency in rad/ns."""
    if not math.isfinite(value_uev):
        raise ValueError(f"energy must be finite, got {value_uev!r}")
    return value_uev / HBAR_UEV_NS


def angular_to_energy(value_rad_ns: float) -> float:
    """Convert an angular frequency in rad/ns back to an energy in ueV."""
    if not math.isfinite(value_rad_ns):
        raise ValueError(f"angular frequency must be finite, got {value_rad_ns!r}")
    return value_rad_ns * HBAR_UEV_NS


@dataclass(frozen=True)
class DipoleGeometry:
    """Geometry of the two parallel emitter dipoles inside the host medium.

    d: inter-emitter distance in nm.
    wavelength: free-space emission wavelength in nm.
    refractive_index: host refractive index (dimensionless).
    """

    d: float
    wavelength: float = 925.0
    refractive_index: float = 3.46

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError(f"emitter separation must be positive, got {self.d}")
        if self.wavelength <= 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if self.refractive_index < 1:
            raise ValueError(
                f"refractive index must be >= 1, got {self.refractive_index}"
            )
        if self.kd >= 1.0:
            raise ValueError(
                f"kd = {self.kd:.4f} >= 1: near-field dipole-dipole expressions "
                "do not apply at this separation"
            )

    @property
    def kd(self) -> float:
        """Dimensionless product of medium wavevector and separation."""
        return 2.0 * math.pi * self.refractive_index * self.d / self.wavelength


def dipole_rates(geom: DipoleGeometry, gamma: float) -> tuple[float, float]:
    """Near-field coherent coupling and cross-damping for two parallel dipoles.

    Returns ``(omega12, gamma12)`` in the same units as ``gamma``:
    ``omega12 = gamma * 3 / (4 (kd)^3)`` and
    ``gamma12 = gamma * (1 - (kd)^2 / 5)``.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    kd = geom.kd
    if kd >= 1.0:
        raise ValueError(f"kd = {kd:.4f} >= 1: near-field expressions invalid")
    omega12 = gamma * 3.0 / (4.0 * kd**3)
    gamma12 = gamma * (1.0 - kd * kd / 5.0)
    return omega12, gamma12


@dataclass(frozen=True)
class PhysicalParams:
    """Static rates and frequencies of the two-emitter + cavity system.

    All fields are angular frequencies in rad/ns.  ``omega_c`` is stored as
    an offset from ``omega0_ref``; ``omega0_ref`` itself is the rotating-frame
    zero and every other frequency in the package is quoted relative to it.
    """

    g: float
    kappa: float
    gamma: float
    gamma12: float
    omega12: float
    omega_c: float
    omega0_ref: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "gamma12", "omega12"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        if not math.isfinite(self.omega_c):
            raise ValueError(f"omega_c must be finite, got {self.omega_c!r}")
        if self.gamma12 > self.gamma * (1.0 + 1e-12):
            raise ValueError(
                f"gamma12 = {self.gamma12} exceeds gamma = {self.gamma}: "
                "cross-damping cannot exceed the single-emitter rate"
            )

    @property
    def gamma_plus(self) -> float:
        """Superradiant damping rate gamma + gamma12."""
        return self.gamma + self.gamma12

    @property
    def gamma_minus(self) -> float:
        """Subradiant damping rate gamma - gamma12 (clipped at 0)."""
        return max(self.gamma - self.gamma12, 0.0)

    @classmethod
    def from_uev(
        cls,
        g_uev: float,
        kappa_uev: float,
        gamma_uev: float,
        omega_c_offset_uev: float,
        *,
        omega12_uev: float | None = None,
        gamma12_over_gamma: float | None = None,
        geometry: DipoleGeometry | None = None,
    ) -> "PhysicalParams":
        """Build params from boundary units (ueV).

        The dipole-derived pair (omega12, gamma12) is taken either directly
        from ``omega12_uev`` / ``gamma12_over_gamma`` or computed from
        ``geometry``; supplying both or neither is rejected.
        """
        direct = omega12_uev is not None or gamma12_over_gamma is not None
        if direct and geometry is not None:
            raise ValueError(
                "give either (omega12_uev, gamma12_over_gamma) or a geometry, not both"
            )
        if direct:
            if omega12_uev is None or gamma12_over_gamma is None:
                raise ValueError(
                    "omega12_uev and gamma12_over_gamma must be supplied together"
                )
            omega12 = energy_to_angular(omega12_uev)
            gamma12 = gamma12_over_gamma * energy_to_angular(gamma_uev)
        elif geometry is not None:
            om12_uev, g12_uev = dipole_rates(geometry, gamma_uev)
            omega12 = energy_to_angular(om12_uev)
            gamma12 = energy_to_angular(g12_uev)
        else:
            raise ValueError(
                "dipole rates unspecified: need omega12/gamma12 or a geometry"
            )
        return cls(
            g=energy_to_angular(g_uev),
            kappa=energy_to_angular(kappa_uev),
            gamma=energy_to_angular(gamma_uev),
            gamma12=gamma12,
            omega12=omega12,
            omega_c=energy_to_angular(omega_c_offset_uev),
        )


def purcell_factor(p: PhysicalParams) -> float:
    """Cavity-enhancement figure of merit 4 g^2 / (kappa gamma)."""
    if p.kappa <= 0 or p.gamma <= 0:
        raise ValueError("purcell factor requires kappa > 0 and gamma > 0")
    return 4.0 * p.g * p.g / (p.kappa * p.gamma)
