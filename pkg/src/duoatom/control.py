"""Time-dependent control schedules built from piecewise-smooth segments.

A :class:`Channel` is a baseline value plus an ordered list of level
changes (raised-cosine ramps or hard steps) and additive Gaussian pulses.
Values and derivatives are evaluated analytically; integrators never
interpolate a schedule.  A :class:`ControlSchedule` bundles the detuning,
mean-frequency, and drive channels over one simulation horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "Ramp",
    "Step",
    "GaussPulse",
    "Channel",
    "ControlSchedule",
    "gaussian_drive_envelope",
]

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
_GAUSS_LN = 4.0 * math.log(2.0)


@dataclass(frozen=True)
class Ramp:
    """Raised-cosine level change from the running level to ``to`` (rad/ns)."""

    start: float
    duration: float
    to: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"ramp duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class Step:
    """Discontinuous level change at ``at``; infinite slope by construction."""

    at: float
    to: float


@dataclass(frozen=True)
class GaussPulse:
    """Additive Gaussian bump of given peak height and intensity-style FWHM."""

    center: float
    fwhm: float
    peak: float

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ValueError(f"pulse FWHM must be positive, got {self.fwhm}")

    def value(self, t: float) -> float:
        x = (t - self.center) / self.fwhm
        return self.peak * math.exp(-_GAUSS_LN * x * x)

    def slope(self, t: float) -> float:
        x = t - self.center
        a = _GAUSS_LN / (self.fwhm * self.fwhm)
        return -2.0 * a * x * self.peak * math.exp(-a * x * x)

    def max_abs_slope(self) -> float:
        a = _GAUSS_LN / (self.fwhm * self.fwhm)
        return abs(self.peak) * math.sqrt(2.0 * a) * math.exp(-0.5)


@dataclass(frozen=True)
class Channel:
    """Baseline + sequential level changes + additive Gaussian pulses.

    Level changes (ramps/steps) must be time-ordered and non-overlapping;
    each one moves the held level to its ``to`` value.  Gaussians add on
    top and may overlap anything.
    """

    base: float = 0.0
    changes: tuple = ()
    pulses: tuple = ()

    def __post_init__(self):
        end = -math.inf
        for ch in self.changes:
            start = ch.start if isinstance(ch, Ramp) else ch.at
            if start < end - 1e-12:
                raise ValueError("level changes must be sorted and non-overlapping")
            end = start + ch.duration if isinstance(ch, Ramp) else start

    def _levels(self):
        """Held level before each change, in order."""
        level = self.base
        out = []
        for ch in self.changes:
            out.append(level)
            level = ch.to
        return out

    def value(self, t: float) -> float:
        v = self.base
        for ch, level in zip(self.changes, self._levels()):
            if isinstance(ch, Ramp):
                if t <= ch.start:
                    break
                if t >= ch.start + ch.duration:
                    v = ch.to
                else:
                    frac = 0.5 * (1.0 - math.cos(math.pi * (t - ch.start) / ch.duration))
                    v = level + (ch.to - level) * frac
                    break
            else:
                if t < ch.at:
                    break
                v = ch.to
        for p in self.pulses:
            v += p.value(t)
        return v

    def slope(self, t: float) -> float:
        """Analytic derivative; infinite exactly at step discontinuities."""
        s = 0.0
        for ch, level in zip(self.changes, self._levels()):
            if isinstance(ch, Ramp):
                if ch.start < t < ch.start + ch.duration:
                    s += (
                        (ch.to - level)
                        * 0.5
                        * math.pi
                        / ch.duration
                        * math.sin(math.pi * (t - ch.start) / ch.duration)
                    )
            else:
                if t == ch.at and ch.to != level:
                    return math.inf
        for p in self.pulses:
            s += p.slope(t)
        return s

    def values(self, ts) -> np.ndarray:
        return np.array([self.value(float(t)) for t in np.asarray(ts).ravel()])

    def slopes(self, ts) -> np.ndarray:
        return np.array([self.slope(float(t)) for t in np.asarray(ts).ravel()])

    @property
    def step_times(self) -> list[float]:
        out = []
        for ch, level in zip(self.changes, self._levels()):
            if isinstance(ch, Step) and ch.to != level:
                out.append(ch.at)
        return out

    @property
    def is_zero(self) -> bool:
        return (
            self.base == 0.0
            and not self.pulses
            and all(ch.to == 0.0 for ch in self.changes)
        )

    def final_value(self, t_end: float) -> float:
        return self.value(t_end)

    def shortest_feature(self) -> float:
        """Smallest segment timescale; inf for a constant channel."""
        scales = [math.inf]
        scales += [ch.duration for ch in self.changes if isinstance(ch, Ramp)]
        scales += [p.fwhm for p in self.pulses]
        return min(scales)

    def shifted(self, dt: float) -> "Channel":
        """Same channel delayed by ``dt``."""
        changes = tuple(
            replace(ch, start=ch.start + dt) if isinstance(ch, Ramp) else replace(ch, at=ch.at + dt)
            for ch in self.changes
        )
        pulses = tuple(replace(p, center=p.center + dt) for p in self.pulses)
        return Channel(base=self.base, changes=changes, pulses=pulses)


def gaussian_drive_envelope(
    kappa: float, n_mean: float, center: float, fwhm: float
) -> GaussPulse:
    """Cavity drive amplitude for a Gaussian input pulse.

    ``fwhm`` is the intensity FWHM (ns) and ``n_mean`` the pulse photon
    number; the returned envelope is E_p(t) = sqrt(kappa) * alpha_in(t)
    with the input field amplitude normalized so the photon-flux integral
    equals ``n_mean`` (single-sided cavity: the full kappa is the port).
    """
    if n_mean < 0:
        raise ValueError(f"mean photon number must be >= 0, got {n_mean}")
    # |alpha_in(t)|^2 = n_mean * sqrt(4 ln2 / (pi fwhm^2)) * exp(-4 ln2 (t/fwhm)^2)
    peak_alpha2 = n_mean * math.sqrt(_GAUSS_LN / (math.pi * fwhm * fwhm))
    peak = math.sqrt(kappa * peak_alpha2)
    # field envelope falls at half the intensity exponent -> FWHM * sqrt(2)
    return GaussPulse(center=center, fwhm=fwhm * math.sqrt(2.0), peak=peak)


@dataclass(frozen=True)
class ControlSchedule:
    """Detuning, mean-frequency shift, and drive envelope over [0, t_end].

    All channel values are angular frequencies in rad/ns, times in ns.
    ``omega0`` holds the shift of the mean emitter frequency from its
    reference; with ``omega0_lock`` set, the locking term
    ``sqrt(delta12(t)^2 + omega12^2) - omega12`` is added on top so the
    lower eigenstate stays at a fixed emission frequency while the
    detuning moves.
    """

    t_end: float
    delta12: Channel = field(default_factory=Channel)
    omega0: Channel = field(default_factory=Channel)
    drive: Channel = field(default_factory=Channel)
    omega0_lock: bool = False
    omega12: float = 0.0

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.omega0_lock and self.omega12 <= 0:
            raise ValueError("omega0_lock requires the omega12 used for locking")

    def delta12_at(self, t: float) -> float:
        return self.delta12.value(t)

    def omega0_at(self, t: float) -> float:
        v = self.omega0.value(t)
        if self.omega0_lock:
            v += math.hypot(self.delta12.value(t), self.omega12) - self.omega12
        return v

    def drive_at(self, t: float) -> float:
        return self.drive.value(t)

    @property
    def has_drive(self) -> bool:
        return not self.drive.is_zero

    def shortest_feature(self) -> float:
        return min(
            self.delta12.shortest_feature(),
            self.omega0.shortest_feature(),
            self.drive.shortest_feature(),
        )

    def shifted(self, dt: float) -> "ControlSchedule":
        return ControlSchedule(
            t_end=self.t_end + dt,
            delta12=self.delta12.shifted(dt),
            omega0=self.omega0.shifted(dt),
            drive=self.drive.shifted(dt),
            omega0_lock=self.omega0_lock,
            omega12=self.omega12,
        )

    def describe(self) -> dict:
        """Canonical serializable description (used for checksums/manifests)."""

        def seg(ch):
            if isinstance(ch, Ramp):
                return {"type": "ramp", "start": ch.start, "duration": ch.duration, "to": ch.to}
            return {"type": "step", "at": ch.at, "to": ch.to}

        def chan(c):
            return {
                "base": c.base,
                "changes": [seg(ch) for ch in c.changes],
                "pulses": [
                    {"type": "gauss", "center": p.center, "fwhm": p.fwhm, "peak": p.peak}
                    for p in c.pulses
                ],
            }

        return {
            "t_end": self.t_end,
            "delta12": chan(self.delta12),
            "omega0": chan(self.omega0),
            "drive": chan(self.drive),
            "omega0_lock": self.omega0_lock,
            "omega12": self.omega12,
        }
