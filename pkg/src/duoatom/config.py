"""Configuration parsing: scenario files to fully resolved run objects.

The format is a small INI dialect parsed by hand so every validation
error can point at a file line.  Energies enter in ueV, times in ps or
ns; everything is converted to the internal rad/ns + ns units here, at
the boundary.  Built-in scenario files ship with the package and can be
shadowed by files of the same name in ``$DUOATOM_SCENARIO_PATH``.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .control import Channel, ControlSchedule, GaussPulse, Ramp, Step
from .errors import ConfigError
from .params import DipoleGeometry, PhysicalParams, energy_to_angular
from .protocols import EmissionScenario, MemoryScenario

__all__ = ["ResolvedConfig", "parse_config", "load_scenario", "builtin_scenarios"]

_SECTION_RE = re.compile(r"^\[([A-Za-z0-9_][A-Za-z0-9_.\-]*)\]$")
_KEY_RE = re.compile(r"^([A-Za-z0-9_]+)\s*=\s*(.*)$")

_PHYSICS_KEYS = {
    "g_ueV",
    "kappa_ueV",
    "gamma_ueV",
    "omega_c_offset_ueV",
    "omega12_ueV",
    "gamma12_over_gamma",
    "d_nm",
    "lambda_nm",
    "n_index",
}
_REQUIRED_PHYSICS = (
    "g_ueV, kappa_ueV, gamma_ueV, omega_c_offset_ueV, and either "
    "(omega12_ueV, gamma12_over_gamma) or (d_nm, lambda_nm, n_index)"
)
_INTEGRATOR_KEYS = {"rtol", "n_max", "sample_dt_ps"}
_EMISSION_KEYS = {
    "t_end_ns",
    "initial_state",
    "outputs",
    "omega0_lock",
    "equalize_pulses",
    "allow_nonadiabatic",
}
_MEMORY_KEYS = {
    "pulse_center_ns",
    "pulse_fwhm_ps",
    "n_mean",
    "absorb_delta12_ueV",
    "store_duration_ps",
    "gate_offset_ps",
    "release_time_ns",
    "release_delta12_ueV",
    "release_ramp_ps",
    "t_end_ns",
    "carrier_offset_ueV",
    "n_max",
}
_WIGNER_KEYS = {"omega_center_ueV", "omega_span_ueV", "n_omega"}
_EIGENSCAN_KEYS = {"max_delta12_over_kappa", "n_points"}
_RUN_KEYS = {"omega_c_offset_ueV", "allow_nonadiabatic", "t_end_ns", "sample_dt_ps"}
_SEG_KEYS = {
    "const": {"type", "value_ueV"},
    "ramp": {"type", "start_ps", "duration_ps", "to_ueV"},
    "gauss": {"type", "center_ps", "fwhm_ps", "peak_ueV"},
    "step": {"type", "at_ps", "to_ueV"},
}
_CHANNELS = ("delta12", "omega0")


@dataclass
class _Entry:
    value: str
    line: int


@dataclass
class _RawConfig:
    path: str
    text: str
    sections: dict  # name -> {key -> _Entry}
    section_lines: dict  # name -> line


def _scan(path: str, text: str) -> _RawConfig:
    sections: dict = {}
    section_lines: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", path, lineno)
            sections[name] = {}
            section_lines[name] = lineno
            current = name
            continue
        m = _KEY_RE.match(line)
        if not m:
            raise ConfigError(f"cannot parse line: {raw.strip()!r}", path, lineno)
        if current is None:
            raise ConfigError("key outside any [section]", path, lineno)
        key, value = m.group(1), m.group(2).strip()
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", path, lineno)
        sections[current][key] = _Entry(value=value, line=lineno)
    return _RawConfig(path=path, text=text, sections=sections, section_lines=section_lines)


def _as_float(raw: _RawConfig, section: str, key: str) -> float:
    entry = raw.sections[section][key]
    try:
        return float(entry.value)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} = {entry.value!r} is not a number", raw.path, entry.line
        ) from None


def _as_int(raw: _RawConfig, section: str, key: str) -> int:
    entry = raw.sections[section][key]
    try:
        return int(entry.value)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} = {entry.value!r} is not an integer", raw.path, entry.line
        ) from None


def _as_bool(raw: _RawConfig, section: str, key: str) -> bool:
    entry = raw.sections[section][key]
    low = entry.value.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(
        f"[{section}] {key} = {entry.value!r} is not a boolean", raw.path, entry.line
    )


def _check_keys(raw: _RawConfig, section: str, allowed: set):
    for key, entry in raw.sections[section].items():
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in [{section}] "
                f"(allowed: {', '.join(sorted(allowed))})",
                raw.path,
                entry.line,
            )


def _resolve_physics(raw: _RawConfig):
    if "physics" not in raw.sections:
        raise ConfigError(
            f"missing required section [physics]; required keys: {_REQUIRED_PHYSICS}",
            raw.path,
        )
    _check_keys(raw, "physics", _PHYSICS_KEYS)
    sec = raw.sections["physics"]
    for key in ("g_ueV", "kappa_ueV", "gamma_ueV", "omega_c_offset_ueV"):
        if key not in sec:
            raise ConfigError(
                f"[physics] is missing {key!r}; required keys: {_REQUIRED_PHYSICS}",
                raw.path,
                raw.section_lines["physics"],
            )
    g = _as_float(raw, "physics", "g_ueV")
    kappa = _as_float(raw, "physics", "kappa_ueV")
    gamma = _as_float(raw, "physics", "gamma_ueV")

    direct = {"omega12_ueV", "gamma12_over_gamma"} & set(sec)
    geo = {"d_nm", "lambda_nm", "n_index"} & set(sec)
    if direct and geo:
        raise ConfigError(
            "[physics] mixes direct (omega12_ueV, gamma12_over_gamma) and geometric "
            "(d_nm, lambda_nm, n_index) dipole specifications",
            raw.path,
            raw.section_lines["physics"],
        )
    if direct:
        if direct != {"omega12_ueV", "gamma12_over_gamma"}:
            raise ConfigError(
                "[physics] needs both omega12_ueV and gamma12_over_gamma",
                raw.path,
                raw.section_lines["physics"],
            )
        ratio = _as_float(raw, "physics", "gamma12_over_gamma")
        if not 0.0 <= ratio <= 1.0:
            entry = sec["gamma12_over_gamma"]
            raise ConfigError(
                f"gamma12_over_gamma = {ratio} outside [0, 1]: cross-damping "
                "cannot exceed the single-emitter rate",
                raw.path,
                entry.line,
            )
        make = dict(
            omega12_uev=_as_float(raw, "physics", "omega12_ueV"),
            gamma12_over_gamma=ratio,
        )
    elif geo:
        if "d_nm" not in sec:
            raise ConfigError("[physics] geometric form needs d_nm", raw.path)
        geometry = DipoleGeometry(
            d=_as_float(raw, "physics", "d_nm"),
            wavelength=_as_float(raw, "physics", "lambda_nm") if "lambda_nm" in sec else 925.0,
            refractive_index=_as_float(raw, "physics", "n_index") if "n_index" in sec else 3.46,
        )
        make = dict(geometry=geometry)
    else:
        raise ConfigError(
            f"[physics] must specify the dipole pair; required keys: {_REQUIRED_PHYSICS}",
            raw.path,
            raw.section_lines["physics"],
        )

    omega_c_entry = sec["omega_c_offset_ueV"]
    omega_c_spec = omega_c_entry.value
    if omega_c_spec not in ("lock_dark", "lock_final"):
        try:
            float(omega_c_spec)
        except ValueError:
            raise ConfigError(
                f"omega_c_offset_ueV = {omega_c_spec!r} is neither a number nor "
                "lock_dark / lock_final",
                raw.path,
                omega_c_entry.line,
            ) from None

    def build(omega_c_offset_uev: float) -> PhysicalParams:
        try:
            return PhysicalParams.from_uev(
                g, kappa, gamma, omega_c_offset_uev, **make
            )
        except ValueError as exc:
            raise ConfigError(str(exc), raw.path, raw.section_lines["physics"]) from None

    return build, omega_c_spec


def _channel_sections(raw: _RawConfig, prefix: str):
    """Segment sections grouped per channel, in file order."""
    found: dict = {ch: [] for ch in _CHANNELS}
    for name in raw.sections:
        if not name.startswith(prefix + "."):
            continue
        rest = name[len(prefix) + 1 :]
        parts = rest.split(".")
        if len(parts) != 2 or parts[0] not in _CHANNELS:
            raise ConfigError(
                f"bad schedule section [{name}]: expected "
                f"[{prefix}.<delta12|omega0>.<label>]",
                raw.path,
                raw.section_lines[name],
            )
        found[parts[0]].append(name)
    for ch in found:
        found[ch].sort(key=lambda n: raw.section_lines[n])
    return found


def _build_channel(raw: _RawConfig, names: list) -> Channel:
    base = 0.0
    changes = []
    pulses = []
    for name in names:
        sec = raw.sections[name]
        if "type" not in sec:
            raise ConfigError(f"[{name}] is missing 'type'", raw.path, raw.section_lines[name])
        kind = sec["type"].value
        if kind not in _SEG_KEYS:
            raise ConfigError(
                f"[{name}] unknown segment type {kind!r} "
                f"(const, ramp, gauss, step)",
                raw.path,
                sec["type"].line,
            )
        _check_keys(raw, name, _SEG_KEYS[kind])
        missing = _SEG_KEYS[kind] - {"type"} - set(sec)
        if missing:
            raise ConfigError(
                f"[{name}] missing keys: {', '.join(sorted(missing))}",
                raw.path,
                raw.section_lines[name],
            )
        if kind == "const":
            base = energy_to_angular(_as_float(raw, name, "value_ueV"))
        elif kind == "ramp":
            changes.append(
                Ramp(
                    start=_as_float(raw, name, "start_ps") / 1e3,
                    duration=_as_float(raw, name, "duration_ps") / 1e3,
                    to=energy_to_angular(_as_float(raw, name, "to_ueV")),
                )
            )
        elif kind == "gauss":
            pulses.append(
                GaussPulse(
                    center=_as_float(raw, name, "center_ps") / 1e3,
                    fwhm=_as_float(raw, name, "fwhm_ps") / 1e3,
                    peak=energy_to_angular(_as_float(raw, name, "peak_ueV")),
                )
            )
        else:
            changes.append(
                Step(
                    at=_as_float(raw, name, "at_ps") / 1e3,
                    to=energy_to_angular(_as_float(raw, name, "to_ueV")),
                )
            )
    changes.sort(key=lambda c: c.start if isinstance(c, Ramp) else c.at)
    try:
        return Channel(base=base, changes=tuple(changes), pulses=tuple(pulses))
    except ValueError as exc:
        raise ConfigError(str(exc), raw.path) from None


@dataclass
class IntegratorSettings:
    rtol: float = 1e-9
    n_max: int = 1
    sample_dt: float = 0.01


@dataclass
class ResolvedConfig:
    """Fully unit-converted configuration ready to run."""

    kind: str  # "emit" | "store"
    source: str
    text: str
    integrator: IntegratorSettings
    emission_runs: list = field(default_factory=list)
    equalize_pulses: bool = False
    memory: MemoryScenario | None = None
    params_for_scan: PhysicalParams | None = None
    eigenscan_max_over_kappa: float = 0.25
    eigenscan_points: int = 101
    omega_grid: np.ndarray | None = None


def parse_config(path_or_text, name: str = "<config>") -> ResolvedConfig:
    """Parse and validate a scenario file into resolved run objects."""
    if isinstance(path_or_text, (str, Path)) and os.path.exists(str(path_or_text)):
        path = str(path_or_text)
        text = Path(path).read_text(encoding="utf-8")
    else:
        path = name
        text = str(path_or_text)
    raw = _scan(path, text)
    if not raw.sections:
        raise ConfigError(
            f"empty configuration; required keys: {_REQUIRED_PHYSICS}", path
        )

    known_tops = {"physics", "integrator", "emission", "memory", "wigner", "eigenscan"}
    for name_ in raw.sections:
        top = name_.split(".")[0]
        if top not in known_tops and top not in ("schedule", "run"):
            raise ConfigError(
                f"unknown section [{name_}]", raw.path, raw.section_lines[name_]
            )

    build_params, omega_c_spec = _resolve_physics(raw)

    integ = IntegratorSettings()
    if "integrator" in raw.sections:
        _check_keys(raw, "integrator", _INTEGRATOR_KEYS)
        sec = raw.sections["integrator"]
        if "rtol" in sec:
            integ.rtol = _as_float(raw, "integrator", "rtol")
        if "n_max" in sec:
            integ.n_max = _as_int(raw, "integrator", "n_max")
        if "sample_dt_ps" in sec:
            integ.sample_dt = _as_float(raw, "integrator", "sample_dt_ps") / 1e3

    cfg = ResolvedConfig(kind="none", source=path, text=text, integrator=integ)

    if "eigenscan" in raw.sections:
        _check_keys(raw, "eigenscan", _EIGENSCAN_KEYS)
        if "max_delta12_over_kappa" in raw.sections["eigenscan"]:
            cfg.eigenscan_max_over_kappa = _as_float(
                raw, "eigenscan", "max_delta12_over_kappa"
            )
        if "n_points" in raw.sections["eigenscan"]:
            cfg.eigenscan_points = _as_int(raw, "eigenscan", "n_points")

    has_emit = "emission" in raw.sections
    has_mem = "memory" in raw.sections
    if has_emit and has_mem:
        raise ConfigError(
            "config defines both [emission] and [memory]; pick one scenario kind",
            raw.path,
        )

    # params for eigen-scan: lock keywords resolve against the dark state
    base_omega_c = (
        float(omega_c_spec)
        if omega_c_spec not in ("lock_dark", "lock_final")
        else None
    )
    probe = build_params(base_omega_c if base_omega_c is not None else 0.0)
    if base_omega_c is None:
        from .params import angular_to_energy

        probe = build_params(-angular_to_energy(probe.omega12))
    cfg.params_for_scan = probe

    if has_mem:
        cfg.kind = "store"
        _check_keys(raw, "memory", _MEMORY_KEYS)
        sec = raw.sections["memory"]
        needed = {"pulse_fwhm_ps", "n_mean", "absorb_delta12_ueV"}
        missing = needed - set(sec)
        if missing:
            raise ConfigError(
                f"[memory] missing keys: {', '.join(sorted(missing))}",
                raw.path,
                raw.section_lines["memory"],
            )
        params = _run_params(raw, build_params, omega_c_spec, None, probe)
        carrier = None
        if "carrier_offset_ueV" in sec and sec["carrier_offset_ueV"].value != "auto":
            carrier = energy_to_angular(_as_float(raw, "memory", "carrier_offset_ueV"))
        cfg.memory = MemoryScenario(
            params=params,
            absorb_delta12=energy_to_angular(_as_float(raw, "memory", "absorb_delta12_ueV")),
            pulse_fwhm=_as_float(raw, "memory", "pulse_fwhm_ps") / 1e3,
            n_mean=_as_float(raw, "memory", "n_mean"),
            pulse_center=_as_float(raw, "memory", "pulse_center_ns")
            if "pulse_center_ns" in sec
            else 2.0,
            store_duration=_as_float(raw, "memory", "store_duration_ps") / 1e3
            if "store_duration_ps" in sec
            else None,
            gate_offset=_as_float(raw, "memory", "gate_offset_ps") / 1e3
            if "gate_offset_ps" in sec
            else 0.0,
            release_time=_as_float(raw, "memory", "release_time_ns")
            if "release_time_ns" in sec
            else 35.0,
            release_delta12=energy_to_angular(
                _as_float(raw, "memory", "release_delta12_ueV")
            )
            if "release_delta12_ueV" in sec
            else None,
            release_ramp=_as_float(raw, "memory", "release_ramp_ps") / 1e3
            if "release_ramp_ps" in sec
            else 0.56,
            t_end=_as_float(raw, "memory", "t_end_ns") if "t_end_ns" in sec else 45.0,
            n_max=_as_int(raw, "memory", "n_max") if "n_max" in sec else integ.n_max,
            rtol=integ.rtol,
            sample_dt=integ.sample_dt,
            carrier_offset=carrier,
        )
        return cfg

    if has_emit:
        cfg.kind = "emit"
        _check_keys(raw, "emission", _EMISSION_KEYS)
        sec = raw.sections["emission"]
        if "t_end_ns" not in sec:
            raise ConfigError(
                "[emission] is missing t_end_ns", raw.path, raw.section_lines["emission"]
            )
        t_end = _as_float(raw, "emission", "t_end_ns")
        initial = sec["initial_state"].value if "initial_state" in sec else "minus"
        outputs = tuple(
            tok.strip()
            for tok in (sec["outputs"].value if "outputs" in sec else "trajectory").split(",")
            if tok.strip()
        )
        for tok in outputs:
            if tok not in ("trajectory", "kernel", "wigner", "spectrum"):
                raise ConfigError(
                    f"unknown output {tok!r} in [emission]", raw.path, sec["outputs"].line
                )
        lock = _as_bool(raw, "emission", "omega0_lock") if "omega0_lock" in sec else False
        cfg.equalize_pulses = (
            _as_bool(raw, "emission", "equalize_pulses") if "equalize_pulses" in sec else False
        )
        allow_base = (
            _as_bool(raw, "emission", "allow_nonadiabatic")
            if "allow_nonadiabatic" in sec
            else False
        )

        if "wigner" in raw.sections:
            _check_keys(raw, "wigner", _WIGNER_KEYS)
            wsec = raw.sections["wigner"]
            span = (
                energy_to_angular(_as_float(raw, "wigner", "omega_span_ueV"))
                if "omega_span_ueV" in wsec
                else 60.0
            )
            n_omega = _as_int(raw, "wigner", "n_omega") if "n_omega" in wsec else 601
            if "omega_center_ueV" in wsec and wsec["omega_center_ueV"].value != "auto":
                center = energy_to_angular(_as_float(raw, "wigner", "omega_center_ueV"))
                cfg.omega_grid = np.linspace(center - span / 2, center + span / 2, n_omega)

        run_labels = sorted(
            {
                name_.split(".")[1]
                for name_ in raw.sections
                if name_.startswith("run.")
            },
            key=lambda lbl: raw.section_lines.get(f"run.{lbl}", 0)
            if f"run.{lbl}" in raw.section_lines
            else min(
                raw.section_lines[n]
                for n in raw.sections
                if n.startswith(f"run.{lbl}.") or n == f"run.{lbl}"
            ),
        )
        shared = _channel_sections(raw, "schedule")

        def make_run(label: str | None) -> EmissionScenario:
            per = {ch: list(shared[ch]) for ch in _CHANNELS}
            allow = allow_base
            omega_c_override = None
            t_end_run = t_end
            sample_dt_run = integ.sample_dt
            if label is not None:
                head = f"run.{label}"
                if head in raw.sections:
                    _check_keys(raw, head, _RUN_KEYS)
                    hsec = raw.sections[head]
                    if "allow_nonadiabatic" in hsec:
                        allow = _as_bool(raw, head, "allow_nonadiabatic")
                    if "omega_c_offset_ueV" in hsec:
                        omega_c_override = hsec["omega_c_offset_ueV"].value
                    if "t_end_ns" in hsec:
                        t_end_run = _as_float(raw, head, "t_end_ns")
                    if "sample_dt_ps" in hsec:
                        sample_dt_run = _as_float(raw, head, "sample_dt_ps") / 1e3
                per_run = _channel_sections(raw, head)
                for ch in _CHANNELS:
                    per[ch].extend(per_run[ch])
            delta12 = _build_channel(raw, per["delta12"])
            omega0 = _build_channel(raw, per["omega0"])
            params = _run_params(
                raw,
                build_params,
                omega_c_override if omega_c_override is not None else omega_c_spec,
                delta12,
                probe,
                t_end=t_end_run,
            )
            schedule = ControlSchedule(
                t_end=t_end_run,
                delta12=delta12,
                omega0=omega0,
                omega0_lock=lock,
                omega12=params.omega12 if lock else 0.0,
            )
            return EmissionScenario(
                params=params,
                schedule=schedule,
                label=label or "run",
                initial_state=initial,
                outputs=outputs,
                allow_nonadiabatic=allow,
                rtol=integ.rtol,
                sample_dt=sample_dt_run,
                omega_grid=cfg.omega_grid,
            )

        if run_labels:
            cfg.emission_runs = [make_run(lbl) for lbl in run_labels]
        else:
            cfg.emission_runs = [make_run(None)]
        return cfg

    cfg.kind = "eigen"
    return cfg


def _run_params(raw, build_params, omega_c_spec, delta12, probe, t_end=None):
    """Resolve the cavity offset keyword against a concrete schedule."""
    from .params import angular_to_energy

    if omega_c_spec == "lock_dark":
        return build_params(-angular_to_energy(probe.omega12))
    if omega_c_spec == "lock_final":
        if delta12 is None or t_end is None:
            raise ConfigError(
                "omega_c_offset_ueV = lock_final needs an emission schedule", raw.path
            )
        final = delta12.value(t_end)
        return build_params(
            -angular_to_energy(math.hypot(final, probe.omega12))
        )
    return build_params(float(omega_c_spec))


# ---------------------------------------------------------------------------
# built-in scenarios

def builtin_scenarios() -> list:
    """Names of the scenario files shipped with the package."""
    out = []
    for item in resources.files("duoatom.scenarios").iterdir():
        if item.name.endswith(".cfg"):
            out.append(item.name[:-4])
    return sorted(out)


def load_scenario(name_or_path: str) -> ResolvedConfig:
    """Load a scenario by built-in name or filesystem path.

    ``$DUOATOM_SCENARIO_PATH`` may point at a directory whose ``.cfg``
    files shadow the built-ins of the same name.
    """
    candidate = Path(name_or_path)
    if candidate.suffix == ".cfg" or candidate.exists():
        if not candidate.exists():
            raise ConfigError(f"config file not found: {name_or_path}")
        return parse_config(candidate)
    name = name_or_path
    override_dir = os.environ.get("DUOATOM_SCENARIO_PATH")
    if override_dir:
        override = Path(override_dir) / f"{name}.cfg"
        if override.exists():
            return parse_config(override)
    ref = resources.files("duoatom.scenarios") / f"{name}.cfg"
    if not ref.is_file():
        raise ConfigError(
            f"unknown scenario {name!r}; built-ins: {', '.join(builtin_scenarios())}"
        )
    return parse_config(ref.read_text(encoding="utf-8"), name=f"builtin:{name}")
