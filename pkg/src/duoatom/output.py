"""Deterministic CSV/JSON writers and the run manifest.

Floats are written with shortest round-trip ``repr`` so two runs of the
same resolved configuration produce byte-identical payloads; the manifest
separates the determinism-relevant resolved inputs (hashed into
``determinism_key``) from runtime statistics such as wall-clock time.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .params import HBAR_UEV_NS, angular_to_energy

__all__ = [
    "fmt",
    "write_csv",
    "write_matrix_csv",
    "write_json",
    "schedule_checksum",
    "Manifest",
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, columns) -> Path:
    """Write named columns (equal-length sequences) as CSV."""
    cols = [np.asarray(c) for c in columns]
    n = cols[0].shape[0]
    if any(c.shape[0] != n for c in cols):
        raise ValueError("all CSV columns must have equal length")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(fmt(c[i]) for c in cols))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_matrix_csv(path, row_axis, col_axis, matrix) -> Path:
    """Matrix CSV: first row is the column axis, first column the row axis."""
    matrix = np.asarray(matrix)
    lines = ["," + ",".join(fmt(v) for v in col_axis)]
    for label, row in zip(row_axis, matrix):
        lines.append(fmt(label) + "," + ",".join(fmt(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _canonical(obj):
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(_canonical(payload), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def schedule_checksum(schedule) -> str:
    blob = json.dumps(_canonical(schedule.describe()), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def params_payload(p) -> dict:
    return {
        "g_radns": p.g,
        "kappa_radns": p.kappa,
        "gamma_radns": p.gamma,
        "gamma12_radns": p.gamma12,
        "omega12_radns": p.omega12,
        "omega_c_offset_radns": p.omega_c,
        "g_ueV": angular_to_energy(p.g),
        "kappa_ueV": angular_to_energy(p.kappa),
        "gamma_ueV": angular_to_energy(p.gamma),
        "gamma12_over_gamma": p.gamma12 / p.gamma if p.gamma > 0 else 0.0,
        "omega12_ueV": angular_to_energy(p.omega12),
        "omega_c_offset_ueV": angular_to_energy(p.omega_c),
        "hbar_ueV_ns": HBAR_UEV_NS,
    }


class Manifest:
    """Collects the resolved inputs and outputs of one CLI invocation."""

    def __init__(self, command: str, scenario: str, version: str):
        self._t0 = time.monotonic()
        self.payload = {
            "tool": "duoatom",
            "version": version,
            "command": command,
            "scenario": scenario,
            "seedless": True,
            "runs": [],
            "outputs": [],
        }

    def add_run(self, label: str, **resolved):
        self.payload["runs"].append({"label": label, **resolved})

    def add_output(self, path):
        self.payload["outputs"].append(Path(path).name)

    def set(self, **kv):
        self.payload.update(kv)

    def finalize(self, out_path, *, nsteps: int = 0, nfev: int = 0) -> Path:
        core = {
            k: v
            for k, v in self.payload.items()
            if k not in ("outputs",)
        }
        blob = json.dumps(_canonical(core), sort_keys=True)
        self.payload["determinism_key"] = hashlib.sha256(
            blob.encode("utf-8")
        ).hexdigest()
        self.payload["runtime"] = {
            "wall_s": time.monotonic() - self._t0,
            "nsteps": nsteps,
            "nfev": nfev,
        }
        return write_json(out_path, self.payload)
