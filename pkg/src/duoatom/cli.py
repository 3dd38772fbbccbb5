"""Command-line front end: scenario runs to CSV/JSON output bundles.

Every invocation writes delimited data plus a JSON manifest that fully
describes the resolved run (sufficient to reproduce it); rendered PNG
figures accompany the CSV files unless ``--no-plots`` is given.  The tool
is fully deterministic: no randomness anywhere, hence ``--seedless`` is
documentation, not configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ResolvedConfig, builtin_scenarios, load_scenario
from .errors import DuoatomError
from .output import (
    Manifest,
    params_payload,
    schedule_checksum,
    write_csv,
    write_json,
    write_matrix_csv,
)
from .params import angular_to_energy
from .protocols import (
    bandwidth_optimum_scan,
    equalize_pulse_powers,
    run_emission,
    run_memory,
    timing_sensitivity,
)
from .spectral import spectral_scan

TRAJECTORY_HEADER = ["t_ns", "pop_minus_eff", "pop_plus_eff", "pop_cavity", "power_emitted"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duoatom",
        description="Deterministic simulator for a tunable one-dimensional atom "
        "(two dipole-coupled emitters in a lossy cavity).",
    )
    parser.add_argument("--version", action="version", version=f"duoatom {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--workers", type=int, default=None, help="parallel workers for scans")
    common.add_argument("--rtol", type=float, default=None, help="integrator tolerance override")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figure rendering")
    common.add_argument(
        "--seedless",
        action="store_true",
        help="no-op: the tool is fully deterministic and uses no randomness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sc_help = f"built-in scenario name ({', '.join(builtin_scenarios())}) or a .cfg path"
    p_eig = sub.add_parser("eigen-scan", parents=[common], help="static rate/mode-coupling scan")
    p_eig.add_argument("scenario", nargs="?", default=None, help=sc_help)
    p_eig.add_argument("--scenario", dest="scenario_flag", default=None, help=sc_help)

    p_emit = sub.add_parser("emit", parents=[common], help="shaped single-photon emission run")
    p_emit.add_argument("scenario", nargs="?", default=None, help=sc_help)
    p_emit.add_argument("--scenario", dest="scenario_flag", default=None, help=sc_help)

    p_wig = sub.add_parser("wigner", parents=[common], help="chronocyclic Wigner map of a run")
    p_wig.add_argument("scenario", nargs="?", default=None, help=sc_help)
    p_wig.add_argument("--scenario", dest="scenario_flag", default=None, help=sc_help)

    p_store = sub.add_parser("store", parents=[common], help="absorb/store/release memory run")
    p_store.add_argument("scenario", nargs="?", default=None, help=sc_help)
    p_store.add_argument("--scenario", dest="scenario_flag", default=None, help=sc_help)

    p_scan = sub.add_parser("scan", parents=[common], help="memory parameter scans")
    p_scan.add_argument("--what", choices=("bandwidth", "timing"), required=True)
    p_scan.add_argument("scenario", nargs="?", default=None, help=sc_help)
    p_scan.add_argument("--scenario", dest="scenario_flag", default=None, help=sc_help)
    return parser


def _pick_scenario(args, default=None) -> str:
    pos = getattr(args, "scenario", None)
    flag = getattr(args, "scenario_flag", None)
    if pos and flag:
        raise DuoatomError("give the scenario either positionally or via --scenario, not both")
    name = pos or flag or default
    if not name:
        raise DuoatomError(
            f"no scenario given; built-ins: {', '.join(builtin_scenarios())}"
        )
    return name


def _scenario_stem(name: str) -> str:
    stem = Path(name).name
    return stem[:-4] if stem.endswith(".cfg") else stem


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path("duoatom-out") / args.command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_trajectory(path, traj):
    return write_csv(
        path,
        TRAJECTORY_HEADER,
        [traj.t, traj.pop_minus_eff, traj.pop_plus_eff, traj.pop_cav, traj.power],
    )


def _write_wigner(out, stem, label, wmap, schedule, files, manifest):
    csv_path = write_matrix_csv(
        out / f"{stem}_{label}_wigner.csv", wmap.t, wmap.omega, wmap.values
    )
    meta = {
        "t_ns": {"start": float(wmap.t[0]), "stop": float(wmap.t[-1]), "n": int(wmap.t.size)},
        "omega_radns": {
            "start": float(wmap.omega[0]),
            "stop": float(wmap.omega[-1]),
            "n": int(wmap.omega.size),
        },
        "omega_ueV": {
            "start": angular_to_energy(float(wmap.omega[0])),
            "stop": angular_to_energy(float(wmap.omega[-1])),
        },
        "window_ns": wmap.window,
        "imag_residue": wmap.imag_residue,
        "schedule_sha256": schedule_checksum(schedule),
    }
    meta_path = write_json(out / f"{stem}_{label}_wigner.meta.json", meta)
    files += [csv_path, meta_path]
    manifest.add_output(csv_path)
    manifest.add_output(meta_path)
    return csv_path


def _emission_runs(cfg: ResolvedConfig, args):
    runs = []
    for scenario in cfg.emission_runs:
        if args.rtol is not None:
            scenario = replace(scenario, rtol=args.rtol)
        info = None
        if cfg.equalize_pulses:
            scenario, info = equalize_pulse_powers(scenario)
        runs.append((scenario, info))
    return runs


def _cmd_emit(args, wigner_only: bool = False) -> int:
    name = _pick_scenario(args)
    cfg = load_scenario(name)
    if cfg.kind != "emit":
        raise DuoatomError(f"scenario {name!r} is not an emission scenario")
    stem = _scenario_stem(name)
    out = _out_dir(args)
    manifest = Manifest(args.command, name, __version__)
    files = []
    nsteps = nfev = 0
    for scenario, eq_info in _emission_runs(cfg, args):
        if wigner_only and "wigner" not in scenario.outputs:
            scenario = replace(
                scenario, outputs=tuple(set(scenario.outputs) | {"wigner"})
            )
        bundle = run_emission(scenario)
        traj = bundle.trajectory
        nsteps += traj.nsteps
        nfev += traj.nfev
        label = scenario.label
        resolved = {
            "params": params_payload(scenario.params),
            "schedule": scenario.schedule.describe(),
            "schedule_sha256": schedule_checksum(scenario.schedule),
            "initial_state": scenario.initial_state,
            "rtol": scenario.rtol,
            "sample_dt_ns": scenario.sample_dt,
            "adiabaticity_ratio": bundle.adiabaticity_ratio,
            "leakage_fraction": bundle.leakage_fraction,
            "warnings": bundle.warnings,
        }
        if eq_info:
            resolved["equalized_peaks_radns"] = eq_info["amplitudes"]
        manifest.add_run(label, **resolved)
        if not wigner_only:
            path = _write_trajectory(out / f"{stem}_{label}_trajectory.csv", traj)
            files.append(path)
            manifest.add_output(path)
            if not args.no_plots:
                from .report import render_emission

                files.append(
                    render_emission(bundle, out / f"{stem}_{label}_trajectory.png")
                )
            if bundle.spectrum is not None:
                spath = write_csv(
                    out / f"{stem}_{label}_spectrum.csv",
                    ["omega_radns", "omega_ueV", "spectral_density"],
                    [
                        bundle.spectrum.omega,
                        [angular_to_energy(w) for w in bundle.spectrum.omega],
                        bundle.spectrum.values,
                    ],
                )
                files.append(spath)
                manifest.add_output(spath)
                if not args.no_plots:
                    from .report import render_spectrum

                    files.append(
                        render_spectrum(bundle.spectrum, out / f"{stem}_{label}_spectrum.png")
                    )
        if bundle.wigner is not None:
            _write_wigner(out, stem, label, bundle.wigner, scenario.schedule, files, manifest)
            if not args.no_plots:
                from .report import render_wigner

                files.append(render_wigner(bundle.wigner, out / f"{stem}_{label}_wigner.png"))
    manifest.finalize(out / "manifest.json", nsteps=nsteps, nfev=nfev)
    print(f"wrote {len(files)} artifact(s) + manifest.json to {out}")
    return 0


def _cmd_eigen(args) -> int:
    name = _pick_scenario(args, default="fig2")
    cfg = load_scenario(name)
    p = cfg.params_for_scan
    stem = _scenario_stem(name)
    out = _out_dir(args)
    grid = np.linspace(0.0, cfg.eigenscan_max_over_kappa * p.kappa, cfg.eigenscan_points)
    rows = spectral_scan(p, grid)
    path = write_csv(
        out / f"{stem}_eigen_scan.csv",
        ["delta12_over_kappa", "mu", "nu", "Gamma_over_Gamma0", "beta"],
        [
            [r.delta12_over_kappa for r in rows],
            [r.mu for r in rows],
            [r.nu for r in rows],
            [r.Gamma_over_Gamma0 for r in rows],
            [r.beta for r in rows],
        ],
    )
    manifest = Manifest(args.command, name, __version__)
    manifest.set(params=params_payload(p), dark_rows=[i for i, r in enumerate(rows) if r.dark])
    manifest.add_output(path)
    if not args.no_plots:
        from .report import render_eigen_scan

        render_eigen_scan(rows, out / f"{stem}_eigen_scan.png")
    manifest.finalize(out / "manifest.json")
    print(f"wrote {path.name} + manifest.json to {out}")
    return 0


def _cmd_store(args) -> int:
    name = _pick_scenario(args, default="fig6")
    cfg = load_scenario(name)
    if cfg.kind != "store":
        raise DuoatomError(f"scenario {name!r} is not a memory scenario")
    m = cfg.memory
    if args.rtol is not None:
        m = replace(m, rtol=args.rtol)
    stem = _scenario_stem(name)
    out = _out_dir(args)
    result = run_memory(m)
    traj = result.trajectory
    path = _write_trajectory(out / f"{stem}_trajectory.csv", traj)
    manifest = Manifest(args.command, name, __version__)
    manifest.add_run(
        m.label,
        params=params_payload(m.params),
        schedule=m.build_schedule().describe(),
        schedule_sha256=schedule_checksum(m.build_schedule()),
        n_mean=m.n_mean,
        carrier_offset_radns=m.resolved_carrier(),
        rtol=m.rtol,
        n_max=m.n_max,
    )
    manifest.add_output(path)
    files = [path]
    summary = {
        "efficiency": result.efficiency,
        "efficiency_time_ns": result.efficiency_time,
        "storage_decay_rate_radns": result.storage_rate,
        "storage_decay_time_ns": (
            1.0 / result.storage_rate if result.storage_rate else None
        ),
        "linewidth_time_ns": result.linewidth_time,
        "bandwidth_ratio": result.bandwidth_ratio,
        "flux_balance_residual": result.balance_residual,
    }
    spath = write_json(out / f"{stem}_result.json", summary)
    manifest.add_output(spath)
    files.append(spath)
    if result.release_t is not None:
        rpath = write_csv(
            out / f"{stem}_release.csv",
            ["t_ns", "power_emitted"],
            [result.release_t, result.release_power],
        )
        manifest.add_output(rpath)
        files.append(rpath)
    if not args.no_plots:
        from .report import render_memory

        files.append(render_memory(result, out / f"{stem}_memory.png"))
    manifest.finalize(out / "manifest.json", nsteps=traj.nsteps, nfev=traj.nfev)
    print(f"wrote {len(files)} artifact(s) + manifest.json to {out}")
    return 0


def _cmd_scan(args) -> int:
    name = _pick_scenario(args, default="fig6")
    cfg = load_scenario(name)
    if cfg.kind != "store":
        raise DuoatomError(f"scenario {name!r} is not a memory scenario")
    m = cfg.memory
    if args.rtol is not None:
        m = replace(m, rtol=args.rtol)
    out = _out_dir(args)
    manifest = Manifest(args.command, name, __version__)
    manifest.set(what=args.what, params=params_payload(m.params))
    if args.what == "bandwidth":
        grid_uev = np.array([18.0, 24.0, 30.0, 36.0, 42.0, 50.0, 60.0, 80.0])
        grid = grid_uev / 0.6582119569
        scan = bandwidth_optimum_scan(m, grid, workers=args.workers)
        path = write_csv(
            out / "scan_bandwidth.csv",
            ["absorb_delta12_ueV", "linewidth_time_over_pulse_fwhm", "efficiency"],
            [grid_uev, scan.ratio, scan.eta],
        )
        summary = {
            "optimum_delta12_ueV": angular_to_energy(scan.optimum_delta12),
            "optimum_linewidth_time_over_pulse_fwhm": scan.optimum_ratio,
            "optimum_efficiency": scan.optimum_eta,
        }
        xlabel = "absorber linewidth time / pulse FWHM"
        x_for_plot, eta = scan.ratio, scan.eta
    else:
        offsets_ps = np.array([-300.0, -200.0, -100.0, -50.0, 0.0, 50.0, 100.0, 200.0, 300.0])
        scan = timing_sensitivity(m, offsets_ps / 1e3, workers=args.workers)
        path = write_csv(
            out / "scan_timing.csv",
            ["gate_offset_ps", "efficiency"],
            [offsets_ps, scan.eta],
        )
        summary = {"reference_efficiency": scan.reference_eta}
        xlabel = "gate start offset (ps)"
        x_for_plot, eta = offsets_ps, scan.eta
    manifest.add_output(path)
    spath = write_json(out / f"scan_{args.what}_summary.json", summary)
    manifest.add_output(spath)
    if not args.no_plots:
        from .report import render_scan

        render_scan(x_for_plot, eta, xlabel, out / f"scan_{args.what}.png")
    manifest.set(workers=args.workers)
    manifest.finalize(out / "manifest.json")
    print(f"wrote scan_{args.what}.csv + manifest.json to {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "eigen-scan":
            return _cmd_eigen(args)
        if args.command == "emit":
            return _cmd_emit(args)
        if args.command == "wigner":
            return _cmd_emit(args, wigner_only=True)
        if args.command == "store":
            return _cmd_store(args)
        if args.command == "scan":
            return _cmd_scan(args)
        parser.error(f"unknown command {args.command!r}")
    except DuoatomError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
