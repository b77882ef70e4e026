"""Command-line entry point: config parsing, dispatch, result serialization.

Configs are nested YAML (or a flat JSON dump produced by --dry-run; the two
round-trip). Every run writes `resolved_config.json` with all defaults filled,
a sorted-key `summary.json` (byte-identical across reruns except for its
timestamp field), and protocol-specific CSV tables.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import protocols
from .basis import ExchangeSymmetry, build_sector_basis
from .dressing import DressingParams, dressing_report
from .interactions import InteractionSpec, default_vint
from .lattice import LatticeGeometry, SiteCoord
from .operators import assemble_hopping, assemble_site_diagonal
from .potentials import NucleusSpec, nuclear_field
from .solver import classify_orbital, export_eigenpairs_csv, low_spectrum

PROTOCOLS = ("prep-he", "prep-h2", "bond-scan", "spectroscopy", "spectrum", "dressing-report")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# defaults and resolution

_COMMON_DEFAULTS = {
    "hopping": 1.0,
    "interaction.v_int": "default",
    "interaction.alpha": 6.0,
    "interaction.clamp": None,
    "evolve.step_tol": 1e-8,
    "evolve.samples": 200,
    "evolve.instantaneous_stride": 5,
    "solver.eig_tol": 1e-10,
    "solver.seed": 7,
    "threads": 1,
}

_PROTOCOL_DEFAULTS = {
    "prep-he": {
        "sector": "singlet",
        "lattice.padding": 10,
        "potential.a0": 4.0,
        "potential.charge": 2.0,
        "ramps.t_hop": None,  # sector-dependent: 200 singlet, 140 triplet
        "ramps.t_int": None,  # 20 singlet, 10 triplet
        "ramps.t_aux": 60.0,
        "prep.offset": 3,
        "prep.aux_scale": 0.9,
        "prep.v2p_strength": None,
        "prep.v2p_axis": "x",
        "measure_return": False,
    },
    "prep-h2": {
        "sector": "singlet",
        "lattice.padding": 10,
        "potential.a0": 2.0,
        "potential.charge": 1.0,
        "prep.separation": 3,
        "ramps.t_hop": 200.0,
        "ramps.t_int": 10.0,
        "measure_return": False,
    },
    "bond-scan": {
        "sector": "singlet",
        "lattice.padding": 10,
        "potential.a0": 2.0,
        "potential.charge": 1.0,
        "ramps.t_hop": 200.0,
        "scan.separations": [1, 2, 3, 4, 5, 6, 7, 8],
        "scan.t_ints": [10.0, 20.0, 40.0],
    },
    "spectroscopy": {
        "lattice.lx": 40,
        "lattice.ly": 38,
        "potential.a0": 1.0,
        "potential.charge": 1.0,
        "drive.g": 0.01,
        "drive.total_time": 1000.0,
        "drive.omega_min": 0.0,
        "drive.omega_max": 1.0,
        "drive.omega_points": 60,
        "drive.residual_threshold": 0.25,
        "solver.k": 14,
    },
    "spectrum": {
        "sector": "single",
        "lattice.padding": 10,
        "potential.a0": 4.0,
        "potential.charge": 1.0,
        "solver.k": 8,
        "export_amplitudes": False,
    },
    "dressing-report": {
        "dressing.rabi": 1.0,
        "dressing.detuning": 10.0,
        "dressing.tau_eff": None,
        "dressing.n_from": None,
        "dressing.n_to": None,
        "dressing.duty_cycle": None,
        "dressing.dressed_time": 0.0,
    },
}


def _flatten(nested, prefix=""):
    flat = {}
    for key, value in nested.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, dotted + "."))
        else:
            flat[dotted] = value
    return flat


def load_config(path) -> dict:
    """Read nested YAML or a flat-JSON resolved dump into a flat dict."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        data = json.loads(text)
    else:
        data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    if any("." in k for k in data):
        return dict(data)  # already flat
    return _flatten(data)


def resolve_config(protocol: str, user: dict, sector: str | None = None) -> dict:
    """Overlay user settings on defaults; reject unknown keys and bad ranges."""
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}")
    declared = user.get("protocol")
    if declared is not None and declared != protocol:
        raise ConfigError(f"config names protocol {declared!r} but {protocol!r} was invoked")

    resolved = dict(_COMMON_DEFAULTS)
    resolved.update(_PROTOCOL_DEFAULTS[protocol])
    known = set(resolved) | {"protocol", "potential.nuclei", "dressing.rabi",
                             "dressing.detuning", "dressing.tau_eff", "dressing.duty_cycle",
                             "lattice.lx", "lattice.ly", "lattice.padding"}
    for key, value in user.items():
        if key == "protocol":
            continue
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        resolved[key] = value
    resolved["protocol"] = protocol
    if sector is not None:
        resolved["sector"] = sector

    if protocol == "prep-he":
        singlet = resolved["sector"] == "singlet"
        if resolved["ramps.t_hop"] is None:
            resolved["ramps.t_hop"] = 200.0 if singlet else 140.0
        if resolved["ramps.t_int"] is None:
            resolved["ramps.t_int"] = 20.0 if singlet else 10.0

    if "sector" in resolved and resolved["sector"] not in ("singlet", "triplet", "single"):
        raise ConfigError(f"sector must be 'singlet' or 'triplet', got {resolved['sector']!r}")
    if "potential.nuclei" in resolved and not resolved["potential.nuclei"]:
        raise ConfigError("potential.nuclei must not be empty")
    for key in ("ramps.t_hop", "ramps.t_int", "drive.total_time"):
        if key in resolved and resolved[key] is not None and resolved[key] <= 0:
            raise ConfigError(f"{key} must be > 0, got {resolved[key]}")
    return resolved


def _sector(resolved) -> ExchangeSymmetry:
    return (
        ExchangeSymmetry.SYMMETRIC
        if resolved["sector"] == "singlet"
        else ExchangeSymmetry.ANTISYMMETRIC
    )


def _prep_params(resolved) -> protocols.PrepParams:
    protocol = resolved["protocol"]
    common = dict(
        step_tol=resolved["evolve.step_tol"],
        samples=resolved["evolve.samples"],
        instantaneous_stride=resolved["evolve.instantaneous_stride"],
        eig_tol=resolved["solver.eig_tol"],
        seed=resolved["solver.seed"],
        hopping=resolved["hopping"],
    )
    if protocol == "prep-he":
        if resolved["sector"] == "singlet":
            params = protocols.bosonic_helium_params(
                padding=resolved["lattice.padding"],
                a0=resolved["potential.a0"],
                charge=resolved["potential.charge"],
                t_hop=resolved["ramps.t_hop"],
                t_int=resolved["ramps.t_int"],
                alpha=resolved["interaction.alpha"],
                **common,
            )
        else:
            params = protocols.fermionic_helium_params(
                padding=resolved["lattice.padding"],
                a0=resolved["potential.a0"],
                charge=resolved["potential.charge"],
                t_hop=resolved["ramps.t_hop"],
                t_aux=resolved["ramps.t_aux"],
                t_int=resolved["ramps.t_int"],
                offset=resolved["prep.offset"],
                aux_scale=resolved["prep.aux_scale"],
                alpha=resolved["interaction.alpha"],
                **common,
            )
            params = dataclasses.replace(
                params,
                v2p_strength=resolved["prep.v2p_strength"],
                v2p_axis=resolved["prep.v2p_axis"],
            )
    elif protocol in ("prep-h2", "bond-scan"):
        params = protocols.h2_params(
            separation=resolved.get("prep.separation", 3),
            symmetry=_sector(resolved),
            padding=resolved["lattice.padding"],
            a0=resolved["potential.a0"],
            charge=resolved["potential.charge"],
            t_hop=resolved["ramps.t_hop"],
            t_int=resolved.get("ramps.t_int", 10.0),
            alpha=resolved["interaction.alpha"],
            **common,
        )
    else:
        raise ConfigError(f"no preparation parameters for protocol {protocol!r}")

    if resolved["interaction.v_int"] != "default":
        spec = InteractionSpec(
            float(resolved["interaction.v_int"]),
            resolved["interaction.alpha"],
            clamp=resolved["interaction.clamp"],
        )
        params = dataclasses.replace(params, interaction=spec)
    elif resolved["interaction.clamp"] is not None:
        params = dataclasses.replace(
            params,
            interaction=InteractionSpec(
                default_vint(resolved["potential.a0"], resolved["interaction.alpha"]),
                resolved["interaction.alpha"],
                clamp=resolved["interaction.clamp"],
            ),
        )
    if "potential.nuclei" in resolved:
        nuclei = tuple(
            NucleusSpec(
                n["x"], n["y"],
                charge=n.get("charge", 1.0),
                strength_scale=n.get("strength_scale", 1.0),
                core_radius=n.get("core_radius", 0.5),
            )
            for n in resolved["potential.nuclei"]
        )
        params = dataclasses.replace(params, nuclei=nuclei)
    return params


# --------------------------------------------------------------------------
# output writers

def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _write_trajectory(path, run: protocols.RunResult):
    cols = run.trajectory_columns()
    header = list(cols)
    data = np.column_stack([cols[k] for k in header])
    _write_csv(path, header, [[repr(float(v)) for v in row] for row in data])


def _dressing_block(resolved, dressed_time):
    if resolved.get("dressing.rabi") is None or resolved.get("dressing.detuning") is None:
        return None
    params = DressingParams(
        rabi=resolved["dressing.rabi"],
        detuning=resolved["dressing.detuning"],
        hopping=resolved.get("hopping", 1.0),
        tau_eff=resolved.get("dressing.tau_eff"),
        duty_cycle=resolved.get("dressing.duty_cycle"),
    )
    return dressing_report(params, dressed_time)


# --------------------------------------------------------------------------
# protocol runners

def _run_prep(resolved, out: Path) -> dict:
    params = _prep_params(resolved)
    protocol = resolved["protocol"]
    if protocol == "prep-he":
        run = (
            protocols.prepare_bosonic_helium(params)
            if resolved["sector"] == "singlet"
            else protocols.prepare_fermionic_helium(params)
        )
    else:
        run = protocols.prepare_h2(params)
    _write_trajectory(out / "trajectory.csv", run)
    summary = run.to_summary()
    if resolved.get("measure_return"):
        p_return = protocols.reverse_prep_return_probability(run)
        summary["return_probability"] = p_return
        summary["fidelity_squared"] = run.final_fidelity**2
    block = _dressing_block(resolved, run.dressed_time)
    if block is not None:
        summary["dressing"] = block
    return summary


def _run_bond_scan(resolved, out: Path) -> dict:
    params = _prep_params(resolved)
    rows = protocols.bond_scan(
        params,
        resolved["scan.separations"],
        resolved["scan.t_ints"],
        threads=int(resolved["threads"]),
    )
    header = [
        "separation", "t_int", "e_final", "e_exact", "e_single",
        "delta_e", "delta_e_exact", "fidelity", "failed",
    ]
    _write_csv(
        out / "scan.csv",
        header,
        [
            [r.separation, repr(r.t_int), repr(r.e_final), repr(r.e_exact), repr(r.e_single),
             repr(r.delta_e), repr(r.delta_e_exact), repr(r.fidelity), int(r.failed)]
            for r in rows
        ],
    )
    return {
        "rows": [dataclasses.asdict(r) for r in rows],
        "n_failed": sum(r.failed for r in rows),
    }


def _run_spectroscopy(resolved, out: Path) -> dict:
    params = protocols.hydrogen_spectroscopy_params(
        lx=resolved["lattice.lx"],
        ly=resolved["lattice.ly"],
        a0=resolved["potential.a0"],
        step_tol=resolved["evolve.step_tol"],
        samples=resolved["evolve.samples"],
        eig_tol=resolved["solver.eig_tol"],
        seed=resolved["solver.seed"],
        hopping=resolved["hopping"],
    )
    grid = np.linspace(
        resolved["drive.omega_min"],
        resolved["drive.omega_max"],
        int(resolved["drive.omega_points"]),
    )
    grid = grid[grid > 0]
    result = protocols.spectroscopy_sweep(
        resolved["drive.g"],
        grid,
        resolved["drive.total_time"],
        params,
        samples=resolved["evolve.samples"],
        k_states=int(resolved["solver.k"]),
        threads=int(resolved["threads"]),
    )
    _write_csv(
        out / "spectroscopy.csv",
        ["omega", "amplitude", "rabi_omega", "residual", "flagged"],
        [
            [repr(p.drive_omega), repr(p.amplitude), repr(p.rabi_omega), repr(p.residual), int(p.flagged)]
            for p in result.points
        ],
    )
    return {
        "ground_energy": result.ground_energy,
        "drive_strength": result.drive_strength,
        "total_time": result.total_time,
        "resonances": [dataclasses.asdict(r) for r in result.resonances],
    }


def _run_spectrum(resolved, out: Path) -> dict:
    padding = resolved["lattice.padding"]
    lx = resolved.get("lattice.lx") or 2 * padding + 1
    ly = resolved.get("lattice.ly") or 2 * padding + 1
    g = LatticeGeometry(int(lx), int(ly))
    cx, cy = g.center
    nuclei = resolved.get(
        "potential.nuclei", [{"x": cx, "y": cy, "charge": resolved["potential.charge"]}]
    )
    field = np.zeros(g.n_sites)
    for n in nuclei:
        field += nuclear_field(
            g,
            NucleusSpec(n["x"], n["y"], charge=n.get("charge", 1.0),
                        strength_scale=n.get("strength_scale", 1.0)),
            resolved["potential.a0"],
            resolved["hopping"],
        )
    basis1 = build_sector_basis(g, 1)
    h = assemble_hopping(basis1, resolved["hopping"]) + assemble_site_diagonal(basis1, field, -1.0)
    k = int(resolved["solver.k"])
    vals, vecs = low_spectrum(h, k, tol=resolved["solver.eig_tol"], seed=resolved["solver.seed"])
    export_eigenpairs_csv(
        out / "spectrum.csv", vals, vecs if resolved["export_amplitudes"] else None
    )
    labels = [classify_orbital(vecs[:, m], g, (nuclei[0]["x"], nuclei[0]["y"])) for m in range(k)]
    return {"energies": [float(v) for v in vals], "labels": labels}


def _run_dressing_report(resolved, out: Path) -> dict:
    from .dressing import n_scaling_gain

    params = DressingParams(
        rabi=resolved["dressing.rabi"],
        detuning=resolved["dressing.detuning"],
        hopping=resolved["hopping"],
        tau_eff=resolved["dressing.tau_eff"],
        duty_cycle=resolved["dressing.duty_cycle"],
    )
    report = dressing_report(params, resolved["dressing.dressed_time"])
    if resolved["dressing.n_from"] and resolved["dressing.n_to"]:
        report["n_scaling_gain"] = n_scaling_gain(
            int(resolved["dressing.n_from"]), int(resolved["dressing.n_to"])
        )
    return report


_RUNNERS = {
    "prep-he": _run_prep,
    "prep-h2": _run_prep,
    "bond-scan": _run_bond_scan,
    "spectroscopy": _run_spectroscopy,
    "spectrum": _run_spectrum,
    "dressing-report": _run_dressing_report,
}


def run_experiment(
    protocol: str,
    config_path,
    out_dir,
    sector: str | None = None,
    threads: int | None = None,
    dry_run: bool = False,
) -> int:
    """Execute one protocol; returns a process exit status."""
    try:
        user = load_config(config_path) if config_path else {}
        resolved = resolve_config(protocol, user, sector=sector)
        if threads is not None:
            resolved["threads"] = threads
        print(json.dumps(resolved, sort_keys=True, default=_json_default))
        if dry_run:
            return 0
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "resolved_config.json", resolved)
        summary = _RUNNERS[protocol](resolved, out)
        summary["resolved_config"] = resolved
        summary["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        _write_json(out / "summary.json", summary)
        return 0
    except (ConfigError, ValueError, KeyError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 2
    except Exception as exc:  # solver non-convergence and friends
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latticechem",
        description="Few-body lattice simulation experiments",
    )
    sub = parser.add_subparsers(dest="protocol", required=True)
    for name in PROTOCOLS:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", default=None, help="YAML config (or flat JSON dump)")
        p.add_argument("--out", default="runs/latest", help="output directory")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--dry-run", action="store_true")
        if name in ("prep-he", "prep-h2", "bond-scan"):
            p.add_argument("--sector", choices=["singlet", "triplet"], default=None)
    args = parser.parse_args(argv)
    return run_experiment(
        args.protocol,
        args.config,
        args.out,
        sector=getattr(args, "sector", None),
        threads=args.threads,
        dry_run=args.dry_run,
    )


if __name__ == "__main__":
    sys.exit(main())
