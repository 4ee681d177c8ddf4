"""Command-line interface.

    latticeqo {bands|dos|evolve|sweep|fit} --config FILE [--out DIR]
              [--override key.path=value ...]

Every command reads one YAML config, writes CSV/JSON artifacts into the
output directory, and is fully deterministic: identical configs give
byte-identical files.  Exit codes: 0 success, 2 config/usage error,
1 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LatticeQOError, ValidationError
from . import config as cfgmod
from .calibration import fit_quadratic, run_sweep
from .csvio import config_hash, read_csv_columns, write_csv, write_json
from .dynamics import evolve, single_site_excitation
from .lattice import (
    LatticeKind,
    assemble_hamiltonian,
    attach_emitter,
    build_lattice,
)
from .observables import detect_revivals, intensity_profile, participation_series, qe_population
from .spectrum import (
    BandModel,
    BinRule,
    band_surface,
    default_bin_rule,
    dos_histogram,
    eigendecompose,
    flat_band_count,
    zero_mode_tolerance,
)


def _out_dir(args, cfg: dict) -> Path:
    if args.out:
        return Path(args.out)
    out = cfg.get("output", {})
    if isinstance(out, dict) and out.get("dir"):
        return Path(out["dir"])
    return Path("out")


def _prefix(cfg: dict, default: str) -> str:
    out = cfg.get("output", {})
    if isinstance(out, dict) and out.get("prefix"):
        return str(out["prefix"])
    return default


def cmd_bands(args) -> int:
    cfg = cfgmod.load_config(args.config, tuple(args.override))
    h = config_hash(cfg)
    sec = cfg.get("lattice")
    if not isinstance(sec, dict) or "kind" not in sec:
        raise ValidationError("bands config needs lattice.kind")
    try:
        kind = LatticeKind(str(sec["kind"]).lower())
    except ValueError:
        raise ValidationError(f"unknown lattice kind {sec['kind']!r}")
    model = BandModel(
        kind=kind,
        vx=float(sec.get("vx", 1.0)),
        vy=float(sec.get("vy", 1.0)),
        dx=float(sec.get("dx", 1.0)),
        dy=float(sec.get("dy", 1.0)),
    )
    ksec = cfg.get("kgrid", {})
    nkx = int(ksec.get("nkx", 64))
    nky = int(ksec.get("nky", 64))
    kx, ky, bands = band_surface(model, nkx, nky)
    cols = ["kx", "ky"] + [f"E{b + 1}" for b in range(len(bands))]
    rows = (
        [kx[i], ky[i]] + [band[i] for band in bands] for i in range(kx.size)
    )
    out = _out_dir(args, cfg)
    prefix = _prefix(cfg, f"bands_{kind.value}")
    path = write_csv(
        out / f"{prefix}.csv",
        cols,
        rows,
        header_lines=[f"band surface: {kind.value}, vx={model.vx}, vy={model.vy}"],
        cfg_hash=h,
    )
    print(f"wrote {path}")
    return 0


def cmd_dos(args) -> int:
    cfg = cfgmod.load_config(args.config, tuple(args.override))
    h = config_hash(cfg)
    spec = cfgmod.lattice_spec_from(cfg)
    graph = build_lattice(spec)
    ham = assemble_hamiltonian(graph)
    result = eigendecompose(ham)
    eigs = result.eigenvalues
    dsec = cfg.get("dos", {})
    if dsec.get("bins"):
        rule = BinRule(count=int(dsec["bins"]))
    elif dsec.get("bin_width"):
        rule = BinRule(width=float(dsec["bin_width"]))
    else:
        rule = default_bin_rule(spec.vx, spec.vy)
    hist = dos_histogram(eigs, rule)
    out = _out_dir(args, cfg)
    prefix = _prefix(cfg, f"dos_{spec.kind.value}")
    notes = [f"lattice: {spec.kind.value} nx={spec.nx} ny={spec.ny} sites={graph.n_sites}"]
    p1 = write_csv(out / f"{prefix}_eigenvalues.csv", ["index", "energy"],
                   ((i, e) for i, e in enumerate(eigs)), header_lines=notes, cfg_hash=h)
    p2 = write_csv(out / f"{prefix}_histogram.csv", ["bin_lo", "bin_hi", "count"],
                   ((hist.bin_edges[i], hist.bin_edges[i + 1], int(hist.counts[i]))
                    for i in range(hist.counts.size)),
                   header_lines=notes, cfg_hash=h)
    summary = {
        "sites": graph.n_sites,
        "eigenvalue_count": int(eigs.size),
        "energy_min": float(eigs[0]),
        "energy_max": float(eigs[-1]),
    }
    if spec.kind is LatticeKind.LIEB:
        tol = zero_mode_tolerance(eigs)
        summary["flat_band_count"] = flat_band_count(eigs, tol)
        summary["flat_band_tolerance"] = tol
    p3 = write_json(out / f"{prefix}_summary.json", summary, cfg_hash=h)
    for p in (p1, p2, p3):
        print(f"wrote {p}")
    return 0


def cmd_evolve(args) -> int:
    cfg = cfgmod.load_config(args.config, tuple(args.override))
    h = config_hash(cfg)
    spec = cfgmod.lattice_spec_from(cfg)
    graph = build_lattice(spec)
    em = cfgmod.emitter_spec_from(cfg, spec)
    if em is not None:
        graph = attach_emitter(graph, em)
    initial = cfgmod.site_label_from(cfg.get("initial", "emitter" if em else "bulk_center"), spec)
    psi0 = single_site_excitation(graph, initial)
    grid = cfgmod.zgrid_from(cfg)
    propagator = str(cfg.get("propagator", "exact")).lower()
    tol = float(cfg.get("tolerance", 1e-10))
    ham = assemble_hamiltonian(graph)
    traj = evolve(ham, psi0, grid, propagator=propagator, tol=tol, labels=graph.sites)

    out = _out_dir(args, cfg)
    prefix = _prefix(cfg, f"evolve_{spec.kind.value}")
    notes = [
        f"lattice: {spec.kind.value} nx={spec.nx} ny={spec.ny} sites={graph.n_sites}",
        f"initial: {initial}, propagator: {propagator}",
    ]
    pops = traj.populations()
    cols = ["z"] + [f"P[{lab}]" for lab in graph.sites]
    paths = [
        write_csv(out / f"{prefix}_trajectory.csv", cols,
                  ([traj.grid.values[j]] + list(pops[j]) for j in range(grid.samples)),
                  header_lines=notes, cfg_hash=h)
    ]
    rsec = cfg.get("revival", {})
    if em is not None:
        series = qe_population(traj)
        paths.append(write_csv(out / f"{prefix}_qe_population.csv", ["z", "population"],
                               zip(series.z, series.values), header_lines=notes, cfg_hash=h))
        report = detect_revivals(
            series,
            decay_threshold=float(rsec.get("decay_threshold", 0.1)),
            revival_threshold=float(rsec.get("revival_threshold", 0.05)),
        )
        paths.append(write_json(out / f"{prefix}_revivals.json", report.to_dict(), cfg_hash=h))
    rser = participation_series(traj)
    paths.append(write_csv(out / f"{prefix}_participation.csv", ["z", "R"],
                           zip(rser.z, rser.values), header_lines=notes, cfg_hash=h))
    for snap_z in cfg.get("snapshots", []):
        zval = float(snap_z)
        j = int(np.argmin(np.abs(grid.values - zval)))
        profile = intensity_profile(traj.state(j))
        paths.append(write_csv(
            out / f"{prefix}_profile_z{zval:g}.csv",
            ["index", "label", "intensity"],
            ((i, str(graph.sites[i]), profile[i]) for i in range(graph.n_sites)),
            header_lines=notes + [f"snapshot at grid z={grid.values[j]!r}"],
            cfg_hash=h,
        ))
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_sweep(args) -> int:
    cfg = cfgmod.load_config(args.config, tuple(args.override))
    h = config_hash(cfg)
    model = cfgmod.coupling_model_from(cfg)
    sweep_cfg = cfgmod.sweep_config_from(cfg)
    rows = run_sweep(sweep_cfg, model)
    out = _out_dir(args, cfg)
    prefix = _prefix(cfg, f"sweep_{sweep_cfg.lattice.kind.value}")
    cols = ["lambda_nm", "V1_cm^-1", "V2_cm^-1"] + list(sweep_cfg.observables)
    csv_rows = []
    for r in rows:
        base = [r.lam, r.v1, r.v2 if r.v2 is not None else float("nan")]
        csv_rows.append(base + [r.values[name] for name in sweep_cfg.observables])
    notes = [
        f"lattice: {sweep_cfg.lattice.kind.value} nx={sweep_cfg.lattice.nx} ny={sweep_cfg.lattice.ny}",
        f"coupling model: {model.label} (a={model.a!r}, b={model.b!r}, c={model.c!r})",
        f"device length L={sweep_cfg.device_length} cm, initial: {sweep_cfg.initial}",
    ]
    path = write_csv(out / f"{prefix}.csv", cols, csv_rows, header_lines=notes, cfg_hash=h)
    print(f"wrote {path}")
    return 0


def cmd_fit(args) -> int:
    cfg = cfgmod.load_config(args.config, tuple(args.override))
    h = config_hash(cfg)
    sec = cfg.get("fit", {})
    data_path = sec.get("data") if isinstance(sec, dict) else None
    if not data_path:
        raise ValidationError("fit config needs fit.data: path to a (lambda, V) CSV")
    try:
        names, raw_rows = read_csv_columns(data_path)
    except FileNotFoundError:
        raise ValidationError(f"data file not found: {data_path}")
    except ValueError as exc:
        raise ValidationError(f"malformed CSV {data_path}: {exc}")
    if len(names) < 2:
        raise ValidationError(f"malformed CSV {data_path}: need 2 columns (lambda, V)")
    points = []
    for lineno, fields in enumerate(raw_rows, start=2):
        try:
            points.append((float(fields[0]), float(fields[1])))
        except ValueError:
            raise ValidationError(f"malformed CSV {data_path}: line {lineno}: non-numeric field")
    fit = fit_quadratic(points)
    report = {
        "coefficients": {"a": fit.model.a, "b": fit.model.b, "c": fit.model.c},
        "lambda_range_nm": [fit.model.lambda_min, fit.model.lambda_max],
        "rms_residual": fit.rms_residual,
        "n_points": fit.n_points,
    }
    out = _out_dir(args, cfg)
    prefix = _prefix(cfg, "fit")
    path = write_json(out / f"{prefix}_report.json", report, cfg_hash=h)
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "bands": cmd_bands,
    "dos": cmd_dos,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeqo",
        description="Quantum-emitter radiation dynamics in 2D photonic lattices",
    )
    parser.add_argument("--version", action="version", version=f"latticeqo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("bands", "sample analytic band surfaces on a k-grid"),
        ("dos", "eigenvalues and density-of-states histogram of a finite lattice"),
        ("evolve", "propagate a single-site excitation along z"),
        ("sweep", "wavelength sweep at fixed device length"),
        ("fit", "quadratic coupling-vs-wavelength fit from CSV data"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--out", default=None, help="output directory (default: config or ./out)")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry on a dotted path, e.g. lattice.nx=25",
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"latticeqo {args.command}: config error: {exc}", file=sys.stderr)
        return 2
    except LatticeQOError as exc:
        print(f"latticeqo {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
