"""Command line entry points.

Each subcommand reads a TOML or JSON config, merges it with built-in
defaults and any overriding flags, runs one workflow, and writes its
outputs plus a JSON manifest into the output directory. The manifest
records the fully resolved configuration, package version, every seed
used, and a checksum per output file, so a run can be reproduced from the
manifest alone.

Exit codes: 0 success, 2 configuration problems, 3 physics or grid
failures, 4 fit failures, 5 input and output failures. Errors print one
JSON line to stderr with the category, exception type, and message.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, replace
from datetime import datetime, timezone
from importlib import metadata, resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

import numpy as np

from .constants import SILICON, MaterialConstants
from .disorder import DotGeometry, dot_sweep_study, ensemble
from .envelope import solve_envelope
from .errors import ConfigError, WigglewellError
from .heterostructure import ProfileSpec, build_profile
from .spectrofit import (
    fit_lever_arm,
    fit_lever_arm_from_traces,
    fit_transition,
    load_trace_csv,
)
from .valley import ValleyModel, resolve_table, scan_q

_EXIT_BY_CATEGORY = {"config": 2, "grid": 3, "physics": 3, "fit": 4, "runtime": 1}

_PROFILE_KEYS = {
    "amplitude",
    "amplitude_convention",
    "wavevector",
    "wavelength",
    "well_width",
    "well_offset",
    "barrier_ge",
    "interface_width",
    "interface_shape",
    "phase_origin",
    "extent_below",
    "extent_above",
    "points_per_monolayer",
    "z_offset",
}

_MODEL_KEYS = {
    "mode",
    "table",
    "field_mv_per_m",
    "barrier_height_ev",
    "barrier_width_nm",
    "max_umklapp",
}

_DOT_KEYS = {"energy_x_mev", "energy_y_mev", "center_x_nm", "center_y_nm"}

_CONSTANTS_KEYS = {
    "lattice_constant",
    "valley_position",
    "mass_longitudinal",
    "mass_transverse",
    "alloy_shift",
    "hbar2_over_2m0",
}


def _package_version() -> str:
    try:
        return metadata.version("wigglewell")
    except metadata.PackageNotFoundError:
        return "unknown"


def _bundled_path(kind: str, name: str):
    return resources.as_file(
        resources.files("wigglewell").joinpath("data", kind, name)
    )


def _load_config(path: str) -> dict:
    if path.startswith("bundled:"):
        with _bundled_path("configs", path.split(":", 1)[1]) as real:
            return _load_config(str(real))
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_bytes()
    if p.suffix.lower() == ".json":
        return json.loads(text.decode("utf-8"))
    try:
        return tomllib.loads(text.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {unknown}; allowed: {sorted(allowed)}")


def _amplitude_convention(section: dict) -> str:
    convention = section.get("amplitude_convention", "peak")
    if convention not in ("peak", "average"):
        raise ConfigError(
            f"amplitude_convention must be 'peak' or 'average', got {convention!r}"
        )
    return convention


def _peak_amplitudes(values, section: dict) -> list[float]:
    """Amplitude lists follow the same convention as the scalar amplitude."""
    scale = 2.0 if _amplitude_convention(section) == "average" else 1.0
    return [scale * float(v) for v in values]


def _spec_from_config(section: dict) -> ProfileSpec:
    _check_keys(section, _PROFILE_KEYS, "profile")
    convention = _amplitude_convention(section)
    section = {k: v for k, v in section.items() if k != "amplitude_convention"}
    if convention == "average" and "amplitude" in section:
        section["amplitude"] = 2.0 * float(section["amplitude"])
    return ProfileSpec(**section)


def _constants_from_config(section: dict) -> MaterialConstants:
    _check_keys(section, _CONSTANTS_KEYS, "constants")
    if not section:
        return SILICON
    return MaterialConstants(**{k: float(v) for k, v in section.items()})


def _model_from_config(section: dict, args, constants: MaterialConstants = SILICON) -> ValleyModel:
    _check_keys(section, _MODEL_KEYS, "model")
    section = dict(section)
    table_ref = section.pop("table", "bundled:si_broken")
    if getattr(args, "table", None):
        table_ref = args.table
    mode = section.pop("mode", "perturbative")
    if getattr(args, "mode", None):
        mode = args.mode
    try:
        table = resolve_table(table_ref)
    except FileNotFoundError as exc:
        raise ConfigError(
            f"coefficient table not found: {table_ref!r}; pass --table with a CSV "
            "path (columns kx,ky,kz,re_c_plus,im_c_plus,re_c_minus,im_c_minus) or "
            "a bundled name (bundled:si_broken, bundled:si_symmetric, bundled:single)"
        ) from exc
    return ValleyModel(table=table, mode=mode, constants=constants, **section)


def _dot_from_config(section: dict) -> DotGeometry:
    _check_keys(section, _DOT_KEYS, "dot")
    return DotGeometry(**section)


def _out_dir(args) -> Path:
    if args.out:
        root = Path(args.out)
    elif os.environ.get("WIGGLEWELL_OUT"):
        root = Path(os.environ["WIGGLEWELL_OUT"])
    else:
        root = Path("wigglewell_out")
    root.mkdir(parents=True, exist_ok=True)
    return root


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _csv_rows(path: Path) -> int:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    return max(len(lines) - 1, 0)


def _validate_outputs(out: Path, files: list[str]) -> list[dict]:
    records = []
    for name in files:
        path = out / name
        if not path.exists():
            raise OSError(f"expected output {path} was not written")
        rows = None
        if path.suffix == ".csv":
            rows = _csv_rows(path)
            if rows < 1:
                raise OSError(f"output {path} has no data rows")
        elif path.suffix == ".json":
            json.loads(path.read_text(encoding="utf-8"))
        records.append({"path": name, "rows": rows, "sha256": _sha256(path)})
    return records


def _write_manifest(out: Path, command: str, config: dict, seeds: list[int], files: list[str]) -> Path:
    manifest = {
        "command": command,
        "package": "wigglewell",
        "version": _package_version(),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "seeds": seeds,
        "outputs": _validate_outputs(out, files),
    }
    path = out / f"{command.replace('-', '_')}_manifest.json"
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)
    print(f"manifest: {path}")
    return path


def _spec_dict(spec: ProfileSpec) -> dict:
    d = asdict(spec)
    d["resolved_wavevector"] = spec.resolved_wavevector()
    d["resolved_barrier_ge"] = spec.resolved_barrier_ge()
    d["amplitude_average"] = spec.amplitude_average
    return d


def _model_dict(model: ValleyModel) -> dict:
    return {
        "mode": model.mode,
        "table": model.table.source_label,
        "field_mv_per_m": model.field_mv_per_m,
        "barrier_height_ev": model.barrier_height_ev,
        "barrier_width_nm": model.barrier_width_nm,
        "max_umklapp": model.max_umklapp,
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_profile(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    constants = _constants_from_config(cfg.get("constants", {}))
    spec = _spec_from_config(cfg.get("profile", {}))
    model_cfg = {k: v for k, v in cfg.get("model", {}).items() if k != "mode"}
    model = _model_from_config(model_cfg, args, constants)
    env_cfg = dict(cfg.get("envelope", {}))
    _check_keys(env_cfg, {"n_states", "mass"}, "envelope")
    n_states = int(env_cfg.get("n_states", 2))
    mass = env_cfg.get("mass")

    out = _out_dir(args)
    profile = build_profile(spec, constants)
    potential = model.potential(profile)
    envelope = solve_envelope(potential, n_states, mass, constants)

    profile.to_csv(out / "profile.csv")
    potential.to_csv(out / "potential.csv")
    envelope.to_csv(out / "envelope.csv")
    _write_json(
        out / "energies.json",
        {
            "energies_ev": [float(e) for e in envelope.energies],
            "mass": envelope.mass,
            "dz_nm": envelope.dz,
        },
    )
    for name in ("profile.csv", "potential.csv", "envelope.csv", "energies.json"):
        print(f"wrote {out / name}")
    resolved = {
        "profile": _spec_dict(spec),
        "model": _model_dict(model),
        "envelope": {"n_states": n_states, "mass": mass},
    }
    _write_manifest(out, "profile", resolved, [],
                    ["profile.csv", "potential.csv", "envelope.csv", "energies.json"])
    return 0


def cmd_scan_q(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    constants = _constants_from_config(cfg.get("constants", {}))
    template = _spec_from_config(cfg.get("profile", {"wavevector": 1.0}))
    model = _model_from_config(cfg.get("model", {}), args, constants)
    scan_cfg = dict(cfg.get("scan", {}))
    _check_keys(scan_cfg, {"q_min", "q_max", "n_points", "q_values", "amplitudes"}, "scan")
    if "q_values" in scan_cfg:
        q_values = np.asarray(scan_cfg["q_values"], dtype=float)
    else:
        q_values = np.linspace(
            float(scan_cfg.get("q_min", 0.5)),
            float(scan_cfg.get("q_max", 25.0)),
            int(scan_cfg.get("n_points", 50)),
        )
    if "amplitudes" in scan_cfg:
        amplitudes = _peak_amplitudes(scan_cfg["amplitudes"], cfg.get("profile", {}))
    else:
        amplitudes = [template.amplitude]

    out = _out_dir(args)
    files: list[str] = []
    curves = []
    combined: list[str] = []
    for amp in amplitudes:
        spec = replace(template, amplitude=amp)
        curve = scan_q(spec, q_values, model, workers=args.workers)
        name = f"scan_q_amp{amp:g}.csv"
        curve.to_csv(out / name)
        print(f"wrote {out / name}")
        files.append(name)
        curves.append({"amplitude_peak": amp, "file": name, **curve.metadata})
        combined.extend(
            f"{amp!r},{float(q)!r},{float(e)!r},{float(e) * 1e6!r}"
            for q, e in zip(curve.wavevectors, curve.splitting_ev)
        )
    with open(out / "scan_q_combined.csv", "w", encoding="utf-8") as fh:
        fh.write("amplitude_peak,q_inv_nm,E_v_eV,E_v_ueV\n")
        fh.write("\n".join(combined) + "\n")
    print(f"wrote {out / 'scan_q_combined.csv'}")
    files.append("scan_q_combined.csv")
    _write_json(out / "scan_q_summary.json", {"curves": curves})
    print(f"wrote {out / 'scan_q_summary.json'}")
    files.append("scan_q_summary.json")
    resolved = {
        "profile": _spec_dict(template),
        "model": _model_dict(model),
        "scan": {
            "q_values": [float(q) for q in q_values],
            "amplitudes": amplitudes,
        },
        "workers": args.workers,
    }
    _write_manifest(out, "scan-q", resolved, [], files)
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    constants = _constants_from_config(cfg.get("constants", {}))
    spec = _spec_from_config(cfg.get("profile", {}))
    model = _model_from_config(cfg.get("model", {}), args, constants)
    ens_cfg = dict(cfg.get("ensemble", {}))
    _check_keys(
        ens_cfg, {"n_samples", "base_seed", "extent", "amplitudes"}, "ensemble"
    )
    dot = _dot_from_config(cfg.get("dot", {}))
    n_samples = int(ens_cfg.get("n_samples", 40))
    base_seed = int(args.seed if args.seed is not None else ens_cfg.get("base_seed", 1))
    extent = tuple(float(v) for v in ens_cfg.get("extent", (120.0, 120.0)))
    if "amplitudes" in ens_cfg:
        amplitudes = _peak_amplitudes(ens_cfg["amplitudes"], cfg.get("profile", {}))
    else:
        amplitudes = [spec.amplitude]

    out = _out_dir(args)
    files: list[str] = []
    runs = []
    seeds = list(range(base_seed, base_seed + n_samples))
    for amp in amplitudes:
        # the same seed list for every amplitude pairs the comparisons
        run = ensemble(
            replace(spec, amplitude=amp),
            model,
            dot,
            n_samples,
            base_seed,
            extent=extent,
            workers=args.workers,
        )
        name = f"ensemble_amp{amp:g}.csv"
        run.to_csv(out / name)
        print(f"wrote {out / name}")
        files.append(name)
        runs.append({"amplitude_peak": amp, "file": name, "summary": run.summary()})
    _write_json(out / "ensemble_summary.json", {"runs": runs})
    print(f"wrote {out / 'ensemble_summary.json'}")
    files.append("ensemble_summary.json")
    resolved = {
        "profile": _spec_dict(spec),
        "model": _model_dict(model),
        "dot": asdict(dot),
        "ensemble": {
            "n_samples": n_samples,
            "base_seed": base_seed,
            "extent": list(extent),
            "amplitudes": amplitudes,
        },
        "workers": args.workers,
    }
    _write_manifest(out, "ensemble", resolved, seeds, files)
    return 0


def cmd_dot_sweep(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    constants = _constants_from_config(cfg.get("constants", {}))
    spec = _spec_from_config(cfg.get("profile", {}))
    model = _model_from_config(cfg.get("model", {}), args, constants)
    sweep_cfg = dict(cfg.get("dot_sweep", {}))
    _check_keys(
        sweep_cfg,
        {"n_seeds", "base_seed", "y0_range_nm", "energy_span_mev", "n_points", "extent"},
        "dot_sweep",
    )
    dot = _dot_from_config(cfg.get("dot", {}))
    n_seeds = int(sweep_cfg.get("n_seeds", 10))
    base_seed = int(args.seed if args.seed is not None else sweep_cfg.get("base_seed", 1))
    y0_range = float(sweep_cfg.get("y0_range_nm", 20.0))
    span = tuple(float(v) for v in sweep_cfg.get("energy_span_mev", (1.0, 2.0)))
    n_points = int(sweep_cfg.get("n_points", 2))
    extent = sweep_cfg.get("extent")
    if extent is not None:
        extent = tuple(float(v) for v in extent)

    out = _out_dir(args)
    study = dot_sweep_study(
        spec,
        model,
        dot,
        n_seeds,
        base_seed,
        y0_range_nm=y0_range,
        energy_span_mev=span,
        n_points=n_points,
        extent=extent,
        workers=args.workers,
    )
    study.to_csv(out / "dot_sweep.csv")
    _write_json(out / "dot_sweep_summary.json", study.summary())
    for name in ("dot_sweep.csv", "dot_sweep_summary.json"):
        print(f"wrote {out / name}")
    resolved = {
        "profile": _spec_dict(spec),
        "model": _model_dict(model),
        "dot": asdict(dot),
        "dot_sweep": {
            "n_seeds": n_seeds,
            "base_seed": base_seed,
            "y0_range_nm": y0_range,
            "energy_span_mev": list(span),
            "n_points": n_points,
            "extent": list(extent) if extent else None,
        },
        "workers": args.workers,
    }
    seeds = list(range(base_seed, base_seed + n_seeds))
    _write_manifest(out, "dot-sweep", resolved, seeds, ["dot_sweep.csv", "dot_sweep_summary.json"])
    return 0


def _resolve_trace(ref: str, sidecar=None):
    if ref.startswith("bundled:"):
        with _bundled_path("traces", ref.split(":", 1)[1]) as real:
            return load_trace_csv(real, sidecar)
    return load_trace_csv(ref, sidecar)


def cmd_fit_transition(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    fit_cfg = dict(cfg.get("fit_transition", {}))
    _check_keys(fit_cfg, {"trace", "sidecar", "max_iter"}, "fit_transition")
    trace_ref = args.trace or fit_cfg.get("trace")
    if not trace_ref:
        raise ConfigError("fit-transition needs a trace path (config key trace or --trace)")
    trace = _resolve_trace(trace_ref, fit_cfg.get("sidecar"))
    fit = fit_transition(trace, max_iter=int(fit_cfg.get("max_iter", 200)))

    out = _out_dir(args)
    _write_json(out / "transition_fit.json", fit.to_dict())
    print(f"wrote {out / 'transition_fit.json'}")
    print(
        f"center {fit.center_v:.6g} V, width {fit.width_v:.6g} V, "
        f"broadening {fit.broadening_kv_per_ev:.6g} K V/eV"
    )
    resolved = {"fit_transition": {"trace": trace_ref, "max_iter": int(fit_cfg.get("max_iter", 200))}}
    _write_manifest(out, "fit-transition", resolved, [], ["transition_fit.json"])
    return 0


def cmd_fit_leverarm(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    fit_cfg = dict(cfg.get("fit_leverarm", {}))
    _check_keys(fit_cfg, {"traces", "points_csv", "max_iter"}, "fit_leverarm")
    out = _out_dir(args)
    max_iter = int(fit_cfg.get("max_iter", 200))

    trace_fits: list[dict] = []
    if "traces" in fit_cfg:
        traces = [_resolve_trace(ref) for ref in fit_cfg["traces"]]
        lever, fits = fit_lever_arm_from_traces(traces, max_iter=max_iter)
        trace_fits = [f.to_dict() for f in fits]
        points = [
            (f.mixing_temp_k, f.broadening_kv_per_ev, f.broadening_err) for f in fits
        ]
    elif "points_csv" in fit_cfg:
        raw = np.genfromtxt(fit_cfg["points_csv"], delimiter=",", names=True, comments="#")
        temps = np.atleast_1d(raw["T_MC_K"])
        taus = np.atleast_1d(raw["broadening_kv_per_ev"])
        errs = (
            np.atleast_1d(raw["broadening_err"])
            if "broadening_err" in (raw.dtype.names or ())
            else None
        )
        lever = fit_lever_arm(temps, taus, errs)
        points = [
            (float(t), float(b), float(e) if errs is not None else 0.0)
            for t, b, e in zip(temps, taus, errs if errs is not None else np.zeros_like(taus))
        ]
    else:
        raise ConfigError("fit-leverarm needs either traces or points_csv in its config")

    with open(out / "leverarm_points.csv", "w", encoding="utf-8") as fh:
        fh.write("T_MC_K,broadening_kv_per_ev,broadening_err\n")
        for t, b, e in points:
            fh.write(f"{float(t)!r},{float(b)!r},{float(e)!r}\n")
    _write_json(
        out / "leverarm_fit.json",
        {"lever_arm": lever.to_dict(), "trace_fits": trace_fits},
    )
    for name in ("leverarm_points.csv", "leverarm_fit.json"):
        print(f"wrote {out / name}")
    print(
        f"lever arm {lever.lever_arm_ev_per_v:.6g} eV/V "
        f"(+- {lever.lever_arm_err:.2g}), base temperature "
        f"{lever.base_temp_k:.6g} K (+- {lever.base_temp_err:.2g})"
    )
    resolved = {"fit_leverarm": {**fit_cfg, "max_iter": max_iter}}
    _write_manifest(out, "fit-leverarm", resolved, [], ["leverarm_points.csv", "leverarm_fit.json"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wigglewell",
        description="Valley splitting workflows for Si/SiGe wells with an "
        "oscillating Ge concentration.",
        epilog="Outputs land in --out, then $WIGGLEWELL_OUT, then ./wigglewell_out. "
        "Exit codes: 0 ok, 2 config, 3 physics or grid, 4 fit, 5 io.",
    )
    parser.add_argument("--version", action="version", version=_package_version())

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config file, or bundled:<name>")
    common.add_argument("--out", help="output directory")

    compute = argparse.ArgumentParser(add_help=False)
    compute.add_argument("--seed", type=int, help="override the base seed")
    compute.add_argument("--workers", type=int, default=1, help="parallel workers")
    compute.add_argument(
        "--mode", choices=["perturbative", "two-component"], help="splitting route"
    )
    compute.add_argument("--table", help="Bloch table: bundled:<name> or a CSV path")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", parents=[common, compute],
                       help="profile, band potential, and envelope states")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("scan-q", parents=[common, compute],
                       help="splitting versus concentration wavevector")
    p.set_defaults(func=cmd_scan_q)

    p = sub.add_parser("ensemble", parents=[common, compute],
                       help="alloy disorder ensemble of splittings")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("dot-sweep", parents=[common, compute],
                       help="move or resize a dot inside frozen realizations")
    p.set_defaults(func=cmd_dot_sweep)

    p = sub.add_parser("fit-transition", parents=[common],
                       help="fit one thermally broadened transition")
    p.add_argument("--trace", help="trace CSV path or bundled:<name>")
    p.set_defaults(func=cmd_fit_transition)

    p = sub.add_parser("fit-leverarm", parents=[common],
                       help="fit lever arm and base temperature")
    p.set_defaults(func=cmd_fit_leverarm)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WigglewellError as exc:
        payload = {
            "error": exc.category,
            "type": type(exc).__name__,
            "message": str(exc),
        }
        print(json.dumps(payload), file=sys.stderr)
        return _EXIT_BY_CATEGORY.get(exc.category, 1)
    except OSError as exc:
        payload = {"error": "io", "type": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
