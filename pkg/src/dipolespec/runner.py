"""Command-line orchestration: fit, scan, oracle, converge, vdw.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 oracle failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .angular import TransitionScheme, ground_dipole_sq_sum
from .cloud import CloudError, generate_cloud
from .config import (LONG_RUNNING_PRESETS, PRESETS, ConfigError, ExperimentConfig,
                     load_config, preset_config)
from .geometry import Box
from .io import (write_converge_csv, write_fit_csv, write_scan_csv, write_sidecar,
                 write_vdw_csv)
from .medium import MediumModel, PermittivityError, fit_detuning, permittivity_scan
from .spectrum import NumericalError, scan, self_energy, self_energy_dense
from .vdw import QuadratureError, VdwSpec, vdw_shift_detailed

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ORACLE = 3


class OracleFailure(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        raise ConfigError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="dipolespec",
                description="Excitation spectrum of an atom near a dielectric "
                            "nanostructure, from a microscopic scatterer cloud")
    p.add_argument("--version", action="version", version=f"dipolespec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=str, help="JSON config path")
        sp.add_argument("--preset", type=str,
                        help=f"named preset ({', '.join(sorted(PRESETS))}); "
                             f"long-running: {', '.join(sorted(LONG_RUNNING_PRESETS))}")
        sp.add_argument("--seed", type=int, help="override master seed")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", type=str, help="output directory")
        sp.add_argument("--strict", action="store_true",
                        help="abort on per-point failures instead of recording them")

    sp_fit = sub.add_parser("fit", help="calibrate the medium detuning and scan eps(omega)")
    common(sp_fit)
    sp_fit.add_argument("--window", type=float, default=50.0,
                        help="scan half-width in Gamma_inf units")
    sp_fit.add_argument("--points", type=int, default=201)

    sp_scan = sub.add_parser("scan", help="spectrum vs atom-surface separation")
    common(sp_scan)

    sp_oracle = sub.add_parser("oracle", help="verify the fast solver against the dense inverse")
    common(sp_oracle)
    sp_oracle.add_argument("--instances", type=int, default=30)
    sp_oracle.add_argument("--max-n", type=int, default=50)
    sp_oracle.add_argument("--tolerance", type=float, default=1e-10)
    sp_oracle.add_argument("--corrupt-sign", action="store_true",
                           help="negative control: flip one coupling sign, must fail")

    sp_conv = sub.add_parser("converge", help="overlay scans at several densities")
    common(sp_conv)
    sp_conv.add_argument("--densities", type=str, required=True,
                         help="comma-separated n0 values, e.g. 5,10,15")
    sp_conv.add_argument("--trusted-from-nm", type=float, default=None,
                         help="lower edge of the deviation summary range")

    sp_vdw = sub.add_parser("vdw", help="ground-state van-der-Waals shift vs distance")
    common(sp_vdw)
    return p


def _load(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    if args.seed is not None:
        cfg.seed = int(args.seed)
        cfg.raw.setdefault("placement", {})["seed"] = int(args.seed)
    if args.out:
        cfg.out_dir = args.out
    return cfg


def cmd_fit(args) -> int:
    cfg = _load(args)
    model = cfg.model
    omegas = np.linspace(-args.window, args.window, args.points)
    eps = permittivity_scan(model, omegas)
    resolved = cfg.resolved_dict()
    out = Path(cfg.out_dir)
    write_fit_csv(out / "permittivity.csv", omegas, eps, resolved)
    write_sidecar(out / "fit.json", resolved, {
        "delta_M_over_gamma_inf": model.delta_M,
        "eps_at_omega0": [eps[len(eps) // 2].real, eps[len(eps) // 2].imag],
    })
    print(f"density n0 = {model.n0:g}  gamma_e = {model.gamma_e:g} Gamma_inf")
    print(f"delta_M = {model.delta_M:.6g} Gamma_inf")
    e0 = eps[len(eps) // 2]
    print(f"eps(omega0) = {e0.real:.6f} {e0.imag:+.2e}i"
          + (f"  (target {model.target_eps:g})" if model.target_eps else ""))
    print(f"wrote {out / 'permittivity.csv'}")
    return EXIT_OK


def _vdw_rows(cfg: ExperimentConfig):
    eps = cfg.model.target_eps if cfg.model.target_eps is not None else _achieved_eps(cfg)
    spec = VdwSpec(eps=float(eps),
                   dipole_sq_sum=ground_dipole_sq_sum(cfg.scheme),
                   geometry=cfg.geometry, quad_tol=cfg.vdw_quad_tol)
    rows = {}
    lam_bar = cfg.scheme.lambda_bar_nm
    for d_nm, d_int in zip(cfg.distances_nm, cfg.distances_internal):
        pos = cfg.geometry.atom_site(cfg.atom_placement, float(d_int))
        shift, err = vdw_shift_detailed(spec, pos)
        rows[round(float(d_nm), 9)] = (shift, err)
    return rows


def _achieved_eps(cfg: ExperimentConfig) -> float:
    from .medium import permittivity
    return float(permittivity(cfg.model, 0.0).real)


def cmd_scan(args) -> int:
    cfg = _load(args)
    t0 = time.perf_counter()
    result = scan(
        cfg.scheme, cfg.geometry, cfg.model,
        distances=cfg.distances_internal,
        atom_placement=cfg.atom_placement,
        placement=cfg.placement_mode,
        realizations=cfg.realizations,
        seed=cfg.seed, r_min=cfg.r_min,
        cluster_tol=cfg.cluster_tol,
        include_medium_linewidth=cfg.include_medium_linewidth,
        min_clearance=cfg.min_clearance_internal,
        threads=max(1, args.threads),
        memory_budget=cfg.memory_budget_bytes)
    vdw_rows = None
    vdw_failures = []
    if cfg.vdw_enabled:
        try:
            vdw_rows = _vdw_rows(cfg)
        except (QuadratureError, ValueError) as exc:
            if args.strict:
                raise
            vdw_failures.append(str(exc))
            vdw_rows = None
    resolved = cfg.resolved_dict()
    out = Path(cfg.out_dir)
    write_scan_csv(out / "scan.csv", result, cfg.scheme, resolved, vdw_rows)
    write_sidecar(out / "scan.json", resolved, {
        "diagnostics": result.diagnostics,
        "elapsed_s": time.perf_counter() - t0,
        "vdw_failures": vdw_failures,
        "points": len(result.points),
    })
    flagged = result.diagnostics.get("flagged_points", 0)
    print(f"N = {result.diagnostics['n_scatterers']} scatterers, "
          f"{len(result.points)} distances, {result.realizations} realization(s)"
          + (f", {flagged} flagged" if flagged else ""))
    print(f"wrote {out / 'scan.csv'}")
    if args.strict and flagged:
        raise NumericalError(f"{flagged} points failed label matching under --strict")
    return EXIT_OK


def _oracle_instance(rng: np.random.Generator, scheme: TransitionScheme,
                     max_n: int, corrupt_sign: bool) -> float:
    n = int(rng.integers(1, max_n + 1))
    half = float(n) ** (1 / 3) * 0.75 + 0.5
    geom = Box(lo=(-half, -half, -half), hi=(half, half, half))
    model = MediumModel(n0=n / geom.volume(), delta_M=float(rng.uniform(60.0, 300.0)))
    cloud = generate_cloud(geom, model, "disordered",
                           seed=int(rng.integers(2**31)), realization_index=0)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    pos = direction * (half * np.sqrt(3.0) + float(rng.uniform(0.5, 3.0)))
    fast = self_energy(scheme, cloud, pos)
    dense = self_energy_dense(scheme, cloud, pos)
    ref = np.abs(dense.matrix).max()
    fast_m = fast.matrix
    if corrupt_sign:
        # negative control: flip the sign of the medium-induced part
        vac = -0.5j * np.eye(scheme.n_excited)
        fast_m = vac - (fast_m - vac)
    return float(np.abs(fast_m - dense.matrix).max() / ref)


def cmd_oracle(args) -> int:
    if args.max_n > 100:
        raise ConfigError("oracle instances are capped at N = 100")
    schemes = [
        TransitionScheme(0, 1, 780.241, label="rb87-tripod"),
        TransitionScheme(3, 2, 780.241, label="rb87-f3f2"),
        TransitionScheme(5, 4, 852.347, label="cs133-f5f4"),
        TransitionScheme(1, 0, 780.241, label="v-type"),
    ]
    rng = np.random.default_rng(args.seed if args.seed is not None else 2024)
    errors = []
    for i in range(args.instances):
        scheme = schemes[i % len(schemes)]
        errors.append(_oracle_instance(rng, scheme, args.max_n, args.corrupt_sign))
    # exactness anchors
    from .cloud import DipoleCloud
    free = DipoleCloud(np.zeros((0, 3)), MediumModel(n0=1.0, delta_M=100.0),
                       Box(lo=(-1, -1, -1), hi=(1, 1, 1)), "ordered")
    sigma_free = self_energy(schemes[0], free, [3.0, 0.0, 0.0]).matrix
    free_err = float(np.abs(sigma_free - (-0.5j) * np.eye(1)).max())
    report = {
        "instances": args.instances,
        "max_n": args.max_n,
        "max_rel_error": max(errors),
        "free_atom_error": free_err,
        "tolerance": args.tolerance,
        "corrupt_sign": bool(args.corrupt_sign),
        "pass": bool(max(errors) < args.tolerance and free_err < 1e-14),
    }
    print(json.dumps(report, indent=2))
    if not report["pass"]:
        raise OracleFailure(f"max relative error {report['max_rel_error']:.3e} "
                            f"exceeds {args.tolerance:g}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load(args)
    densities = [float(x) for x in str(args.densities).split(",") if x.strip()]
    if len(densities) < 2:
        raise ConfigError("converge needs at least two densities")
    if len(set(densities)) != len(densities):
        raise ConfigError("densities must be distinct")
    target = cfg.model.target_eps
    if target is None:
        raise ConfigError("converge requires a medium calibrated to a target_eps "
                          "(all densities are refit to the same permittivity)")
    curves, errors, meta = {}, {}, {}
    for n0 in densities:
        model = MediumModel.calibrated(n0, target, cfg.model.gamma_e)
        result = scan(
            cfg.scheme, cfg.geometry, model,
            distances=cfg.distances_internal,
            atom_placement=cfg.atom_placement,
            placement=cfg.placement_mode,
            realizations=cfg.realizations,
            seed=cfg.seed, r_min=cfg.r_min,
            cluster_tol=cfg.cluster_tol,
            include_medium_linewidth=cfg.include_medium_linewidth,
            min_clearance=cfg.min_clearance_internal,
            threads=max(1, args.threads),
            memory_budget=cfg.memory_budget_bytes)
        key = f"{n0:g}"
        # multiplicity-weighted mean decay rate is well defined for any manifold
        curves[key] = np.array([
            sum(c.gamma * c.multiplicity for c in p.clusters) / sum(c.multiplicity for c in p.clusters)
            for p in result.points])
        errors[key] = np.array([
            sum(c.stderr_gamma * c.multiplicity for c in p.clusters) / sum(c.multiplicity for c in p.clusters)
            for p in result.points])
        meta[key] = {"delta_M": model.delta_M, "n_scatterers": result.diagnostics["n_scatterers"]}

    trusted_from = args.trusted_from_nm
    if trusted_from is None:
        trusted_from = float(cfg.distances_nm[0])
    mask = cfg.distances_nm >= trusted_from
    keys = sorted(curves, key=float)
    deviations = {}
    for i, ka in enumerate(keys):
        for kb in keys[:i]:
            rel = np.abs(curves[ka][mask] - curves[kb][mask]) / np.abs(curves[ka][mask])
            deviations[f"{kb}-vs-{ka}"] = float(rel.max())
    resolved = cfg.resolved_dict()
    out = Path(cfg.out_dir)
    write_converge_csv(out / "converge.csv", cfg.distances_nm, curves, errors, resolved)
    write_sidecar(out / "converge.json", resolved, {
        "densities": densities, "per_density": meta,
        "trusted_from_nm": trusted_from,
        "max_rel_deviation": deviations,
    })
    print(json.dumps({"max_rel_deviation": deviations}, indent=2))
    print(f"wrote {out / 'converge.csv'}")
    return EXIT_OK


def cmd_vdw(args) -> int:
    cfg = _load(args)
    eps = cfg.model.target_eps if cfg.model.target_eps is not None else _achieved_eps(cfg)
    spec = VdwSpec(eps=float(eps), dipole_sq_sum=ground_dipole_sq_sum(cfg.scheme),
                   geometry=cfg.geometry, quad_tol=cfg.vdw_quad_tol)
    rows = []
    for d_nm, d_int in zip(cfg.distances_nm, cfg.distances_internal):
        pos = cfg.geometry.atom_site(cfg.atom_placement, float(d_int))
        shift, err = vdw_shift_detailed(spec, pos)
        rows.append((float(d_nm), shift, err))
    resolved = cfg.resolved_dict()
    out = Path(cfg.out_dir)
    write_vdw_csv(out / "vdw.csv", rows, resolved)
    write_sidecar(out / "vdw.json", resolved, {"points": len(rows)})
    print(f"wrote {out / 'vdw.csv'}")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "scan": cmd_scan, "oracle": cmd_oracle,
            "converge": cmd_converge, "vdw": cmd_vdw}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PermittivityError, NumericalError, CloudError, QuadratureError,
            MemoryError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OracleFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
