"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one `ACCEPTANCE <name>: PASS/FAIL` line (visible with -s,
or in the failure report).  Budgeted runtimes are asserted only where the
stated budget is a hard number well above our measured cost.
"""

import time

import numpy as np
import pytest

from dipolespec.angular import TransitionScheme, ground_dipole_sq_sum
from dipolespec.cloud import generate_cloud
from dipolespec.config import preset_config
from dipolespec.geometry import Box
from dipolespec.medium import MediumModel, fit_detuning, permittivity_scan
from dipolespec.runner import main
from dipolespec.spectrum import scan, self_energy, self_energy_dense
from dipolespec.vdw import (VdwSpec, image_potential_flat, kernel_volume_integral,
                            slab_approximating_halfspace, vdw_shift)

EPS_SILICA = 1.45**2


def _report(name: str, ok: bool, detail: str):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_calibration_table():
    t0 = time.perf_counter()
    table = {5: 58.0, 10: 117.0, 15: 175.0, 20: 233.0}
    worst = 0.0
    for n0, ref in table.items():
        delta = fit_detuning(n0, 1.0, EPS_SILICA)
        worst = max(worst, abs(delta - ref))
    elapsed = time.perf_counter() - t0
    _report("calibration-table", worst < 2.0 and elapsed < 1.0,
            f"max |delta_M - reference| = {worst:.2f} Gamma_inf, {elapsed:.2f} s")


def test_permittivity_flatness():
    # stated criterion: Re eps within 0.5% of 2.1025 over omega0 +/- 10
    # Gamma_inf for the (20, 233) model
    t0 = time.perf_counter()
    model = MediumModel.calibrated(20, EPS_SILICA)
    omegas = np.linspace(-10.0, 10.0, 201)
    eps = permittivity_scan(model, omegas)
    dev = np.abs(eps.real - EPS_SILICA).max() / EPS_SILICA
    elapsed = time.perf_counter() - t0
    _report("permittivity-flatness", dev <= 0.005 and elapsed < 1.0,
            f"max |Re eps - {EPS_SILICA}| / {EPS_SILICA} = {dev:.3%} over +/-10 Gamma_inf")


def test_oracle_equivalence():
    t0 = time.perf_counter()
    schemes = [
        TransitionScheme(0, 1, 780.241, label="rb87-tripod"),
        TransitionScheme(3, 2, 780.241, label="rb87-f3f2"),
        TransitionScheme(5, 4, 852.347, label="cs133-f5f4"),
        TransitionScheme(1, 0, 780.241, label="v-type"),
    ]
    rng = np.random.default_rng(424242)
    worst = 0.0
    for i in range(30):
        scheme = schemes[i % 4]
        n = int(rng.integers(1, 51))
        half = float(n) ** (1 / 3) * 0.75 + 0.5
        geom = Box(lo=(-half, -half, -half), hi=(half, half, half))
        model = MediumModel(n0=n / geom.volume(), delta_M=float(rng.uniform(60.0, 300.0)))
        cloud = generate_cloud(geom, model, "disordered", seed=int(rng.integers(2**31)))
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        pos = direction * (half * np.sqrt(3.0) + float(rng.uniform(0.5, 3.0)))
        fast = self_energy(scheme, cloud, pos).matrix
        dense = self_energy_dense(scheme, cloud, pos).matrix
        worst = max(worst, float(np.abs(fast - dense).max() / np.abs(dense).max()))
    elapsed = time.perf_counter() - t0
    _report("oracle-equivalence", worst < 1e-10 and elapsed < 30.0,
            f"30 instances, N <= 50, max rel err = {worst:.2e}, {elapsed:.1f} s")


def test_vdw_flat_surface():
    t0 = time.perf_counter()
    lam_bar = 780.241 / (2 * np.pi)
    worst_surface = 0.0
    for z_nm in (100.0, 200.0, 400.0):
        z = z_nm / lam_bar
        val, _ = kernel_volume_integral(slab_approximating_halfspace(z), [0, 0, z], 5e-7)
        exact = np.pi / (6 * z**3)
        worst_surface = max(worst_surface, abs(val - exact) / exact)
    # eps -> 1 limit: both reduce to -(eps - 1) S / (24 z^3)
    eps, z, s = 1.0001, 1.5, 0.25
    spec = VdwSpec(eps, s, slab_approximating_halfspace(z), 1e-7)
    shift = vdw_shift(spec, [0, 0, z])
    limit = -(eps - 1.0) * s / (24.0 * z**3)
    image = image_potential_flat(eps, s, z)
    lim_dev = max(abs(shift - limit) / abs(limit), abs(image - limit) / abs(limit))
    elapsed = time.perf_counter() - t0
    _report("vdw-flat-surface",
            worst_surface < 1e-6 and lim_dev < 1e-4 and elapsed < 10.0,
            f"half-space dev = {worst_surface:.2e}, eps->1 dev = {lim_dev:.2e}, "
            f"{elapsed:.1f} s")


def test_free_atom_asymptote():
    t0 = time.perf_counter()
    cfg = preset_config("fig2-desk")
    result = scan(cfg.scheme, cfg.geometry, cfg.model,
                  distances=cfg.distances_internal,
                  atom_placement=cfg.atom_placement,
                  placement=cfg.placement_mode, seed=cfg.seed,
                  cluster_tol=cfg.cluster_tol,
                  min_clearance=cfg.min_clearance_internal,
                  memory_budget=cfg.memory_budget_bytes)
    d_nm = cfg.distances_nm
    gam = np.array([p.clusters[0].gamma for p in result.points])
    dl = np.array([p.clusters[0].delta for p in result.points])
    a_nm = 200.0
    at_far = np.isclose(d_nm, 10 * a_nm)
    assert at_far.any()
    far_ok = bool((0.95 < gam[at_far][0] < 1.05) and abs(dl[at_far][0]) < 0.02)
    window = (d_nm >= 1.25 * a_nm) & (d_nm <= 4 * a_nm)
    gam_win = gam[window]
    slopes = np.diff(gam_win)
    sign_changes = int(np.sum(np.sign(slopes[1:]) * np.sign(slopes[:-1]) < 0))
    near_ok = bool(gam_win.max() > 1.05 and sign_changes >= 2)
    elapsed = time.perf_counter() - t0
    _report("free-atom-asymptote", far_ok and near_ok,
            f"Gamma(10a) = {gam[at_far][0]:.4f}, Delta(10a) = {dl[at_far][0]:+.4f}, "
            f"max Gamma = {gam_win.max():.3f}, slope sign changes = {sign_changes}, "
            f"N = {result.diagnostics['n_scatterers']}, {elapsed:.0f} s")


def test_degeneracy_pattern():
    t0 = time.perf_counter()
    cfg = preset_config("fig3-desk")
    result = scan(cfg.scheme, cfg.geometry, cfg.model,
                  distances=cfg.distances_internal,
                  atom_placement=cfg.atom_placement,
                  placement=cfg.placement_mode, seed=cfg.seed,
                  cluster_tol=cfg.cluster_tol,
                  min_clearance=cfg.min_clearance_internal,
                  memory_budget=cfg.memory_budget_bytes)
    ok = True
    details = []
    for point, d_nm in zip(result.points, cfg.distances_nm):
        mults = sorted(c.multiplicity for c in point.clusters)
        width = max(c.width for c in point.clusters)
        good = (len(point.clusters) == 6 and mults == [1, 2, 2, 2, 2, 2]
                and width < 1e-2)
        ok = ok and good
        details.append(f"{d_nm:.0f}nm:{len(point.clusters)}cl,w={width:.1e}")
    elapsed = time.perf_counter() - t0
    _report("degeneracy-pattern", ok,
            f"{'; '.join(details)}, N = {result.diagnostics['n_scatterers']}, "
            f"{elapsed:.0f} s")


def test_subradiance_signature():
    t0 = time.perf_counter()
    cfg = preset_config("fig7-desk")
    result = scan(cfg.scheme, cfg.geometry, cfg.model,
                  distances=cfg.distances_internal,
                  atom_placement=cfg.atom_placement,
                  placement=cfg.placement_mode, seed=cfg.seed,
                  cluster_tol=cfg.cluster_tol,
                  min_clearance=cfg.min_clearance_internal,
                  memory_budget=cfg.memory_budget_bytes)
    max_m = int(2 * cfg.scheme.F_excited) // 2  # 3 for the F=3 manifold
    hits = []
    for point, d_nm in zip(result.points, cfg.distances_nm):
        top = [c for c in point.clusters if c.label == max_m]
        if not top:
            continue
        g_top = min(c.gamma for c in top)
        g_other = max((c.gamma for c in point.clusters if c.label != max_m),
                      default=0.0)
        if g_top <= 1.02 and g_other > 1.1:
            hits.append(f"x={d_nm:.0f}nm: Gam(|M|={max_m}) = {g_top:.3f}, "
                        f"other = {g_other:.3f}")
    elapsed = time.perf_counter() - t0
    _report("subradiance-signature", len(hits) >= 1,
            f"{len(hits)} separation(s) qualify; {hits[:2]}, {elapsed:.0f} s")


def test_density_convergence():
    t0 = time.perf_counter()
    base = preset_config("fig2-desk")
    distances_nm = np.linspace(250.0, 800.0, 10)
    curves = {}
    for n0 in (5.0, 10.0, 15.0):
        model = MediumModel.calibrated(n0, EPS_SILICA)
        result = scan(base.scheme, base.geometry, model,
                      distances=distances_nm / base.scheme.lambda_bar_nm,
                      atom_placement="radial", placement="disordered",
                      realizations=6, seed=7, cluster_tol=1e-2,
                      min_clearance=base.min_clearance_internal,
                      memory_budget=base.memory_budget_bytes, threads=2)
        curves[n0] = np.array([p.clusters[0].gamma for p in result.points])
    dev_low = np.abs(curves[5.0] - curves[10.0]) / curves[10.0]
    dev_high = np.abs(curves[10.0] - curves[15.0]) / curves[15.0]
    elapsed = time.perf_counter() - t0
    _report("density-convergence", dev_high.max() < dev_low.max(),
            f"max rel dev {{10,15}} = {dev_high.max():.3f} < "
            f"{{5,10}} = {dev_low.max():.3f}, rho/a >= 1.25, {elapsed:.0f} s")


def test_determinism_across_threads(tmp_path):
    t0 = time.perf_counter()
    out1, out2 = tmp_path / "t1", tmp_path / "t2"
    assert main(["scan", "--preset", "fig11-desk", "--threads", "1",
                 "--out", str(out1)]) == 0
    assert main(["scan", "--preset", "fig11-desk", "--threads", "2",
                 "--out", str(out2)]) == 0
    same = (out1 / "scan.csv").read_bytes() == (out2 / "scan.csv").read_bytes()
    elapsed = time.perf_counter() - t0
    _report("determinism", same,
            f"fig11-desk scan.csv byte-identical across --threads 1/2, {elapsed:.0f} s")
