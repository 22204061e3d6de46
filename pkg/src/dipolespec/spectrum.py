"""Excited-manifold self-energy of the reference atom near the scatterer cloud.

The single-excitation resolvent problem reduces, by block elimination at the
atomic pole energy, to

    Sigma = -i/2 I  +  sum_m  d_nm . T . d_mn',      T = K^T A0^{-1} K,

where A0 is the 3N x 3N medium block (diagonal -delta_M, pairwise field
propagator couplings), K the 3N x 3 atom-medium coupling block, and d_nm the
Cartesian dipole components of the reference transition.  The reference
atom's ground sublevel is a spectator in the medium block, so one
factorization of A0 and three right-hand sides serve any ground-manifold
size -- and any number of atom positions, since A0 does not depend on the
atom at all.

Eigenvalues lambda_n = Delta_n - i Gamma_n / 2 of Sigma give the level
shifts and decay rates in units of Gamma_inf.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .angular import TransitionScheme, dipole_components_cartesian, spin_matrices
from .cloud import DipoleCloud, generate_cloud
from .geometry import Geometry
from .greens import green_tensor_stack, pairwise_green_blocks
from .medium import MediumModel

__all__ = [
    "NumericalError",
    "MediumBlock",
    "FactoredMedium",
    "SelfEnergyMatrix",
    "Cluster",
    "SpectrumPoint",
    "ScanResult",
    "assemble_medium_block",
    "coupling_block",
    "factor_medium_block",
    "self_energy",
    "self_energy_sweep",
    "self_energy_dense",
    "diagonalize",
    "symmetry_labels",
    "scan",
]

DEFAULT_MEMORY_BUDGET = 8 << 30  # bytes for the A0 block
DEFAULT_CLUSTER_TOL_ORDERED = 1e-3
DEFAULT_CLUSTER_TOL_DISORDERED = 1e-2


class NumericalError(RuntimeError):
    """Linear algebra failed in a way that must not pass silently."""


@dataclass(frozen=True)
class MediumBlock:
    """A0 of the medium sector, independent of the reference atom."""

    matrix: np.ndarray
    cloud: DipoleCloud
    include_medium_linewidth: bool


@dataclass(frozen=True)
class FactoredMedium:
    lu: np.ndarray
    piv: np.ndarray
    cloud: DipoleCloud
    rcond: float


@dataclass(frozen=True)
class SelfEnergyMatrix:
    matrix: np.ndarray  # (n_e, n_e)
    atom_position: np.ndarray
    n_scatterers: int
    realization_index: int = 0
    rcond: float = np.inf

    def decay_part_min_eig(self) -> float:
        m = self.matrix
        return float(np.linalg.eigvalsh(1j * (m - m.conj().T) / 2.0).min())

    def validate(self, tol: float = 1e-8) -> "SelfEnergyMatrix":
        low = self.decay_part_min_eig()
        if low < -tol:
            raise NumericalError(
                f"self-energy decay part is not dissipative: min eig {low:g} < -{tol:g} "
                "(a scatterer pair is likely resonant with the detuning; increase the "
                "hard-core exclusion radius r_min)"
            )
        return self


@dataclass(frozen=True)
class Cluster:
    gamma: float
    delta: float
    multiplicity: int
    label: int | None = None
    low_confidence: bool = False
    width: float = 0.0
    stderr_gamma: float = 0.0
    stderr_delta: float = 0.0
    members: tuple[int, ...] = ()


@dataclass(frozen=True)
class SpectrumPoint:
    distance: float  # internal units
    atom_position: np.ndarray
    clusters: tuple[Cluster, ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, non-orthogonal in general
    n_realizations: int = 1
    flagged: bool = False
    rcond: float = np.inf


@dataclass(frozen=True)
class ScanResult:
    points: list[SpectrumPoint]
    distances: np.ndarray
    realizations: int
    placement: str
    diagnostics: dict = field(default_factory=dict)


def _estimate_bytes(n_scatterers: int) -> int:
    return 16 * (3 * n_scatterers) ** 2


def assemble_medium_block(cloud: DipoleCloud, include_medium_linewidth: bool = False,
                          memory_budget: int = DEFAULT_MEMORY_BUDGET) -> MediumBlock:
    """Build A0: diagonal -delta_M (optionally -i gamma_e/2) plus couplings.

    The off-diagonal 3x3 blocks are -f0^2 D(r_b - r_a); complex symmetric in
    the Cartesian scatterer basis.
    """
    n = cloud.n
    if n < 1:
        raise ValueError("medium block needs at least one scatterer")
    need = _estimate_bytes(n)
    if need > memory_budget:
        raise MemoryError(
            f"A0 for N = {n} needs {need / 2**30:.2f} GiB "
            f"(budget {memory_budget / 2**30:.2f} GiB)"
        )
    model = cloud.model
    a0 = np.zeros((3 * n, 3 * n), dtype=complex)
    pairwise_green_blocks(cloud.positions, 1.0, a0)
    a0 *= -model.f0_sq
    diag = -model.delta_M + (-0.5j * model.gamma_e if include_medium_linewidth else 0.0)
    idx = np.arange(3 * n)
    a0[idx, idx] = diag
    return MediumBlock(matrix=a0, cloud=cloud, include_medium_linewidth=include_medium_linewidth)


def coupling_block(cloud: DipoleCloud, atom_position) -> np.ndarray:
    """K[(a, e), nu] = f0 D_{e nu}(r_atom - r_a); shape (3N, 3)."""
    pos = np.asarray(atom_position, dtype=float)
    d = green_tensor_stack(cloud.positions, pos, 1.0)  # (N, 3, 3)
    f0 = np.sqrt(cloud.model.f0_sq)
    return (f0 * d).reshape(3 * cloud.n, 3)


def factor_medium_block(block: MediumBlock, overwrite: bool = False) -> FactoredMedium:
    """LU-factor A0 once; ``overwrite`` destroys block.matrix to halve peak memory."""
    a0 = block.matrix
    anorm = np.abs(a0).sum(axis=0).max()
    try:
        lu, piv = sla.lu_factor(a0, overwrite_a=overwrite, check_finite=False)
    except sla.LinAlgError as exc:  # pragma: no cover - hard to trigger
        raise NumericalError(f"medium block factorization failed: {exc}") from exc
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < 1e-14:
        raise NumericalError(
            f"medium block is numerically singular (rcond = {rcond:.3e}); "
            "the detuning sits on a collective medium resonance"
        )
    return FactoredMedium(lu=lu, piv=piv, cloud=block.cloud, rcond=float(rcond))


@lru_cache(maxsize=16)
def _dipole_pair_tensor(scheme: TransitionScheme) -> np.ndarray:
    """P[mu, nu] = d^mu_ng d^nu_gn' summed over the ground manifold; (3,3,ne,ne)."""
    d = dipole_components_cartesian(scheme)
    return np.einsum("meg,nfg->mnef", d, d.conj())


def _sigma_from_t(scheme: TransitionScheme, t3: np.ndarray) -> np.ndarray:
    n_e = scheme.n_excited
    p = _dipole_pair_tensor(scheme)
    return -0.5j * np.eye(n_e) + np.einsum("mn,mnef->ef", t3, p)


def _clearance_check(geometry: Geometry, position, min_clearance: float) -> None:
    d = geometry.distance_outside(position)
    if d <= 0.0:
        raise ValueError("atom position lies inside the dielectric volume")
    if d < min_clearance:
        raise ValueError(
            f"atom clearance {d:g} below configured minimum {min_clearance:g} "
            "(internal units)"
        )


def self_energy(scheme: TransitionScheme, cloud: DipoleCloud, atom_position,
                factored: FactoredMedium | None = None,
                include_medium_linewidth: bool = False,
                min_clearance: float = 0.0,
                memory_budget: int = DEFAULT_MEMORY_BUDGET) -> SelfEnergyMatrix:
    """Sigma(r) of the excited manifold at one atom position."""
    return self_energy_sweep(scheme, cloud, [atom_position], factored=factored,
                             include_medium_linewidth=include_medium_linewidth,
                             min_clearance=min_clearance, memory_budget=memory_budget)[0]


def self_energy_sweep(scheme: TransitionScheme, cloud: DipoleCloud, positions,
                      factored: FactoredMedium | None = None,
                      include_medium_linewidth: bool = False,
                      min_clearance: float = 0.0,
                      memory_budget: int = DEFAULT_MEMORY_BUDGET) -> list[SelfEnergyMatrix]:
    """Sigma(r) at many atom positions sharing one factorization of A0."""
    positions = [np.asarray(p, dtype=float) for p in positions]
    for p in positions:
        _clearance_check(cloud.geometry, p, min_clearance)
    n_e = scheme.n_excited
    if cloud.n == 0:
        sigma = -0.5j * np.eye(n_e)
        return [SelfEnergyMatrix(matrix=sigma.copy(), atom_position=p, n_scatterers=0,
                                 realization_index=cloud.realization_index).validate()
                for p in positions]
    if factored is None:
        factored = factor_medium_block(
            assemble_medium_block(cloud, include_medium_linewidth, memory_budget))
    ks = np.hstack([coupling_block(cloud, p) for p in positions])  # (3N, 3P)
    xs = sla.lu_solve((factored.lu, factored.piv), ks, check_finite=False)
    out = []
    for i, p in enumerate(positions):
        k = ks[:, 3 * i:3 * i + 3]
        x = xs[:, 3 * i:3 * i + 3]
        t3 = k.T @ x
        out.append(SelfEnergyMatrix(
            matrix=_sigma_from_t(scheme, t3), atom_position=p, n_scatterers=cloud.n,
            realization_index=cloud.realization_index, rcond=factored.rcond).validate())
    return out


def self_energy_dense(scheme: TransitionScheme, cloud: DipoleCloud, atom_position,
                      include_medium_linewidth: bool = False) -> SelfEnergyMatrix:
    """Brute-force oracle: invert the full single-excitation block matrix.

    Builds the (n_e + n_g 3N)-dimensional matrix of the resolvent equation at
    the pole energy, inverts it densely, and extracts the self-energy from
    the inverse of the top-left block of the inverse.  O((n_g N)^3); for
    verification only.
    """
    pos = np.asarray(atom_position, dtype=float)
    n_e, n_g = scheme.n_excited, scheme.n_ground
    n = cloud.n
    dim = n_e + n_g * 3 * n
    m = np.zeros((dim, dim), dtype=complex)
    m[:n_e, :n_e] = 0.5j * np.eye(n_e)
    if n > 0:
        a0 = assemble_medium_block(cloud, include_medium_linewidth).matrix
        k = coupling_block(cloud, pos)  # (3N, 3)
        d = dipole_components_cartesian(scheme)  # (3, n_e, n_g)
        # coupling of excited state n to (ground m, scatterer a, branch e)
        sig_am = np.einsum("veg,xv->egx", d, k).reshape(n_e, n_g * 3 * n)
        sig_ma = np.einsum("xv,veg->gxe", k, d.conj()).reshape(n_g * 3 * n, n_e)
        for g in range(n_g):
            s = n_e + g * 3 * n
            m[s:s + 3 * n, s:s + 3 * n] = a0
        m[:n_e, n_e:] = -sig_am
        m[n_e:, :n_e] = -sig_ma
    resolvent = np.linalg.inv(m)
    g_atom = resolvent[:n_e, :n_e]
    sigma = -np.linalg.inv(g_atom)
    return SelfEnergyMatrix(matrix=sigma, atom_position=pos, n_scatterers=n,
                            realization_index=cloud.realization_index)


def diagonalize(sigma: SelfEnergyMatrix, cluster_tol: float = DEFAULT_CLUSTER_TOL_ORDERED,
                distance: float = np.nan) -> SpectrumPoint:
    """Complex eigendecomposition with greedy degeneracy clustering.

    Delta_n = Re lambda_n, Gamma_n = -2 Im lambda_n; clusters are groups of
    eigenvalues within cluster_tol of the first (largest-Gamma) member,
    sorted by Gamma descending.
    """
    if cluster_tol <= 0:
        raise ValueError("cluster_tol must be positive")
    try:
        lam, vec = np.linalg.eig(sigma.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed to converge: {exc}") from exc
    gamma = -2.0 * lam.imag
    order = np.argsort(-gamma, kind="stable")
    unassigned = list(order)
    clusters = []
    while unassigned:
        seed = unassigned[0]
        members = [i for i in unassigned if abs(lam[i] - lam[seed]) <= cluster_tol]
        unassigned = [i for i in unassigned if i not in members]
        center = lam[members].mean()
        width = max(
            (abs(lam[a] - lam[b]) for a in members for b in members), default=0.0)
        clusters.append(Cluster(
            gamma=float(-2.0 * center.imag), delta=float(center.real),
            multiplicity=len(members), width=float(width), members=tuple(members)))
    clusters.sort(key=lambda c: -c.gamma)
    return SpectrumPoint(
        distance=distance, atom_position=sigma.atom_position, clusters=tuple(clusters),
        eigenvalues=lam, eigenvectors=vec, rcond=sigma.rcond)


def _axis_weights(eigenvectors: np.ndarray, axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|<F M_axis | v>|^2 per column v; returns (projections, m_values)."""
    n_e = eigenvectors.shape[0]
    f = (n_e - 1) / 2.0
    fx, fy, fz = spin_matrices(f)
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    f_axis = a[0] * fx + a[1] * fy + a[2] * fz
    vals, basis = np.linalg.eigh(f_axis)
    m_vals = np.round(2.0 * vals) / 2.0
    proj = np.abs(basis.conj().T @ eigenvectors) ** 2  # (M, column)
    norms = np.sum(np.abs(eigenvectors) ** 2, axis=0)
    return proj / norms[None, :], m_vals


def symmetry_labels(point: SpectrumPoint, axis) -> SpectrumPoint:
    """Label clusters by the dominant |M| along the given quantization axis.

    The free-atom case (one cluster spanning the whole manifold) is left
    unlabeled; near-ties between two |M| weights are flagged low-confidence.
    """
    n_e = point.eigenvectors.shape[0]
    if len(point.clusters) == 1 and point.clusters[0].multiplicity == n_e:
        return point
    proj, m_vals = _axis_weights(point.eigenvectors, np.asarray(axis, float))
    abs_m = np.abs(m_vals)
    levels = np.unique(abs_m)
    new_clusters = []
    for cl in point.clusters:
        w = proj[:, list(cl.members)].sum(axis=1)
        weights = np.array([w[abs_m == lv].sum() for lv in levels])
        best = int(np.argmax(weights))
        runner_up = np.partition(weights, -2)[-2] if len(weights) > 1 else 0.0
        low_conf = bool(weights[best] - runner_up < 0.05 * weights[best])
        label = int(round(float(levels[best])))
        new_clusters.append(replace(cl, label=label, low_confidence=low_conf))
    return replace(point, clusters=tuple(new_clusters))


def _cluster_sort_key(c: Cluster):
    return (c.label if c.label is not None else 10**6, -c.gamma)


def _average_points(per_real: list[SpectrumPoint], cluster_tol: float) -> SpectrumPoint:
    """Cluster-wise average across realizations (label first, Gamma-rank second)."""
    r = len(per_real)
    if r == 1:
        return per_real[0]
    aligned = [sorted(pt.clusters, key=_cluster_sort_key) for pt in per_real]
    shapes = {tuple((c.label, c.multiplicity) for c in cl) for cl in aligned}
    if len(shapes) == 1:
        clusters = []
        for group in zip(*aligned):
            g = np.array([c.gamma for c in group])
            d = np.array([c.delta for c in group])
            clusters.append(Cluster(
                gamma=float(g.mean()), delta=float(d.mean()),
                multiplicity=group[0].multiplicity, label=group[0].label,
                low_confidence=any(c.low_confidence for c in group),
                width=float(np.mean([c.width for c in group])),
                stderr_gamma=float(g.std(ddof=1) / np.sqrt(r)),
                stderr_delta=float(d.std(ddof=1) / np.sqrt(r))))
        clusters.sort(key=lambda c: -c.gamma)
        first = per_real[0]
        return replace(first, clusters=tuple(clusters), n_realizations=r)
    # label matching failed: average the Gamma-ranked raw eigenvalues
    lam = np.array([pt.eigenvalues[np.argsort(pt.eigenvalues.imag, kind="stable")]
                    for pt in per_real])  # ascending imag = descending Gamma
    mean = lam.mean(axis=0)
    se = lam.std(axis=0, ddof=1) / np.sqrt(r)
    clusters = []
    taken = np.zeros(len(mean), dtype=bool)
    for i in range(len(mean)):
        if taken[i]:
            continue
        members = [j for j in range(len(mean))
                   if not taken[j] and abs(mean[j] - mean[i]) <= cluster_tol]
        for j in members:
            taken[j] = True
        center = mean[members].mean()
        clusters.append(Cluster(
            gamma=float(-2.0 * center.imag), delta=float(center.real),
            multiplicity=len(members),
            width=float(max((abs(mean[a] - mean[b]) for a in members for b in members),
                            default=0.0)),
            stderr_gamma=float(np.mean(2.0 * np.abs(se[members].imag))),
            stderr_delta=float(np.mean(np.abs(se[members].real))),
            members=tuple(members)))
    clusters.sort(key=lambda c: -c.gamma)
    first = per_real[0]
    return replace(first, clusters=tuple(clusters), n_realizations=r, flagged=True)


def _one_realization(scheme, geometry, model, placement, atom_placement, distances,
                     seed, realization_index, r_min, cluster_tol,
                     include_medium_linewidth, min_clearance, memory_budget, axis):
    positions = [geometry.atom_site(atom_placement, float(d)) for d in distances]
    if model.n0 * geometry.volume() < 1.0:
        # an effectively empty medium: the free-atom limit, no linear algebra
        cloud = DipoleCloud(np.zeros((0, 3)), model, geometry, placement,
                            seed, realization_index)
        factored = None
        sigmas = self_energy_sweep(scheme, cloud, positions,
                                   min_clearance=min_clearance)
    else:
        cloud = generate_cloud(geometry, model, placement, seed, realization_index, r_min)
        block = assemble_medium_block(cloud, include_medium_linewidth, memory_budget)
        factored = factor_medium_block(block, overwrite=True)
        del block
        sigmas = self_energy_sweep(scheme, cloud, positions, factored=factored,
                                   min_clearance=min_clearance)
    points = []
    for dist, sig in zip(distances, sigmas):
        pt = diagonalize(sig, cluster_tol, distance=float(dist))
        if axis is not None:
            pt = symmetry_labels(pt, axis)
        points.append(pt)
    return cloud.n, factored.rcond if factored is not None else np.inf, points


def scan(scheme: TransitionScheme, geometry: Geometry, model: MediumModel, *,
         distances, atom_placement: str, placement: str = "ordered",
         realizations: int = 1, seed: int = 0, r_min: float = 0.1,
         cluster_tol: float | None = None, include_medium_linewidth: bool = False,
         min_clearance: float = 0.0, threads: int = 1,
         memory_budget: int = DEFAULT_MEMORY_BUDGET) -> ScanResult:
    """Spectrum versus atom-surface separation, configuration averaged.

    distances are internal units, sorted ascending.  Ordered placement is a
    single deterministic evaluation; disordered placement averages
    eigenvalue clusters over ``realizations`` independent clouds.
    """
    distances = np.asarray(distances, dtype=float)
    if len(distances) == 0:
        raise ValueError("need at least one distance")
    if np.any(np.diff(distances) < 0):
        raise ValueError("distances must be sorted ascending")
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    if placement == "ordered":
        realizations = 1
    if cluster_tol is None:
        cluster_tol = (DEFAULT_CLUSTER_TOL_ORDERED if placement == "ordered"
                       else DEFAULT_CLUSTER_TOL_DISORDERED)
    axis = geometry.symmetry_axis(atom_placement)

    t0 = time.perf_counter()
    jobs = list(range(realizations))
    results: list = [None] * realizations

    def run(r):
        return _one_realization(scheme, geometry, model, placement, atom_placement,
                                distances, seed, r, r_min, cluster_tol,
                                include_medium_linewidth, min_clearance,
                                memory_budget, axis)

    if threads > 1 and realizations > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for r, res in zip(jobs, pool.map(run, jobs)):
                results[r] = res
    else:
        for r in jobs:
            results[r] = run(r)

    n_scatterers = results[0][0]
    rconds = [res[1] for res in results]
    averaged = []
    for i in range(len(distances)):
        per_real = [res[2][i] for res in results]
        averaged.append(_average_points(per_real, cluster_tol))
    diagnostics = {
        "n_scatterers": int(n_scatterers),
        "rcond_min": float(min(rconds)),
        "rcond_max": float(max(rconds)),
        "elapsed_s": time.perf_counter() - t0,
        "cluster_tol": float(cluster_tol),
        "flagged_points": int(sum(p.flagged for p in averaged)),
    }
    return ScanResult(points=averaged, distances=distances, realizations=realizations,
                      placement=placement, diagnostics=diagnostics)
