"""Ground-state van-der-Waals shift near an arbitrary dielectric volume.

The empirical macroscopic estimate

    Delta(r) = -(3 / 4 pi) (eps - 1)/(eps + 2) S  *  Integral_V |r - r'|^-6 d^3r'

with S = sum_n |d_nm|^2 the ground-sublevel dipole variance (m-independent
for a closed transition) and the integral taken over the body.  hbar = 1;
the result is an upper bound for the true static interaction.  The kernel
is integrated by recursive octree subdivision over exact parameter domains
(Cartesian boxes for box-like bodies, cylindrical coordinates for the
cylinder), refined where the local Gauss-rule error estimate is largest.

The flat-image potential of a half-space is provided as the oracle the
volume integral is checked against.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Geometry, Slab

__all__ = [
    "VdwSpec",
    "QuadratureError",
    "vdw_shift",
    "vdw_shift_detailed",
    "image_potential_flat",
    "kernel_volume_integral",
    "slab_approximating_halfspace",
]

MAX_CELLS = 400_000


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class VdwSpec:
    eps: float
    dipole_sq_sum: float
    geometry: Geometry
    quad_tol: float = 1e-6

    def __post_init__(self):
        if self.eps <= 1.0:
            raise ValueError("eps must exceed 1")
        if self.dipole_sq_sum <= 0.0:
            raise ValueError("dipole_sq_sum must be positive")
        if self.quad_tol <= 0.0:
            raise ValueError("quad_tol must be positive")


def image_potential_flat(eps: float, dipole_sq_sum: float, z: float) -> float:
    """Static image attraction above a flat surface: -(1/12 z^3)(eps-1)/(eps+1) S."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    return -(1.0 / (12.0 * z**3)) * (eps - 1.0) / (eps + 1.0) * dipole_sq_sum


@lru_cache(maxsize=8)
def _gauss_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    # tensor-product nodes on [0,1]^3
    xs = 0.5 * (x + 1.0)
    ws = 0.5 * w
    gx, gy, gz = np.meshgrid(xs, xs, xs, indexing="ij")
    wx, wy, wz = np.meshgrid(ws, ws, ws, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    return pts, (wx * wy * wz).ravel()


def _cell_integral(kind, lo, hi, target, order):
    pts01, w = _gauss_nodes(order)
    span = hi - lo
    pts = lo + pts01 * span
    vol = float(np.prod(span))
    if kind == "cart":
        d2 = np.sum((pts - target) ** 2, axis=1)
        vals = d2**-3
    else:  # cylindrical parameters (rho, phi, z) with Jacobian rho
        rho, phi, z = pts[:, 0], pts[:, 1], pts[:, 2]
        dx = rho * np.cos(phi) - target[0]
        dy = rho * np.sin(phi) - target[1]
        dz = z - target[2]
        d2 = dx * dx + dy * dy + dz * dz
        vals = rho * d2**-3
    return vol * float(np.dot(w, vals))


def kernel_volume_integral(geometry: Geometry, position, rel_tol: float) -> tuple[float, float]:
    """Integral of |r - r'|^-6 over the body, with an error estimate.

    Adaptive: each cell carries coarse/fine Gauss values; the worst cells are
    octree-subdivided until the summed discrepancy is below rel_tol of the
    running total.
    """
    target = np.asarray(position, dtype=float)
    if geometry.distance_outside(target) <= 0.0:
        raise ValueError("position inside or on the body: the kernel is non-integrable")

    heap: list = []
    total = 0.0
    err = 0.0
    counter = 0
    for dom in geometry.quad_domains():
        kind = dom[0]
        if kind == "cart":
            lo = np.asarray(dom[1], dtype=float)
            hi = np.asarray(dom[2], dtype=float)
        elif kind == "cyl":
            radius, zlo, zhi = dom[1], dom[2], dom[3]
            lo = np.array([0.0, 0.0, zlo])
            hi = np.array([radius, 2.0 * np.pi, zhi])
        else:
            raise ValueError(f"unknown quadrature domain kind {kind!r}")
        coarse = _cell_integral(kind, lo, hi, target, 3)
        fine = _cell_integral(kind, lo, hi, target, 5)
        e = abs(fine - coarse)
        total += fine
        err += e
        heapq.heappush(heap, (-e, counter, kind, lo, hi, fine))
        counter += 1

    while err > rel_tol * abs(total) and heap:
        if counter > MAX_CELLS:
            raise QuadratureError(
                f"quadrature exceeded {MAX_CELLS} cells before reaching "
                f"rel_tol = {rel_tol:g}; loosen the tolerance"
            )
        neg_e, _, kind, lo, hi, fine = heapq.heappop(heap)
        total -= fine
        err -= -neg_e
        span = hi - lo
        mids = 0.5 * (lo + hi)
        for cx in (0, 1):
            for cy in (0, 1):
                for cz in (0, 1):
                    clo = np.array([lo[0] if cx == 0 else mids[0],
                                    lo[1] if cy == 0 else mids[1],
                                    lo[2] if cz == 0 else mids[2]])
                    chi = clo + 0.5 * span
                    coarse = _cell_integral(kind, clo, chi, target, 3)
                    cfine = _cell_integral(kind, clo, chi, target, 5)
                    e = abs(cfine - coarse)
                    total += cfine
                    err += e
                    heapq.heappush(heap, (-e, counter, kind, clo, chi, cfine))
                    counter += 1
    return total, err


def vdw_shift_detailed(spec: VdwSpec, position) -> tuple[float, float]:
    """(shift, error estimate) in Gamma_inf units."""
    integral, ierr = kernel_volume_integral(spec.geometry, position, spec.quad_tol)
    pref = -(3.0 / (4.0 * np.pi)) * (spec.eps - 1.0) / (spec.eps + 2.0) * spec.dipole_sq_sum
    return pref * integral, abs(pref) * ierr


def vdw_shift(spec: VdwSpec, position) -> float:
    """Ground-state shift Delta(r) in Gamma_inf units (negative: attraction)."""
    return vdw_shift_detailed(spec, position)[0]


def slab_approximating_halfspace(z: float, rel_truncation: float = 2e-7) -> Slab:
    """Finite slab whose kernel integral truncates the half-space value by
    less than rel_truncation, for an atom at height z above the surface."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    half_budget = 0.5 * rel_truncation
    lateral = z * (2.36 / half_budget) ** (1.0 / 3.0)
    depth = z * ((1.0 / half_budget) ** (1.0 / 3.0) - 1.0)
    return Slab(thickness=depth, extent_x=2.0 * lateral, extent_y=2.0 * lateral)
