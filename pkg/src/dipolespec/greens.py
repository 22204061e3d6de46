"""Vacuum dyadic Green tensor of the electric field between two points.

The tensor is assembled from the two spherical Hankel functions of the first
kind that survive for a transverse point-dipole field,

    D_munu(R) = -k^3 [ (2i/3) h0(kR) delta_munu
                       + i h2(kR) (Rhat_mu Rhat_nu - delta_munu/3) ],

in internal units (hbar = 1, c = 1).  It is symmetric, even in R, and its
trace carries only the h0 term.  The coincident-point limit is deliberately
not handled here: the free-atom self-action is a separate diagonal constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["GreenTensor", "hankel1", "green_tensor", "green_tensor_stack", "pairwise_green_blocks"]


@dataclass(frozen=True)
class GreenTensor:
    """3x3 complex field propagator between two points at wavenumber k."""

    matrix: np.ndarray
    separation: np.ndarray
    wavenumber: float


def hankel1(L: int, x):
    """Spherical Hankel function h_L^(1)(x) for L in {0, 2}, x > 0.

    Closed rational-exponential forms; accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("hankel1 requires x > 0 (self-action is handled elsewhere)")
    phase = np.exp(1j * x)
    if L == 0:
        return -1j * phase / x
    if L == 2:
        return (1j / x) * phase * (1.0 + 3j / x - 3.0 / x**2)
    raise ValueError("only L = 0 and L = 2 occur in the dipole field")


def _tensor_from_parts(xhat, h0, h2, k):
    """Assemble -k^3 [ (2i/3) h0 I + i h2 (xhat xhat - I/3) ] over leading dims."""
    eye = np.eye(3)
    outer = xhat[..., :, None] * xhat[..., None, :]
    iso = (2j / 3.0) * h0[..., None, None] * eye
    aniso = 1j * h2[..., None, None] * (outer - eye / 3.0)
    return -(k**3) * (iso + aniso)


def green_tensor(r_from, r_to, k: float) -> GreenTensor:
    """Full 3x3 vacuum field propagator D(r_to - r_from) at wavenumber k > 0."""
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    r_from = np.asarray(r_from, dtype=float)
    r_to = np.asarray(r_to, dtype=float)
    X = r_to - r_from
    R = float(np.linalg.norm(X))
    if R == 0.0:
        raise ValueError("coincident points: the self-coupling is not a propagator evaluation")
    xhat = X / R
    h0 = hankel1(0, np.array(k * R))
    h2 = hankel1(2, np.array(k * R))
    return GreenTensor(matrix=_tensor_from_parts(xhat, h0, h2, k), separation=X, wavenumber=k)


def green_tensor_stack(points_from: np.ndarray, r_to, k: float) -> np.ndarray:
    """D(r_to - r_a) for a stack of source points; returns (N, 3, 3)."""
    points_from = np.asarray(points_from, dtype=float)
    X = np.asarray(r_to, dtype=float)[None, :] - points_from
    R = np.linalg.norm(X, axis=1)
    if np.any(R == 0.0):
        raise ValueError("coincident points in green_tensor_stack")
    xhat = X / R[:, None]
    return _tensor_from_parts(xhat, hankel1(0, k * R), hankel1(2, k * R), k)


def pairwise_green_blocks(positions: np.ndarray, k: float, out: np.ndarray,
                          block: int = 256) -> None:
    """Fill out[3a:3a+3, 3b:3b+3] with D(r_b - r_a) for all pairs a != b.

    ``out`` must be a preallocated (3N, 3N) complex array; diagonal blocks are
    left untouched.  Row blocks are processed in chunks to bound peak memory.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    if out.shape != (3 * n, 3 * n):
        raise ValueError("output array has wrong shape")
    for start in range(0, n, block):
        stop = min(start + block, n)
        X = positions[None, :, :] - positions[start:stop, None, :]  # (m, N, 3)
        R = np.linalg.norm(X, axis=2)
        np.fill_diagonal(R[:, start:stop], np.inf)  # mask self-pairs in this chunk
        xhat = X / R[..., None]
        blocks = _tensor_from_parts(xhat, hankel1(0, k * np.where(np.isinf(R), 1.0, R)),
                                    hankel1(2, k * np.where(np.isinf(R), 1.0, R)), k)
        blocks[np.isinf(R)] = 0.0
        # (m, N, 3, 3) -> (3m, 3N) with index (a, mu) flattened row-major
        out[3 * start:3 * stop, :] = blocks.transpose(0, 2, 1, 3).reshape(3 * (stop - start), 3 * n)
