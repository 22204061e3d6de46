"""Placement of the V-type scatterers inside a geometry.

Two modes: an axis-aligned cubic lattice at the nominal density (the
production mode; cell-centered so the point set is mirror symmetric about
the coordinate planes), and a hard-core uniform random placement with a
fixed particle number N = round(n0 V), reproducible from (seed,
realization_index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Geometry
from .medium import MediumModel

__all__ = ["DipoleCloud", "CloudError", "generate_cloud"]

DEFAULT_R_MIN = 0.1  # hard-core exclusion radius, reduced wavelengths


class CloudError(RuntimeError):
    pass


@dataclass(frozen=True)
class DipoleCloud:
    positions: np.ndarray  # (N, 3), internal units
    model: MediumModel
    geometry: Geometry
    placement: str
    seed: int = 0
    realization_index: int = 0

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValueError("positions must be an (N, 3) array")
        object.__setattr__(self, "positions", p)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


def _lattice_positions(geometry: Geometry, spacing: float) -> np.ndarray:
    # vertex-centered (sites at integer multiples of the spacing): keeps the
    # point set mirror symmetric about the coordinate planes and tracks the
    # nominal density closely for the waveguide geometries
    lo, hi = geometry.bounding_box()
    axes = []
    for d in range(3):
        k_lo = int(np.floor(lo[d] / spacing)) - 1
        k_hi = int(np.ceil(hi[d] / spacing)) + 1
        axes.append(np.arange(k_lo, k_hi + 1) * spacing)
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    return pts[geometry.contains(pts)]


def _hardcore_positions(geometry: Geometry, n_target: int, r_min: float,
                        rng: np.random.Generator) -> np.ndarray:
    lo, hi = geometry.bounding_box()
    span = hi - lo
    cell = max(r_min, 1e-9)
    grid: dict[tuple[int, int, int], list[int]] = {}
    accepted = np.empty((n_target, 3))
    count = 0
    tries = 0
    max_tries = 5000 * n_target + 10000
    while count < n_target:
        if tries >= max_tries:
            raise CloudError(
                f"hard-core placement stalled at {count}/{n_target} scatterers; "
                "lower the density or reduce r_min"
            )
        tries += 1
        p = lo + span * rng.random(3)
        if not geometry.contains(p[None, :])[0]:
            continue
        key = tuple((p // cell).astype(int))
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for idx in grid.get((key[0] + dx, key[1] + dy, key[2] + dz), ()):
                        if np.sum((accepted[idx] - p) ** 2) < r_min * r_min:
                            ok = False
                            break
        if not ok:
            continue
        accepted[count] = p
        grid.setdefault(key, []).append(count)
        count += 1
    return accepted


def generate_cloud(geometry: Geometry, model: MediumModel, placement: str = "ordered",
                   seed: int = 0, realization_index: int = 0,
                   r_min: float = DEFAULT_R_MIN) -> DipoleCloud:
    """Deterministic scatterer positions for one medium realization.

    ``ordered`` fills a cubic lattice of spacing n0^(-1/3) clipped to the
    geometry; ``disordered`` draws exactly round(n0 V) hard-core points from
    the stream keyed by (seed, realization_index).
    """
    n_nominal = model.n0 * geometry.volume()
    if n_nominal < 1.0:
        raise CloudError(
            f"geometry volume {geometry.volume():g} holds fewer than one scatterer "
            f"at density {model.n0:g}"
        )
    if placement == "ordered":
        pts = _lattice_positions(geometry, model.n0 ** (-1.0 / 3.0))
        if len(pts) == 0:
            raise CloudError("ordered lattice produced no points inside the geometry")
    elif placement == "disordered":
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(realization_index)]))
        pts = _hardcore_positions(geometry, int(round(n_nominal)), r_min, rng)
    else:
        raise ValueError(f"unknown placement {placement!r}")
    return DipoleCloud(positions=pts, model=model, geometry=geometry,
                       placement=placement, seed=seed, realization_index=realization_index)
