"""Nanostructure geometries that the scatterer cloud fills.

All coordinates here are in internal units (reduced wavelengths of the
reference transition).  Conventions:

* Cylinder: axis along z, centered at the origin.  The atom sits on the
  +x axis, so the azimuthal direction at the atom site is +y.
* CombPCW: waveguide axis z, teeth pointing along +x from the backbone
  front face at x = 0, mid-plane y = 0.  One tooth is centered at z = 0.
  The atom sits on the comb side at x = tooth tip plane + separation.
* Slab: dielectric fills z in [-thickness, 0] with the surface at z = 0
  (finite lateral extents; large extents approximate a half-space).
* Box: axis-aligned, arbitrary corners; mostly a test geometry.

Every geometry answers containment for batches of points, its exact volume,
distance from an exterior point to the body, and the list of smooth
integration domains used by the van-der-Waals quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Cylinder", "CombPCW", "Slab", "Box", "Geometry"]


def _as_point(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError("expected a 3-vector")
    return p


def _box_distance_outside(point: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    d = np.maximum(np.maximum(lo - point, point - hi), 0.0)
    return float(np.linalg.norm(d))


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if np.any(hi <= lo):
            raise ValueError("box must have positive extent on every axis")

    def volume(self) -> float:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return float(np.prod(hi - lo))

    def bounding_box(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, float))
        lo, hi = self.bounding_box()
        return np.all((p >= lo) & (p <= hi), axis=1)

    def distance_outside(self, point) -> float:
        lo, hi = self.bounding_box()
        return _box_distance_outside(_as_point(point), lo, hi)

    def quad_domains(self):
        return [("cart", *self.bounding_box())]

    def atom_site(self, placement: str, distance: float) -> np.ndarray:
        if placement != "above":
            raise ValueError(f"box geometry has no placement {placement!r}")
        lo, hi = self.bounding_box()
        return np.array([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), hi[2] + distance])

    def symmetry_axis(self, placement: str) -> np.ndarray | None:
        return None


@dataclass(frozen=True)
class Slab:
    """Dielectric z in [-thickness, 0], laterally |x| <= Lx/2, |y| <= Ly/2."""

    thickness: float
    extent_x: float
    extent_y: float

    def __post_init__(self):
        if min(self.thickness, self.extent_x, self.extent_y) <= 0:
            raise ValueError("slab dimensions must be positive")

    def volume(self) -> float:
        return self.thickness * self.extent_x * self.extent_y

    def bounding_box(self):
        lo = np.array([-0.5 * self.extent_x, -0.5 * self.extent_y, -self.thickness])
        hi = np.array([0.5 * self.extent_x, 0.5 * self.extent_y, 0.0])
        return lo, hi

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, float))
        lo, hi = self.bounding_box()
        return np.all((p >= lo) & (p <= hi), axis=1)

    def distance_outside(self, point) -> float:
        lo, hi = self.bounding_box()
        return _box_distance_outside(_as_point(point), lo, hi)

    def quad_domains(self):
        return [("cart", *self.bounding_box())]

    def atom_site(self, placement: str, distance: float) -> np.ndarray:
        if placement != "above":
            raise ValueError(f"slab geometry has no placement {placement!r}")
        return np.array([0.0, 0.0, distance])

    def symmetry_axis(self, placement: str) -> np.ndarray | None:
        # normal to the surface through the atom
        return np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Cylinder:
    radius: float
    length: float

    def __post_init__(self):
        if self.radius <= 0 or self.length <= 0:
            raise ValueError("cylinder radius and length must be positive")

    def volume(self) -> float:
        return float(np.pi * self.radius**2 * self.length)

    def bounding_box(self):
        a, h = self.radius, 0.5 * self.length
        return np.array([-a, -a, -h]), np.array([a, a, h])

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, float))
        rho2 = p[:, 0] ** 2 + p[:, 1] ** 2
        return (rho2 <= self.radius**2) & (np.abs(p[:, 2]) <= 0.5 * self.length)

    def distance_outside(self, point) -> float:
        p = _as_point(point)
        rho = float(np.hypot(p[0], p[1]))
        dr = max(rho - self.radius, 0.0)
        dz = max(abs(p[2]) - 0.5 * self.length, 0.0)
        return float(np.hypot(dr, dz))

    def quad_domains(self):
        return [("cyl", self.radius, -0.5 * self.length, 0.5 * self.length)]

    def atom_site(self, placement: str, distance: float) -> np.ndarray:
        if placement != "radial":
            raise ValueError(f"cylinder geometry has no placement {placement!r}")
        # distance is measured from the axis
        return np.array([distance, 0.0, 0.0])

    def symmetry_axis(self, placement: str) -> np.ndarray | None:
        # azimuthal direction at the atom site on the +x axis
        return np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class CombPCW:
    """One-sided comb waveguide: backbone bar plus periodic teeth along z."""

    period: float
    tooth_height: float
    tooth_width: float
    backbone_width: float
    backbone_thickness: float
    n_periods: int

    def __post_init__(self):
        if min(self.period, self.tooth_height, self.tooth_width,
               self.backbone_width, self.backbone_thickness) <= 0:
            raise ValueError("comb dimensions must be positive")
        if self.tooth_width >= self.period:
            raise ValueError("tooth width must be smaller than the period")
        if self.n_periods < 1:
            raise ValueError("need at least one period")

    @property
    def length(self) -> float:
        return self.period * self.n_periods

    def tooth_centers(self) -> np.ndarray:
        """z of tooth centers; one tooth at z = 0, clipped to fit inside."""
        k_max = int(np.floor((0.5 * self.length - 0.5 * self.tooth_width) / self.period))
        return np.arange(-k_max, k_max + 1) * self.period

    def component_boxes(self) -> list[tuple[np.ndarray, np.ndarray]]:
        t2 = 0.5 * self.backbone_thickness
        L2 = 0.5 * self.length
        boxes = [(np.array([-self.backbone_width, -t2, -L2]), np.array([0.0, t2, L2]))]
        for zc in self.tooth_centers():
            boxes.append((
                np.array([0.0, -t2, zc - 0.5 * self.tooth_width]),
                np.array([self.tooth_height, t2, zc + 0.5 * self.tooth_width]),
            ))
        return boxes

    def volume(self) -> float:
        return float(sum(np.prod(hi - lo) for lo, hi in self.component_boxes()))

    def bounding_box(self):
        lo = np.array([-self.backbone_width, -0.5 * self.backbone_thickness, -0.5 * self.length])
        hi = np.array([self.tooth_height, 0.5 * self.backbone_thickness, 0.5 * self.length])
        return lo, hi

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, float))
        inside = np.zeros(p.shape[0], dtype=bool)
        for lo, hi in self.component_boxes():
            inside |= np.all((p >= lo) & (p <= hi), axis=1)
        return inside

    def distance_outside(self, point) -> float:
        p = _as_point(point)
        return min(_box_distance_outside(p, lo, hi) for lo, hi in self.component_boxes())

    def quad_domains(self):
        return [("cart", lo, hi) for lo, hi in self.component_boxes()]

    def atom_site(self, placement: str, distance: float) -> np.ndarray:
        x = self.tooth_height + distance
        if placement == "behind_tooth":
            return np.array([x, 0.0, 0.0])
        if placement == "between_teeth":
            return np.array([x, 0.0, 0.5 * self.period])
        raise ValueError(f"comb geometry has no placement {placement!r}")

    def symmetry_axis(self, placement: str) -> np.ndarray | None:
        # orthogonal to the (z, x) plane of the waveguide and atom
        return np.array([0.0, 1.0, 0.0])


Geometry = Cylinder | CombPCW | Slab | Box
