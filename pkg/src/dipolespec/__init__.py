"""Microscopic excitation spectrum of a multilevel atom near a dielectric nanostructure.

The dielectric is synthesized as a dense cloud of V-type point scatterers
calibrated to a target permittivity; the atom's excited-manifold complex
level structure (shifts and decay rates in units of the free linewidth)
follows from one block elimination of the single-excitation resolvent.
"""

__version__ = "0.1.0"

from .angular import TransitionScheme, dipole_matrix, wigner3j
from .cloud import DipoleCloud, generate_cloud
from .geometry import Box, CombPCW, Cylinder, Slab
from .greens import green_tensor, hankel1
from .medium import MediumModel, fit_detuning, permittivity, permittivity_scan
from .spectrum import (SelfEnergyMatrix, SpectrumPoint, diagonalize, scan,
                       self_energy, self_energy_dense, symmetry_labels)
from .vdw import VdwSpec, image_potential_flat, vdw_shift

__all__ = [
    "__version__",
    "TransitionScheme", "wigner3j", "dipole_matrix",
    "MediumModel", "permittivity", "permittivity_scan", "fit_detuning",
    "Cylinder", "CombPCW", "Slab", "Box",
    "DipoleCloud", "generate_cloud",
    "green_tensor", "hankel1",
    "self_energy", "self_energy_dense", "diagonalize", "symmetry_labels", "scan",
    "SelfEnergyMatrix", "SpectrumPoint",
    "VdwSpec", "vdw_shift", "image_potential_flat",
]
