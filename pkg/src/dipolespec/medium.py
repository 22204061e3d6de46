"""The artificial dielectric: V-type point scatterers tuned to a target permittivity.

A dense gas of V-type atoms (single ground state, triply degenerate excited
state) acts as an isotropic point polarizability.  Its bulk permittivity
follows from a Lorentz-Lorenz-type self-consistency relation which, written
in s = sqrt(eps), is a cubic

    (i Ge/2) s^3 + (D + b) s^2 - (i Ge/2) s - (D - 2 b) = 0,

with D = omega - omega_M the detuning from the scatterer resonance and
b = pi n0 Ge the density-polarizability scale (internal units; n0 is the
number of scatterers per cubic reduced wavelength).  The physical root is
selected by causality (Im eps >= 0, eps -> 1 far off resonance) and tracked
continuously along frequency scans.

Calibration inverts this at the reference frequency: given a target eps the
far-detuned closed form  delta_M ~ b (eps+2)/(eps-1)  seeds a root refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "MediumModel",
    "PermittivityError",
    "permittivity",
    "permittivity_scan",
    "fit_detuning",
    "gamma_e_from_dipole",
    "f0_sq_from_gamma_e",
    "REFRACTIVE_INDEX_PRESETS",
]

# n at the working wavelength for the two materials considered
REFRACTIVE_INDEX_PRESETS = {"silica": 1.45, "ingap": 3.31}


class PermittivityError(RuntimeError):
    """No admissible causal root of the permittivity cubic."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates


def gamma_e_from_dipole(f0_sq: float, omega_M: float = 1.0) -> float:
    """Scatterer linewidth Gamma_e = (4/3) omega_M^3 f0^2 (internal units)."""
    if f0_sq <= 0 or omega_M <= 0:
        raise ValueError("f0_sq and omega_M must be positive")
    return (4.0 / 3.0) * omega_M**3 * f0_sq


def f0_sq_from_gamma_e(gamma_e: float, omega_M: float = 1.0) -> float:
    """Inverse of :func:`gamma_e_from_dipole`."""
    if gamma_e <= 0 or omega_M <= 0:
        raise ValueError("gamma_e and omega_M must be positive")
    return 0.75 * gamma_e / omega_M**3


@dataclass(frozen=True)
class MediumModel:
    """Calibrated scatterer-gas parameters.

    n0: scatterers per cubic reduced wavelength (dimensionless density).
    delta_M: resonance offset omega_M - omega0 in units of Gamma_inf.
    gamma_e: scatterer linewidth in units of Gamma_inf.
    target_eps: the real dielectric constant the model realizes at omega0.
    """

    n0: float
    delta_M: float
    gamma_e: float = 1.0
    target_eps: float | None = None
    f0_sq: float = field(init=False)

    def __post_init__(self):
        if self.n0 <= 0:
            raise ValueError("density must be positive")
        if self.gamma_e <= 0:
            raise ValueError("gamma_e must be positive")
        # the pole-approximation derivation assumes a far-off-resonant medium
        if self.delta_M < 20.0 * self.gamma_e:
            raise ValueError(
                f"delta_M = {self.delta_M:g} violates the far-off-resonance regime "
                f"(need >= 20 gamma_e = {20 * self.gamma_e:g})"
            )
        object.__setattr__(self, "f0_sq", f0_sq_from_gamma_e(self.gamma_e))

    @classmethod
    def calibrated(cls, n0: float, target_eps: float, gamma_e: float = 1.0) -> "MediumModel":
        delta = fit_detuning(n0, gamma_e, target_eps)
        return cls(n0=n0, delta_M=delta, gamma_e=gamma_e, target_eps=target_eps)

    @property
    def beta(self) -> float:
        """pi n0 Gamma_e, the polarizability-density scale of the cubic."""
        return np.pi * self.n0 * self.gamma_e

    def eps_far_detuned(self, omega: float = 0.0) -> float:
        """Closed-form permittivity with the radiative width neglected."""
        D = omega - self.delta_M
        return (D - 2.0 * self.beta) / (D + self.beta)


def _cubic_roots_s(model: MediumModel, omega: float) -> np.ndarray:
    D = omega - model.delta_M
    b = model.beta
    g = model.gamma_e
    return np.roots([0.5j * g, D + b, -0.5j * g, -(D - 2.0 * b)])


def _physical_root_s(model: MediumModel, omega: float) -> complex:
    """Select the causal branch of the cubic at one frequency.

    Admissible roots must be passive (Im eps >= 0) and decaying (Im s >= 0)
    up to roundoff.  Away from the local-field-shifted pole at
    omega = delta_M - beta the root continuing the gamma_e -> 0 quadratic is
    unambiguous; in the narrow pole/collision window the branches are told
    apart by their magnitude ordering, which flips at the point where the
    physical and the singular-perturbation root actually coalesce (their
    values agree there, so either choice is correct to the splitting).
    """
    D = omega - model.delta_M
    b = model.beta
    g = model.gamma_e
    x = D + b
    roots = _cubic_roots_s(model, omega)
    eps = roots**2
    passive = eps.imag >= -1e-8 * np.maximum(1.0, np.abs(eps))
    decaying = roots.imag >= -1e-9 * np.maximum(1.0, np.abs(roots))
    ok = passive & decaying
    if not np.any(ok):
        raise PermittivityError(
            f"no causal root at omega = {omega:g}: all candidates violate "
            f"Im eps >= 0 or Im sqrt(eps) >= 0",
            candidates=eps,
        )
    cand = roots[ok]
    if abs(x) >= 10.0 * g:
        s_seed = complex(np.sqrt(complex((D - 2.0 * b) / x)))
        return complex(cand[np.argmin(np.abs(cand - s_seed))])
    if x <= 0.0:
        # just below the pole: eps is large, real and positive
        return complex(cand[np.argmax(cand.real)])
    # inside the band gap next to the pole: both surviving branches are
    # near-imaginary; the evanescent one dominates in magnitude up to the
    # coalescence scale x* = (3 beta gamma_e^2 / 4)^(1/3)
    x_star = (0.75 * model.beta * g * g) ** (1.0 / 3.0)
    idx = np.argmax(np.abs(cand)) if x < x_star else np.argmin(np.abs(cand))
    return complex(cand[idx])


def permittivity(model: MediumModel, omega: float = 0.0) -> complex:
    """Causal permittivity eps(omega) of the scatterer gas.

    omega is the offset from the reference frequency omega0 in units of
    Gamma_inf (so omega = 0 evaluates at the reference transition).
    """
    return _physical_root_s(model, float(omega)) ** 2


def permittivity_scan(model: MediumModel, omegas) -> np.ndarray:
    """eps(omega) on an arbitrary frequency grid (causal branch at each point)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    return np.array([_physical_root_s(model, om) ** 2 for om in omegas])


def fit_detuning(n0: float, gamma_e: float, target_eps: float, rel_tol: float = 1e-6) -> float:
    """Detuning delta_M that realizes Re eps(omega0) = target_eps.

    Seeded by the far-detuned closed form and refined on the cubic root.
    """
    if target_eps <= 1.0:
        raise ValueError("target_eps must exceed 1 (gain media are out of scope)")
    if n0 <= 0 or gamma_e <= 0:
        raise ValueError("density and gamma_e must be positive")
    beta = np.pi * n0 * gamma_e
    seed = beta * (target_eps + 2.0) / (target_eps - 1.0)

    def residual(delta: float) -> float:
        model = MediumModel(n0=n0, delta_M=delta, gamma_e=gamma_e)
        return permittivity(model, 0.0).real - target_eps

    lo, hi = 0.75 * seed, 1.3 * seed
    lo = max(lo, 20.0 * gamma_e)
    flo, fhi = residual(lo), residual(hi)
    grow = 0
    while flo * fhi > 0 and grow < 60:
        # eps decreases with delta, so widen toward the sign change
        if flo < 0:
            lo = max(0.5 * lo, 20.0 * gamma_e)
            flo = residual(lo)
        else:
            hi *= 1.5
            fhi = residual(hi)
        grow += 1
    if flo * fhi > 0:
        raise PermittivityError(f"could not bracket a detuning for eps = {target_eps:g}")
    delta = brentq(residual, lo, hi, xtol=rel_tol * seed * 1e-3, rtol=1e-14)
    model = MediumModel(n0=n0, delta_M=delta, gamma_e=gamma_e)
    achieved = permittivity(model, 0.0).real
    if abs(achieved - target_eps) > rel_tol * target_eps:
        raise PermittivityError(
            f"detuning fit did not converge: eps = {achieved:g} vs target {target_eps:g}"
        )
    return float(delta)
