"""Angular-momentum algebra for closed F -> F0 dipole transitions.

Everything downstream needs only two ingredients from this module: the table
of dipole matrix elements between Zeeman sublevels (normalized so each excited
sublevel decays at exactly ``gamma_inf``) and the unitary map between spherical
and Cartesian vector components.

Internal unit system (used throughout the package): hbar = 1, c = 1,
k0 = omega0/c = 1, so lengths are measured in reduced wavelengths
lambda0/(2 pi) and all rates/energies in units of the free-atom linewidth
Gamma_inf.  With these units the per-sublevel decay sum fixes the reduced
dipole to sum_m |d_nm|^2 = 3/4 for every excited sublevel n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

import numpy as np

__all__ = [
    "TransitionScheme",
    "DipoleElement",
    "wigner3j",
    "clebsch_gordan",
    "dipole_matrix",
    "dipole_components_cartesian",
    "decay_sum",
    "ground_dipole_sq_sum",
    "spherical_to_cartesian",
    "cartesian_to_spherical",
    "spin_matrices",
    "SPHERICAL_BASIS",
]

# Columns are the spherical unit vectors e_{+1}, e_0, e_{-1} expressed in the
# Cartesian basis (Condon-Shortley phases).  v_cart = SPHERICAL_BASIS @ v_sph
# with v_sph ordered (q=+1, q=0, q=-1).
SPHERICAL_BASIS = np.array(
    [
        [-1.0 / sqrt(2.0), 0.0, 1.0 / sqrt(2.0)],
        [-1.0j / sqrt(2.0), 0.0, -1.0j / sqrt(2.0)],
        [0.0, 1.0, 0.0],
    ],
    dtype=complex,
)


def _two_j(x, name: str) -> int:
    """Validate a half-integer and return 2x as an exact int."""
    two = 2.0 * float(x)
    rounded = round(two)
    if abs(two - rounded) > 1e-9:
        raise ValueError(f"{name} = {x} is not a half-integer")
    return int(rounded)


@dataclass(frozen=True)
class TransitionScheme:
    """A closed optical transition F_excited -> F_ground of the reference atom.

    lambda0 is the vacuum wavelength in nm and gamma_inf the natural linewidth
    (any unit; it only sets the scale of the physical I/O, internally all
    rates are expressed in units of gamma_inf).
    """

    F_excited: float
    F_ground: float
    lambda0: float
    gamma_inf: float = 1.0
    label: str = ""

    def __post_init__(self):
        te = _two_j(self.F_excited, "F_excited")
        tg = _two_j(self.F_ground, "F_ground")
        if te < 0 or tg < 0:
            raise ValueError("angular momenta must be >= 0")
        if abs(te - tg) > 2:
            raise ValueError("dipole selection requires |F_excited - F_ground| <= 1")
        if (te - tg) % 2 != 0:
            raise ValueError("F_excited and F_ground must differ by an integer")
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if self.gamma_inf <= 0:
            raise ValueError("gamma_inf must be positive")

    @property
    def n_excited(self) -> int:
        return _two_j(self.F_excited, "F_excited") + 1

    @property
    def n_ground(self) -> int:
        return _two_j(self.F_ground, "F_ground") + 1

    @property
    def m_excited(self) -> np.ndarray:
        """Excited-state projections, ascending."""
        te = _two_j(self.F_excited, "F_excited")
        return np.arange(-te, te + 1, 2) / 2.0

    @property
    def m_ground(self) -> np.ndarray:
        tg = _two_j(self.F_ground, "F_ground")
        return np.arange(-tg, tg + 1, 2) / 2.0

    @property
    def lambda_bar_nm(self) -> float:
        """Reduced wavelength lambda0 / 2 pi, the internal length unit in nm."""
        return self.lambda0 / (2.0 * np.pi)

    def to_internal(self, length_nm) -> np.ndarray | float:
        return np.asarray(length_nm) / self.lambda_bar_nm

    def to_nm(self, length_internal) -> np.ndarray | float:
        return np.asarray(length_internal) * self.lambda_bar_nm


@dataclass(frozen=True)
class DipoleElement:
    """One nonzero spherical dipole matrix element <F m_e| d_q |F0 m_g>."""

    m_excited: float
    m_ground: float
    q: int
    value: float


@lru_cache(maxsize=None)
def _wigner3j_two(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    """Racah sum over exact rationals; arguments are doubled (2j, 2m)."""
    # selection rules
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2):
        return 0.0
    if (tj1 + tj2 + tj3) % 2 != 0:
        return 0.0
    # projections must have the same half-integer character as their j
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if (tj - tm) % 2 != 0:
            return 0.0

    def f(two_n: int) -> int:
        if two_n % 2 != 0:
            raise ValueError("internal: factorial of non-integer")
        n = two_n // 2
        if n < 0:
            raise ValueError("internal: factorial of negative")
        return factorial(n)

    # triangle coefficient and projection factorials, all exact
    norm = Fraction(
        f(tj1 + tj2 - tj3) * f(tj1 - tj2 + tj3) * f(-tj1 + tj2 + tj3),
        f(tj1 + tj2 + tj3 + 2),
    )
    norm *= Fraction(
        f(tj1 + tm1) * f(tj1 - tm1) * f(tj2 + tm2) * f(tj2 - tm2) * f(tj3 + tm3) * f(tj3 - tm3)
    )

    t_min = max(0, (tj2 - tj3 - tm1) // 2, (tj1 - tj3 + tm2) // 2)
    t_max = min((tj1 + tj2 - tj3) // 2, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    total = Fraction(0)
    for t in range(t_min, t_max + 1):
        den = (
            factorial(t)
            * f(tj3 - tj2 + tm1 + 2 * t)
            * f(tj3 - tj1 - tm2 + 2 * t)
            * f(tj1 + tj2 - tj3 - 2 * t)
            * f(tj1 - tm1 - 2 * t)
            * f(tj2 + tm2 - 2 * t)
        )
        total += Fraction((-1) ** t, den)
    if total == 0:
        return 0.0

    phase = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    # value = phase * sqrt(norm) * total; keep it exact until the final sqrt
    mag2 = norm * total * total
    sign = phase * (1 if total > 0 else -1)
    return sign * sqrt(mag2.numerator) / sqrt(mag2.denominator)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol; returns 0 when triangle or projection rules fail.

    Half-integer arguments are accepted; non-half-integers are rejected.
    """
    args = [
        _two_j(j1, "j1"),
        _two_j(j2, "j2"),
        _two_j(j3, "j3"),
        _two_j(m1, "m1"),
        _two_j(m2, "m2"),
        _two_j(m3, "m3"),
    ]
    if args[0] < 0 or args[1] < 0 or args[2] < 0:
        raise ValueError("j arguments must be >= 0")
    return _wigner3j_two(*args)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention."""
    tJ = _two_j(J, "J")
    tM = _two_j(M, "M")
    phase = -1 if ((_two_j(j1, "j1") - _two_j(j2, "j2") + tM) // 2) % 2 else 1
    return phase * sqrt(tJ + 1.0) * wigner3j(j1, j2, J, m1, m2, -M)


def dipole_matrix(scheme: TransitionScheme) -> list[DipoleElement]:
    """All nonzero spherical dipole elements d^q_{m_e, m_g} of the transition.

    Normalized so that (4/3) sum_m |d_nm|^2 = 1 (i.e. = gamma_inf) for every
    excited sublevel, which is Gamma_n of the closed transition in internal
    units; the reduced dipole is therefore sqrt(3)/2.
    """
    d_red = sqrt(3.0) / 2.0
    out = []
    for me in scheme.m_excited:
        for mg in scheme.m_ground:
            q = round(me - mg)
            if abs(q) > 1:
                continue
            v = d_red * clebsch_gordan(scheme.F_ground, mg, 1, q, scheme.F_excited, me)
            if v != 0.0:
                out.append(DipoleElement(float(me), float(mg), int(q), v))
    return out


def dipole_components_cartesian(scheme: TransitionScheme) -> np.ndarray:
    """Cartesian dipole components <F m_e| d_nu |F0 m_g> as a (3, n_e, n_g) array.

    Axis 0 is nu = x, y, z; excited and ground sublevels are ordered by
    ascending projection.  Entries are complex because the spherical unit
    vectors are.
    """
    n_e, n_g = scheme.n_excited, scheme.n_ground
    me_index = {float(m): i for i, m in enumerate(scheme.m_excited)}
    mg_index = {float(m): i for i, m in enumerate(scheme.m_ground)}
    q_index = {+1: 0, 0: 1, -1: 2}
    d_sph = np.zeros((3, n_e, n_g), dtype=complex)
    for el in dipole_matrix(scheme):
        d_sph[q_index[el.q], me_index[el.m_excited], mg_index[el.m_ground]] = el.value
    # d_vec = sum_q d_q e_q  ->  Cartesian component nu is row nu of the basis matrix
    return np.einsum("nq,qeg->neg", SPHERICAL_BASIS, d_sph)


def decay_sum(scheme: TransitionScheme) -> np.ndarray:
    """sum_m |d_nm|^2 for each excited sublevel (should all equal 3/4)."""
    d = dipole_components_cartesian(scheme)
    return np.einsum("neg,neg->e", d, d.conj()).real


def ground_dipole_sq_sum(scheme: TransitionScheme) -> float:
    """sum_n |d_nm|^2 over the excited manifold, for one ground sublevel m.

    Independent of m for a closed transition; used by the ground-state
    van-der-Waals estimate.  Computed from the dipole table directly.
    """
    d = dipole_components_cartesian(scheme)
    per_m = np.einsum("neg,neg->g", d, d.conj()).real
    if np.ptp(per_m) > 1e-10 * per_m.max():
        raise AssertionError("ground-manifold dipole sum is not m-independent")
    return float(per_m[0])


def spherical_to_cartesian(v_spherical) -> np.ndarray:
    """Map spherical components (q=+1, 0, -1) to Cartesian (x, y, z)."""
    v = np.asarray(v_spherical, dtype=complex)
    return SPHERICAL_BASIS @ v


def cartesian_to_spherical(v_cartesian) -> np.ndarray:
    """Inverse of :func:`spherical_to_cartesian` (conjugate transpose; unitary)."""
    v = np.asarray(v_cartesian, dtype=complex)
    return SPHERICAL_BASIS.conj().T @ v


def spin_matrices(F) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angular momentum matrices (F_x, F_y, F_z) in the |F M> basis, M ascending."""
    tF = _two_j(F, "F")
    m = np.arange(-tF, tF + 1, 2) / 2.0
    dim = tF + 1
    Fz = np.diag(m).astype(complex)
    # <M+1|F+|M> = sqrt(F(F+1) - M(M+1))
    Fp = np.zeros((dim, dim), dtype=complex)
    Ff = tF / 2.0
    for i in range(dim - 1):
        Fp[i + 1, i] = sqrt(Ff * (Ff + 1.0) - m[i] * (m[i] + 1.0))
    Fm = Fp.conj().T
    Fx = (Fp + Fm) / 2.0
    Fy = (Fp - Fm) / 2.0j
    return Fx, Fy, Fz
