import numpy as np
import pytest

from dipolespec.geometry import Box, CombPCW, Cylinder, Slab
from dipolespec.vdw import (QuadratureError, VdwSpec, image_potential_flat,
                            kernel_volume_integral, slab_approximating_halfspace,
                            vdw_shift, vdw_shift_detailed)

EPS = 2.1025
S_TRIPOD = 0.25  # ground-sublevel dipole sum for the n_e = 1 scheme


class TestHalfSpaceOracle:
    @pytest.mark.parametrize("z", [0.8, 1.6, 3.2])
    def test_kernel_matches_analytic(self, z):
        slab = slab_approximating_halfspace(z)
        val, err = kernel_volume_integral(slab, [0, 0, z], 5e-7)
        exact = np.pi / (6 * z**3)
        assert abs(val - exact) / exact < 1e-6
        assert err < 1e-6 * exact

    def test_cubic_scaling(self):
        d1 = vdw_shift(VdwSpec(EPS, S_TRIPOD, slab_approximating_halfspace(1.0), 1e-7),
                       [0, 0, 1.0])
        d2 = vdw_shift(VdwSpec(EPS, S_TRIPOD, slab_approximating_halfspace(2.0), 1e-7),
                       [0, 0, 2.0])
        assert d1 / d2 == pytest.approx(8.0, rel=1e-5)

    def test_eps_to_one_matches_image_potential(self):
        eps = 1.0001
        z = 1.3
        spec = VdwSpec(eps, S_TRIPOD, slab_approximating_halfspace(z), 1e-7)
        shift = vdw_shift(spec, [0, 0, z])
        image = image_potential_flat(eps, S_TRIPOD, z)
        assert shift / image == pytest.approx(1.0, abs=1e-4)
        # both reduce to -(eps - 1) S / (24 z^3)
        limit = -(eps - 1) * S_TRIPOD / (24 * z**3)
        assert shift == pytest.approx(limit, rel=1e-4)

    def test_flat_ratio_prefactor(self):
        # U_image / Delta_halfspace = 2 (eps + 2) / (3 (eps + 1)) for any z
        z = 0.9
        spec = VdwSpec(EPS, S_TRIPOD, slab_approximating_halfspace(z), 1e-7)
        ratio = image_potential_flat(EPS, S_TRIPOD, z) / vdw_shift(spec, [0, 0, z])
        assert ratio == pytest.approx(2 * (EPS + 2) / (3 * (EPS + 1)), rel=1e-5)


class TestImagePotential:
    def test_conductor_limit(self):
        u_metal = image_potential_flat(1e9, 1.0, 1.0)
        assert u_metal == pytest.approx(-1.0 / 12.0, rel=1e-8)

    def test_scaling_and_sign(self):
        assert image_potential_flat(2.0, 1.0, 2.0) == pytest.approx(
            image_potential_flat(2.0, 1.0, 1.0) / 8.0)
        assert image_potential_flat(2.0, 1.0, 1.0) < 0.0
        with pytest.raises(ValueError):
            image_potential_flat(2.0, 1.0, 0.0)


class TestQuadrature:
    def test_monotone_along_outward_ray(self):
        cyl = Cylinder(radius=1.6, length=10.0)
        spec = VdwSpec(EPS, S_TRIPOD, cyl, 1e-6)
        shifts = [vdw_shift(spec, [rho, 0, 0]) for rho in (2.0, 2.5, 3.2, 4.5)]
        mags = [-s for s in shifts]
        assert all(m > 0 for m in mags)
        assert mags == sorted(mags, reverse=True)

    def test_additivity_of_split_slab(self):
        whole = Box(lo=(-4, -4, -2), hi=(4, 4, 0))
        left = Box(lo=(-4, -4, -2), hi=(0, 4, 0))
        right = Box(lo=(0, -4, -2), hi=(4, 4, 0))
        pos = [0.3, -0.2, 1.1]
        v_whole, _ = kernel_volume_integral(whole, pos, 1e-8)
        v_left, _ = kernel_volume_integral(left, pos, 1e-8)
        v_right, _ = kernel_volume_integral(right, pos, 1e-8)
        assert v_left + v_right == pytest.approx(v_whole, rel=1e-7)

    @pytest.mark.parametrize("geom,placement,dist", [
        (Cylinder(radius=1.6, length=8.0), "radial", 2.6),
        (CombPCW(period=2.9, tooth_height=4.35, tooth_width=1.45,
                 backbone_width=1.74, backbone_thickness=2.32, n_periods=5),
         "behind_tooth", 1.0),
    ])
    def test_halving_tolerance_is_within_error(self, geom, placement, dist):
        pos = geom.atom_site(placement, dist)
        coarse, err = kernel_volume_integral(geom, pos, 2e-5)
        fine, _ = kernel_volume_integral(geom, pos, 1e-5)
        assert abs(fine - coarse) <= err

    def test_position_inside_rejected(self):
        cyl = Cylinder(radius=1.6, length=10.0)
        spec = VdwSpec(EPS, S_TRIPOD, cyl, 1e-6)
        with pytest.raises(ValueError, match="non-integrable"):
            vdw_shift(spec, [0.5, 0, 0])

    def test_error_estimate_reported(self):
        cyl = Cylinder(radius=1.6, length=10.0)
        spec = VdwSpec(EPS, S_TRIPOD, cyl, 1e-6)
        shift, err = vdw_shift_detailed(spec, [2.5, 0, 0])
        assert shift < 0
        assert 0 <= err < abs(shift) * 1e-5

    def test_cell_budget_guard(self):
        big = slab_approximating_halfspace(1.0)
        with pytest.raises(QuadratureError):
            kernel_volume_integral(big, [0, 0, 1.0], 1e-14)


class TestSpecValidation:
    def test_rejects_bad_parameters(self):
        cyl = Cylinder(radius=1.0, length=2.0)
        with pytest.raises(ValueError):
            VdwSpec(1.0, 1.0, cyl)
        with pytest.raises(ValueError):
            VdwSpec(2.0, -1.0, cyl)
        with pytest.raises(ValueError):
            VdwSpec(2.0, 1.0, cyl, quad_tol=0.0)
