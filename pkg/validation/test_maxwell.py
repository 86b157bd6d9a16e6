"""
Unit tests for the abelian ground state functional.

Tests cover the transverse projection, both forms of S, the per-mode
decay oracle, the boost identity and vector field persistence.
"""

import pytest
import numpy as np
from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.lie import GroupKind
from src.core.errors import InvalidArgumentError, MagicMismatchError, TruncatedFileError
from src.lattice.geometry import LatticeGeometry
from src.lattice.data import single_mode_boundary
from src.maxwell.vector_field import (VectorFieldGrid, transverse_project, curl, wavevectors,
                                      reflect, localized_transverse_field, gradient_field,
                                      single_mode_field, from_boundary, to_boundary,
                                      save_vector_field, load_vector_field, wrap_fraction)
from src.maxwell.wheeler import (wheeler_S_spectral, wheeler_S_kernel, functional_derivative,
                                 cell_integral, abelian_mode_oracle, lattice_mode_action,
                                 boost_identity_check, translation_generator, mode_scale,
                                 spectral_kernel_gap)


def mode_value(N, a, alpha, m=1):
    """S of A_pol = alpha cos(k.x) summed by hand over the two modes +-k."""
    k = 2.0 * np.pi * m / (N * a)
    return 0.25 * k * alpha ** 2 * (N * a) ** 3


class TestVectorFieldGrid:
    """Test the grid type and its operators."""

    def test_shape_validation(self):
        """Only (N, N, N, 3) arrays are fields."""
        with pytest.raises(InvalidArgumentError):
            VectorFieldGrid(np.zeros((4, 4, 5, 3)))
        with pytest.raises(InvalidArgumentError):
            VectorFieldGrid(np.zeros((4, 4, 4, 2)))

    def test_non_finite(self):
        """NaN components are rejected."""
        comps = np.zeros((4, 4, 4, 3))
        comps[0, 0, 0, 0] = np.nan

        with pytest.raises(InvalidArgumentError):
            VectorFieldGrid(comps)

    def test_wavevectors(self):
        """k = 2 pi m / (N a) with the standard aliasing."""
        k = wavevectors(8, 0.5)

        assert k[1, 0, 0, 0] == pytest.approx(2.0 * np.pi / 4.0)
        assert k[7, 0, 0, 0] == pytest.approx(-2.0 * np.pi / 4.0)

    def test_reflect(self):
        """Reflection flips the normal component and mirrors the grid."""
        A = localized_transverse_field(8, seed=1)

        R = reflect(A, 0)

        np.testing.assert_array_equal(R.components[0, ..., 0], -A.components[-1, ..., 0])
        np.testing.assert_array_equal(R.components[0, ..., 1], A.components[-1, ..., 1])
        with pytest.raises(InvalidArgumentError):
            reflect(A, 3)

    def test_wrap_fraction(self):
        """Density touching a face counts as wrapped."""
        density = np.zeros((10, 10, 10))
        density[5, 5, 5] = 1.0
        assert wrap_fraction(density) == 0.0

        density[0, 5, 5] = 1.0
        assert wrap_fraction(density) == 0.5


class TestTransverseProjection:
    """Test the transverse projection."""

    def test_gradient_removed(self):
        """A = grad(phi) has no transverse content."""
        A = gradient_field(24, width=2.0)

        spectrum = transverse_project(A).spectrum

        assert np.max(np.abs(spectrum)) <= 1e-6 * np.max(np.abs(A.spectral()))

    def test_transverse_wave_unchanged(self):
        """A transverse plane wave is its own projection."""
        A = single_mode_field(8, 1.0, (1, 0, 0), 0.3, 2)

        back = transverse_project(A).to_grid()

        np.testing.assert_allclose(back.components, A.components, atol=1e-12)

    def test_idempotent_and_transverse(self):
        """Projecting twice changes nothing and k.A_T vanishes."""
        rng = np.random.RandomState(0)
        A = VectorFieldGrid(rng.standard_normal((7, 7, 7, 3)))

        once = transverse_project(A)
        twice = transverse_project(once.to_grid())

        np.testing.assert_allclose(twice.spectrum, once.spectrum, atol=1e-10)
        assert once.max_longitudinal() <= 1e-12

    def test_curl_unchanged(self):
        """curl A = curl A_T."""
        rng = np.random.RandomState(1)
        A = VectorFieldGrid(rng.standard_normal((7, 7, 7, 3)))

        np.testing.assert_allclose(curl(transverse_project(A).to_grid(), "spectral"),
                                   curl(A, "spectral"), atol=1e-12)

    def test_curl_methods_agree_on_smooth_fields(self):
        """Fourth-order differences approach the spectral curl."""
        A = localized_transverse_field(32, width=3.0)

        diff = curl(A, "central4") - curl(A, "spectral")

        assert np.max(np.abs(diff)) <= 1e-2 * np.max(np.abs(curl(A, "spectral")))
        with pytest.raises(InvalidArgumentError):
            curl(A, "upwind")


class TestSpectralFunctional:
    """Test the spectral form of S."""

    def test_single_mode(self):
        """One transverse mode gives 1/2 |k| alpha^2 V / 2."""
        A = single_mode_field(8, 0.5, (1, 0, 0), 0.3, 3)

        assert wheeler_S_spectral(A) == pytest.approx(mode_value(8, 0.5, 0.3), rel=1e-12)

    def test_gradient_is_zero(self):
        """Longitudinal fields cost nothing."""
        A = gradient_field(24, width=2.0)

        assert wheeler_S_spectral(A) <= 1e-12 * mode_scale(A)
        assert mode_scale(A) > 0.0

    def test_disjoint_modes_add(self):
        """S is additive over disjoint modes."""
        A = single_mode_field(8, 1.0, (1, 0, 0), 0.3, 2)
        B = single_mode_field(8, 1.0, (0, 2, 0), 0.2, 3)

        assert wheeler_S_spectral(A + B) == pytest.approx(
            wheeler_S_spectral(A) + wheeler_S_spectral(B), rel=1e-12)

    def test_non_negative(self):
        """S >= 0 for random fields."""
        rng = np.random.RandomState(2)
        for _ in range(5):
            assert wheeler_S_spectral(VectorFieldGrid(rng.standard_normal((6, 6, 6, 3)))) >= 0.0

    def test_quadratic(self):
        """S(c A) = c^2 S(A)."""
        A = localized_transverse_field(12, seed=3)

        assert wheeler_S_spectral(A.scaled(3.0)) == pytest.approx(9.0 * wheeler_S_spectral(A), rel=1e-12)

    def test_functional_derivative_pairing(self):
        """<dS/dA, A> a^3 = 2 S for a quadratic functional."""
        A = localized_transverse_field(13, seed=4)

        pairing = A.a ** 3 * float(np.sum(functional_derivative(A).components * A.components))

        assert pairing == pytest.approx(2.0 * wheeler_S_spectral(A), rel=1e-10)


class TestKernelFunctional:
    """Test the position-space kernel form."""

    def test_zero_field(self):
        """A = 0 gives 0."""
        assert wheeler_S_kernel(VectorFieldGrid.zeros(16)).S == 0.0

    def test_small_grid_rejected(self):
        """The kernel form needs N >= 16."""
        with pytest.raises(InvalidArgumentError):
            wheeler_S_kernel(VectorFieldGrid.zeros(8))

    def test_cell_integral(self):
        """The diagonal cell average exceeds the value at the cube corners."""
        assert cell_integral() > 4.0 / 3.0
        assert cell_integral() == cell_integral()

    def test_localized_agreement(self):
        """Kernel and spectral forms agree within 5% on 24^3."""
        A = localized_transverse_field(24, width=3.0, seed=0)

        result = spectral_kernel_gap(A)

        assert result['delocalized'] == False
        assert result['pure_gauge'] == False
        assert result['rel_gap'] <= 0.05

    def test_gap_shrinks_under_refinement(self):
        """Halving a on the same box reduces the gap."""
        coarse = spectral_kernel_gap(localized_transverse_field(24, 1.0, width=3.0, seed=0))
        fine = spectral_kernel_gap(localized_transverse_field(48, 0.5, width=3.0, seed=0))

        assert fine['rel_gap'] < coarse['rel_gap']

    def test_gradient_field_flagged(self):
        """Pure gauge fields are measured against the mode scale."""
        result = spectral_kernel_gap(gradient_field(24, width=3.0))

        assert result['pure_gauge'] == True
        assert result['rel_gap'] <= 1e-3

    def test_delocalized_warning(self):
        """A plane wave fills the wrap band."""
        A = single_mode_field(16, 1.0, (1, 0, 0), 0.3, 2)

        assert wheeler_S_kernel(A).delocalized == True


class TestModeOracle:
    """Test the per-mode decay oracle."""

    def test_zero_datum(self):
        """A zero field gives zero for every variant."""
        A = VectorFieldGrid.zeros(8)

        assert abelian_mode_oracle(A) == 0.0
        assert abelian_mode_oracle(A, n_t=8) == 0.0
        assert abelian_mode_oracle(A, n_t=8, lattice=True) == 0.0

    def test_infinite_extent_matches_spectral(self):
        """Without a finite extent the oracle is the spectral form."""
        A = localized_transverse_field(12, seed=5)

        assert abelian_mode_oracle(A) == pytest.approx(wheeler_S_spectral(A), rel=1e-10)

    def test_finite_extent_rate(self):
        """A free end at T damps the rate to |k| tanh(|k| T)."""
        N, a, n_t = 8, 1.0, 4
        A = single_mode_field(N, a, (1, 0, 0), 0.3, 2)
        k = 2.0 * np.pi / (N * a)

        value = abelian_mode_oracle(A, n_t=n_t)

        assert value == pytest.approx(mode_value(N, a, 0.3) * np.tanh(k * (n_t - 1) * a), rel=1e-6)

    def test_long_extent_approaches_spectral(self):
        """Long extents recover the half-space value."""
        A = single_mode_field(8, 1.0, (1, 0, 0), 0.3, 2)

        assert abelian_mode_oracle(A, n_t=60) == pytest.approx(wheeler_S_spectral(A), rel=1e-6)

    def test_lattice_dispersion_close_to_continuum(self):
        """Long-wavelength lattice modes follow the continuum within 2%."""
        A = single_mode_field(16, 1.0, (1, 0, 0), 0.05, 2)

        lattice = abelian_mode_oracle(A, lattice=True)

        assert lattice == pytest.approx(wheeler_S_spectral(A), rel=0.02)

    def test_lattice_mode_action(self):
        """The finite profile tends to the infinite one and vanishes for mu = 0."""
        assert lattice_mode_action(0.0, 8) == 0.0
        assert lattice_mode_action(0.5, 200) == pytest.approx(lattice_mode_action(0.5, None), rel=1e-12)
        assert lattice_mode_action(0.5, 3) < lattice_mode_action(0.5, None)

    def test_lattice_oracle_from_boundary(self):
        """U(1) lattice data convert to the vector field the oracle reads."""
        geom = LatticeGeometry(8, 6, 6, 6, 1.0)
        bd = single_mode_boundary(geom, GroupKind.U1, (0, 1, 0), 0.05, 1)

        A = from_boundary(bd)

        np.testing.assert_allclose(A.components, single_mode_field(6, 1.0, (0, 1, 0), 0.05, 1).components,
                                   atol=1e-15)
        assert abelian_mode_oracle(A, n_t=8, lattice=True) > 0.0

    def test_bad_extent(self):
        """n_t must be at least 2."""
        with pytest.raises(InvalidArgumentError):
            abelian_mode_oracle(VectorFieldGrid.zeros(4), n_t=1)


class TestBoostIdentity:
    """Test the boost identity and the translation generator."""

    @pytest.mark.parametrize("axis", [0, 1, 2])
    def test_localized_field(self, axis):
        """Both moments agree within 2% on 32^3."""
        A = localized_transverse_field(32, width=3.0, seed=6)

        check = boost_identity_check(A, axis)

        assert check.delocalized == False
        assert check.rel_gap <= 0.02

    def test_reflection_flips_sign(self):
        """Mirroring along the axis negates both sides."""
        A = localized_transverse_field(15, width=2.5, center=(5.0, 7.0, 7.0), seed=7)

        check = boost_identity_check(A, 0)
        mirrored = boost_identity_check(reflect(A, 0), 0)

        assert mirrored.lhs == pytest.approx(-check.lhs, abs=1e-10 * max(1.0, abs(check.lhs)))
        assert mirrored.rhs == pytest.approx(-check.rhs, abs=1e-10 * max(1.0, abs(check.rhs)))

    def test_even_field(self):
        """Fields independent of x^i give vanishing moments."""
        A = single_mode_field(16, 1.0, (0, 1, 0), 0.3, 1)

        check = boost_identity_check(A, 0)

        assert abs(check.lhs) <= 1e-10
        assert abs(check.rhs) <= 1e-10

    def test_gradient_field(self):
        """Pure gauge fields have vanishing moments up to discretization."""
        A = gradient_field(24, width=3.0)

        check = boost_identity_check(A, 1)

        assert abs(check.lhs) <= 1e-3 * mode_scale(A)
        assert abs(check.rhs) <= 1e-3 * mode_scale(A)

    def test_translation_generator_vanishes(self):
        """S is translation invariant."""
        A = localized_transverse_field(15, width=2.5, seed=8)

        generator = translation_generator(A)

        assert np.max(np.abs(generator)) <= 1e-10 * wheeler_S_spectral(A)


class TestPersistence:
    """Test the raw vector field file."""

    def test_round_trip(self, tmp_path):
        """save -> load reproduces components and spacing."""
        A = localized_transverse_field(8, 0.25, seed=9)

        loaded = load_vector_field(save_vector_field(A, tmp_path / "A.vf"))

        assert loaded.a == A.a
        assert loaded.components.tobytes() == A.components.tobytes()

    def test_bad_header(self, tmp_path):
        """Files without the tag are rejected."""
        path = tmp_path / "bad.vf"
        path.write_bytes(b"something else\n")

        with pytest.raises(MagicMismatchError):
            load_vector_field(path)

    def test_truncated(self, tmp_path):
        """A short payload is detected."""
        path = save_vector_field(VectorFieldGrid.zeros(4), tmp_path / "A.vf")
        path.write_bytes(path.read_bytes()[:-8])

        with pytest.raises(TruncatedFileError):
            load_vector_field(path)

    def test_boundary_conversion(self):
        """U(1) link phases are a A."""
        A = localized_transverse_field(6, 0.5, seed=10)

        back = from_boundary(to_boundary(A))

        np.testing.assert_allclose(back.components, A.components, atol=1e-14)

    def test_su2_not_a_vector_field(self):
        """Nonabelian data do not map to one vector field."""
        geom = LatticeGeometry(4, 4, 4, 4, 1.0)
        bd = single_mode_boundary(geom, GroupKind.SU2, (1, 0, 0), 0.05, 2)

        with pytest.raises(InvalidArgumentError):
            from_boundary(bd)


def run_tests():
    """Run all unit tests."""
    pytest.main([__file__, '-v'])


if __name__ == "__main__":
    run_tests()
