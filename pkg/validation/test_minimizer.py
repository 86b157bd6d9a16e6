"""
Unit tests for the Dirichlet minimizer and its diagnostics.

Small lattices (4^3 slices, 8 time sites) keep each minimization to a
fraction of a second while still exercising every code path.
"""

import json
import pytest
import numpy as np
from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.lie import GroupKind
from src.core.errors import (BoundaryError, ConvergenceError, DiagnosticUnavailableError,
                             InvalidArgumentError)
from src.lattice.geometry import LatticeGeometry
from src.lattice.field import GaugeField, electric_field, slice_action
from src.lattice.data import (flat_boundary, single_mode_boundary, random_small_boundary,
                              localized_bump_boundary, random_slice_gauge)
from src.maxwell.vector_field import from_boundary
from src.maxwell.wheeler import abelian_mode_oracle
from src.yangmills.minimizer import (MinimizerConfig, DirichletMinimizer, free_link_mask,
                                     cold_start, minimize, principal_functional,
                                     random_start, minimize_multistart, report_from_field)
from src.yangmills.diagnostics import (hje_residual, functional_derivative_check,
                                       field_equation_residual, lagrangian_action,
                                       energy_density, decay_diagnostic)
from src.yangmills.gauge_fixing import fix_spatial_gauge, log_divergence


GEOM = LatticeGeometry(8, 4, 4, 4, 1.0)


def mode_datum(kind, amplitude=0.05):
    return single_mode_boundary(GEOM, kind, (1, 0, 0), amplitude, 2)


class TestMinimizerConfig:
    """Test minimizer settings validation."""

    def test_defaults(self):
        """Defaults match the documented stopping rule."""
        config = MinimizerConfig()

        assert config.max_iters == 5000
        assert config.grad_tol == 1e-9
        assert config.weyl_gauge == True
        assert config.start_profile == "damped"

    @pytest.mark.parametrize("kwargs", [
        {'max_iters': -1},
        {'grad_tol': 0.0},
        {'initial_step': -0.1},
        {'backtrack_factor': 1.0},
        {'armijo_constant': 0.0},
        {'start_profile': 'linear'},
        {'method': 'newton'},
        {'max_backtracks': 0},
    ])
    def test_invalid(self, kwargs):
        """Out-of-range settings are rejected."""
        with pytest.raises(InvalidArgumentError):
            MinimizerConfig(**kwargs)


class TestStarts:
    """Test masks and initial fields."""

    def test_weyl_mask(self):
        """In Weyl gauge only spatial links with t >= 1 are free."""
        mask = free_link_mask(GEOM, True)

        assert mask.shape == (GEOM.n_t, 4)
        assert not mask[0].any()
        assert not mask[:, 0].any()
        assert mask[1:, 1:].all()

    def test_non_weyl_mask(self):
        """Without Weyl gauge the temporal links are free too."""
        mask = free_link_mask(GEOM, False)

        assert mask[:-1, 0].all()
        assert not mask[-1, 0]
        assert not mask[0, 1:].any()

    @pytest.mark.parametrize("profile", ["constant", "damped"])
    def test_cold_start_keeps_datum(self, profile):
        """Cold starts carry the datum on t = 0 and are in Weyl gauge."""
        bd = mode_datum(GroupKind.SU2)

        field = cold_start(bd, GEOM, profile)

        np.testing.assert_array_equal(field.links[0, :, :, :, 1:, :], bd.links)
        assert field.is_weyl()

    def test_random_start_is_seeded(self):
        """Equal seeds give equal starts."""
        bd = mode_datum(GroupKind.U1)
        config = MinimizerConfig()

        first = random_start(bd, GEOM, config, seed=3)
        second = random_start(bd, GEOM, config, seed=3)

        np.testing.assert_array_equal(first.links, second.links)
        np.testing.assert_array_equal(first.links[0, :, :, :, 1:, :], bd.links)


class TestMinimize:
    """Test the minimizer on known data."""

    @pytest.mark.parametrize("kind", [GroupKind.U1, GroupKind.SU2])
    def test_flat_datum(self, kind):
        """Flat data give S = 0 and E = 0 immediately."""
        report = minimize(flat_boundary(GEOM, kind), GEOM)

        assert report.S == 0.0
        assert report.converged == True
        assert np.all(report.E == 0.0)

    @pytest.mark.parametrize("kind", [GroupKind.U1, GroupKind.SU2])
    def test_dirichlet_exact_and_monotone(self, kind):
        """t = 0 links are bit-identical to the datum and the trace never rises."""
        bd = mode_datum(kind)

        report = minimize(bd, GEOM)
        trace = np.array([s for _, s in report.action_trace])

        assert report.converged == True
        assert report.grad_norm <= 1e-9
        assert report.final_field.links[0, :, :, :, 1:, :].tobytes() == bd.links.tobytes()
        assert report.final_field.is_weyl()
        assert np.all(np.diff(trace) <= 0.0)
        assert report.S < trace[0]

    def test_u1_matches_mode_oracle(self):
        """The U(1) minimum equals the decoupled lattice-mode value."""
        bd = mode_datum(GroupKind.U1)

        report = minimize(bd, GEOM)
        oracle = abelian_mode_oracle(from_boundary(bd), n_t=GEOM.n_t, lattice=True)

        assert report.S == pytest.approx(oracle, rel=1e-6)

    @pytest.mark.parametrize("kind", [GroupKind.U1, GroupKind.SU2])
    def test_gauge_invariance(self, kind):
        """Gauge-transformed data have the same principal functional."""
        bd = random_small_boundary(GEOM, kind, scale=0.05, seed=1)
        g = random_slice_gauge(GEOM, kind, seed=2)

        S = principal_functional(bd, GEOM)
        S_g = principal_functional(bd.gauge_transform(g), GEOM)

        assert S_g == pytest.approx(S, rel=1e-8)

    def test_u1_exactly_quadratic(self):
        """S(eps) / eps^2 is constant for U(1)."""
        ratios = [principal_functional(mode_datum(GroupKind.U1, eps), GEOM) / eps ** 2
                  for eps in (0.01, 0.02, 0.04)]

        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-6)

    def test_su2_quadratic_scaling(self):
        """S(eps) / eps^2 is constant within 1% for small SU(2) data."""
        ratios = [principal_functional(mode_datum(GroupKind.SU2, eps), GEOM) / eps ** 2
                  for eps in (0.01, 0.02, 0.04)]

        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-2)

    def test_electric_field_matches_links(self):
        """Reported E equals the forward difference of the boundary slices."""
        report = minimize(mode_datum(GroupKind.SU2), GEOM)

        np.testing.assert_allclose(report.E, electric_field(report.final_field), atol=1e-14)

    def test_warm_start_agrees(self):
        """A random warm start reaches the cold-start minimum."""
        bd = mode_datum(GroupKind.SU2)
        config = MinimizerConfig()

        cold = minimize(bd, GEOM, config)
        warm = minimize(bd, GEOM, config, warm_start=random_start(bd, GEOM, config, seed=5))

        assert warm.converged == True
        assert warm.S == pytest.approx(cold.S, rel=1e-8)

    def test_damped_profile_agrees(self):
        """The start profile does not change the minimum."""
        bd = mode_datum(GroupKind.U1)

        constant = minimize(bd, GEOM, MinimizerConfig(start_profile="constant"))
        damped = minimize(bd, GEOM, MinimizerConfig(start_profile="damped"))

        assert damped.S == pytest.approx(constant.S, rel=1e-8)

    def test_non_weyl_agrees(self):
        """Freeing temporal links does not lower the minimum."""
        bd = mode_datum(GroupKind.U1)

        weyl = minimize(bd, GEOM)
        free = minimize(bd, GEOM, MinimizerConfig(weyl_gauge=False))

        assert free.S == pytest.approx(weyl.S, rel=1e-7)

    def test_gradient_descent_descends(self):
        """Steepest descent lowers the action monotonically."""
        bd = mode_datum(GroupKind.U1)

        report = minimize(bd, GEOM, MinimizerConfig(method="gd", max_iters=50))
        trace = np.array([s for _, s in report.action_trace])

        assert np.all(np.diff(trace) <= 0.0)
        assert report.S < trace[0]

    def test_iteration_limit(self):
        """Running out of iterations is reported, not raised."""
        report = minimize(mode_datum(GroupKind.SU2), GEOM, MinimizerConfig(max_iters=1))

        assert report.converged == False
        assert report.iterations <= 1

    def test_require_converged(self):
        """principal_functional can insist on convergence."""
        with pytest.raises(ConvergenceError):
            principal_functional(mode_datum(GroupKind.SU2), GEOM,
                                 MinimizerConfig(max_iters=1), require_converged=True)

    def test_bad_warm_start(self):
        """Warm starts must carry the datum on t = 0."""
        bd = mode_datum(GroupKind.U1)

        with pytest.raises(InvalidArgumentError):
            minimize(bd, GEOM, warm_start=GaugeField.identity(GEOM, GroupKind.U1))

    def test_report_document(self):
        """Reports serialize to JSON with the datum digest."""
        bd = mode_datum(GroupKind.U1)

        doc = minimize(bd, GEOM).to_dict()

        assert doc['datum_sha256'] == bd.digest()
        assert doc['E']['shape'] == [4, 4, 4, 3, 1]
        json.dumps(doc)

    def test_validation_checks(self):
        """The minimizer's own checks pass on its output."""
        problem = DirichletMinimizer(mode_datum(GroupKind.SU2), GEOM)

        is_valid, violations = problem.validate_solution(problem.solve())

        assert is_valid == True
        assert violations == []

    def test_report_from_field(self):
        """Wrapping a constant extension records zero iterations."""
        field = cold_start(mode_datum(GroupKind.U1), GEOM, "constant")

        report = report_from_field(field)

        assert report.iterations == 0
        assert report.converged == False
        assert len(report.action_trace) == 1


class TestMultiStart:
    """Test independent starts."""

    def test_spread_small(self):
        """Every start reaches the same minimum on a convex problem."""
        result = minimize_multistart(mode_datum(GroupKind.U1), GEOM, n_starts=3)

        assert len(result.values) == 3
        assert result.spread <= 1e-8 * result.S_min
        assert result.best.S == result.S_min

    def test_threads_do_not_change_values(self):
        """Parallel starts give the same values in the same order."""
        bd = mode_datum(GroupKind.SU2)

        serial = minimize_multistart(bd, GEOM, n_starts=2, threads=1)
        parallel = minimize_multistart(bd, GEOM, n_starts=2, threads=2)

        assert serial.values == parallel.values

    def test_invalid_count(self):
        """At least one start is required."""
        with pytest.raises(InvalidArgumentError):
            minimize_multistart(mode_datum(GroupKind.U1), GEOM, n_starts=0)


class TestDiagnostics:
    """Test identities evaluated on minimizer output."""

    def test_hje_residual_u1(self):
        """The lattice Hamilton-Jacobi identity holds for a decaying mode."""
        report = minimize(mode_datum(GroupKind.U1), GEOM)

        gap = hje_residual(report)

        assert gap.lhs > 0.0
        assert gap.rel_gap < 1e-4

    def test_field_equations_hold(self):
        """Interior links satisfy the Euler-Lagrange equations."""
        report = minimize(mode_datum(GroupKind.SU2), GEOM)

        assert field_equation_residual(report) <= 1e-8

    def test_lagrangian_reproduces_action(self):
        """Kinetic plus magnetic parts sum to S."""
        report = minimize(mode_datum(GroupKind.SU2), GEOM)

        split = lagrangian_action(report)

        assert split.kinetic > 0.0
        assert split.potential > 0.0
        assert split.total == pytest.approx(report.S, rel=1e-12)

    def test_energy_density(self):
        """Energy is positive on t = 0 and undefined on the last slice."""
        report = minimize(mode_datum(GroupKind.U1), GEOM)

        assert energy_density(report, 0) > 0.0
        with pytest.raises(BoundaryError):
            energy_density(report, GEOM.n_t - 1)

    def test_functional_derivative_u1(self):
        """Finite differences of S match the boundary momentum."""
        bd = mode_datum(GroupKind.U1)
        rng = np.random.RandomState(0)
        h = rng.uniform(-0.1, 0.1, bd.links.shape[:4] + (1,))
        config = MinimizerConfig()

        gap = functional_derivative_check(bd, GEOM, config, h, eps=1e-3)

        assert gap.rel_gap < 1e-4

    def test_functional_derivative_rejects_large_h(self):
        """Perturbations above 0.1 in sup norm are invalid."""
        bd = mode_datum(GroupKind.U1)
        h = np.full(bd.links.shape[:4] + (1,), 0.5)

        with pytest.raises(InvalidArgumentError):
            functional_derivative_check(bd, GEOM, MinimizerConfig(), h)

    def test_decay_needs_support(self):
        """A flat datum has nothing to decay from."""
        report = minimize(flat_boundary(GEOM, GroupKind.U1), GEOM)

        with pytest.raises(DiagnosticUnavailableError):
            decay_diagnostic(report)

    def test_decay_of_localized_bump(self):
        """A localized abelian bump falls off at least like r^-3 inside the fit band."""
        geom = LatticeGeometry(24, 12, 12, 12, 1.0)
        report = minimize(localized_bump_boundary(geom, GroupKind.U1), geom)

        decay = decay_diagnostic(report)

        R = 6.0
        assert report.converged == True
        assert decay.p_F <= -3.0
        assert len(decay.radii) >= 4
        assert decay.radii.min() >= 0.25 * R
        assert decay.radii.max() <= 0.75 * R


class TestGaugeFixing:
    """Test spatial gauge fixing of slices."""

    def test_divergence_removed(self):
        """Fixing drives the log divergence below tolerance and keeps the action."""
        bd = random_small_boundary(GEOM, GroupKind.SU2, scale=0.05, seed=4)
        g = random_slice_gauge(GEOM, GroupKind.SU2, seed=5, scale=0.3)
        rotated = bd.gauge_transform(g)

        fixed, g_fix = fix_spatial_gauge(rotated)

        assert np.max(np.abs(log_divergence(fixed))) <= 1e-8
        assert slice_action(fixed) == pytest.approx(slice_action(bd), rel=1e-10)
        assert g_fix.shape == (4, 4, 4, 4)

    def test_pure_gauge_slice_becomes_flat(self):
        """A small pure gauge slice is fixed back to the identity."""
        bd = flat_boundary(GEOM, GroupKind.U1).gauge_transform(
            random_slice_gauge(GEOM, GroupKind.U1, seed=6, scale=0.2))

        fixed, _ = fix_spatial_gauge(bd)

        assert np.max(np.abs(fixed.logs())) <= 1e-7

    def test_field_gauge_fixing(self):
        """Whole fields are fixed slice by slice."""
        report = minimize(mode_datum(GroupKind.U1), GEOM)

        fixed, g = fix_spatial_gauge(report.final_field)

        assert g.shape == GEOM.shape + (1,)
        assert fixed.geometry == GEOM

    def test_odd_extent_rejected(self):
        """Checkerboard sweeps need even extents."""
        geom = LatticeGeometry(4, 5, 4, 4, 1.0)

        with pytest.raises(InvalidArgumentError):
            fix_spatial_gauge(flat_boundary(geom, GroupKind.U1))


def run_tests():
    """Run all unit tests."""
    pytest.main([__file__, '-v'])


if __name__ == "__main__":
    run_tests()
