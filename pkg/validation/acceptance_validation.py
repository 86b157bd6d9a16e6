"""
Desk-scale acceptance runs.

Each method runs one oracle- or property-based study on the full-size
lattices, prints progress and writes its results to outputs/validation.
The pytest suites cover the same behaviour on reduced lattices.
"""

import numpy as np
from typing import Any, Dict, Sequence
from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.checks import relative_gap
from src.core.exports import export_to_json
from src.core.lie import GroupKind
from src.lattice.geometry import LatticeGeometry
from src.lattice.data import single_mode_boundary, localized_bump_boundary, DatumSpec
from src.quantum.hj1d import (anharmonic_study, residual_convergence, principal_from_closed_form,
                              anharmonic_potential, PotentialGrid, nno_residual)
from src.maxwell.vector_field import localized_transverse_field, from_boundary, reflect
from src.maxwell.wheeler import spectral_kernel_gap, boost_identity_check, abelian_mode_oracle
from src.yangmills.minimizer import (DirichletMinimizer, MinimizerConfig, minimize,
                                    minimize_multistart)
from src.yangmills.diagnostics import hje_residual, decay_diagnostic
from src.verification.suite import (SuiteConfig, run_suite, all_passed, check_gauge_invariance,
                                    check_derivative, DERIV_TOL, GAUGE_TOL, HJE_TOL)


HINGE_GEOMETRY = LatticeGeometry(16, 8, 8, 8, 1.0)
SMALL_AMPLITUDE = 0.05


class AcceptanceValidator:
    """Runs the acceptance studies and records them as JSON."""

    def __init__(self, output_dir: str = "outputs/validation", threads: int = 1):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.threads = threads
        self.minimizer = MinimizerConfig()

    def _save(self, results: Dict[str, Any], name: str) -> Dict[str, Any]:
        export_to_json(results, self.output_dir / name)
        print(f"   {'PASS' if results['passed'] else 'FAIL'}: saved to {self.output_dir / name}")
        return results

    def _datum(self, kind: GroupKind, geometry: LatticeGeometry = HINGE_GEOMETRY):
        return single_mode_boundary(geometry, kind, (1, 0, 0), SMALL_AMPLITUDE, 2)

    # ------------------------------------------------------------------
    # One-dimensional oracle
    # ------------------------------------------------------------------

    def qm_annihilation(self, lams: Sequence[float] = (0.5, 1.0, 2.0)) -> Dict[str, Any]:
        """
        Ordered Hamiltonian residual and closed-form agreement.

        Returns:
            Dictionary with per-coupling residuals and convergence orders
        """
        print("\nChecking zero-energy annihilation of the anharmonic ground state...")
        results = {'couplings': [], 'passed': True}
        for lam in lams:
            study = anharmonic_study(lam, h=1e-3, closed_form=True)
            order = residual_convergence(lam)['order']
            entry = {
                'lambda': lam,
                'nno_residual': study.residual,
                'closed_form_error': study.closed_form_error,
                'convergence_order': order,
                'symmetric_energy': study.symmetric_energy,
            }
            entry['passed'] = bool(study.residual <= 1e-5
                                   and study.closed_form_error <= 1e-8
                                   and abs(order - 2.0) <= 0.1)
            results['couplings'].append(entry)
            results['passed'] &= entry['passed']
            print(f"   lambda={lam:g}: residual={study.residual:.2e}  order={order:.3f}")
        return self._save(results, "qm_annihilation.json")

    # ------------------------------------------------------------------
    # Abelian functional
    # ------------------------------------------------------------------

    def wheeler_duality(self, n_fields: int = 10, N: int = 24, width: float = 3.0) -> Dict[str, Any]:
        """Spectral against kernel S for seeded localized fields, plus refinement."""
        print(f"\nComparing spectral and kernel forms on {n_fields} localized fields...")
        results = {'fields': [], 'N': N, 'width': width}
        shrinks = 0
        for seed in range(n_fields):
            coarse = spectral_kernel_gap(
                localized_transverse_field(N, 1.0, width=width, seed=seed), self.threads)
            fine = spectral_kernel_gap(
                localized_transverse_field(2 * N, 0.5, width=width, seed=seed), self.threads)
            shrinks += fine['rel_gap'] < coarse['rel_gap']
            results['fields'].append({'seed': seed, 'coarse': coarse, 'fine': fine})
            print(f"   seed {seed}: gap {coarse['rel_gap']:.3e} -> {fine['rel_gap']:.3e}")

        results['max_gap'] = max(f['coarse']['rel_gap'] for f in results['fields'])
        results['shrinking_fraction'] = shrinks / n_fields
        results['passed'] = bool(results['max_gap'] <= 0.05 and shrinks >= 0.9 * n_fields)
        return self._save(results, "wheeler_duality.json")

    def boost_identity(self, seeds: Sequence[int] = (0, 1, 2), N: int = 32,
                       width: float = 3.0) -> Dict[str, Any]:
        """Boost moments on localized fields and their sign flip under reflection."""
        print("\nChecking the boost identity...")
        results = {'runs': [], 'passed': True}
        for seed in seeds:
            A = localized_transverse_field(N, 1.0, center=(13.0, 15.0, 15.0), width=width, seed=seed)
            checks = [boost_identity_check(A, axis) for axis in range(3)]
            flipped = boost_identity_check(reflect(A, 0), 0)
            sign_gap = abs(flipped.lhs + checks[0].lhs) / max(abs(checks[0].lhs), 1e-15)
            run = {
                'seed': seed,
                'rel_gaps': [c.rel_gap for c in checks],
                'reflection_gap': sign_gap,
                'delocalized': any(c.delocalized for c in checks),
            }
            run['passed'] = bool(max(run['rel_gaps']) <= 0.02 and sign_gap <= 1e-10)
            results['runs'].append(run)
            results['passed'] &= run['passed']
            print(f"   seed {seed}: max gap={max(run['rel_gaps']):.3e}  reflection={sign_gap:.1e}")
        return self._save(results, "boost_identity.json")

    # ------------------------------------------------------------------
    # Lattice minimizer
    # ------------------------------------------------------------------

    def lattice_continuum_hinge(self, n_ts: Sequence[int] = (16, 32)) -> Dict[str, Any]:
        """U(1) minimizer against the mode oracle at increasing time extent."""
        print("\nComparing the U(1) minimizer with the abelian mode oracle...")
        results = {'runs': [], 'passed': True}
        for n_t in n_ts:
            geometry = LatticeGeometry(n_t, 8, 8, 8, 1.0)
            bd = self._datum(GroupKind.U1, geometry)
            report = minimize(bd, geometry, self.minimizer)
            A = from_boundary(bd)
            lattice = abelian_mode_oracle(A, n_t=n_t, lattice=True)
            continuum = abelian_mode_oracle(A, n_t=n_t)
            run = {
                'n_t': n_t,
                'S': report.S,
                'S_lattice_oracle': lattice,
                'S_continuum_oracle': continuum,
                'rel_gap_lattice': relative_gap(report.S, lattice),
                'rel_gap_continuum': relative_gap(report.S, continuum),
                'converged': report.converged,
            }
            run['passed'] = bool(report.converged and run['rel_gap_lattice'] <= 0.02)
            results['runs'].append(run)
            results['passed'] &= run['passed']
            print(f"   n_t={n_t}: lattice gap={run['rel_gap_lattice']:.2e}"
                  f"  continuum gap={run['rel_gap_continuum']:.2e}")
        return self._save(results, "lattice_hinge.json")

    def gauge_invariance(self, n_gauges: int = 20,
                         groups: Sequence[GroupKind] = (GroupKind.U1, GroupKind.SU2)) -> Dict[str, Any]:
        """S of gauge-rotated data against S of the datum for seeded slice gauges."""
        print(f"\nChecking gauge invariance over {n_gauges} random gauges...")
        results = {'groups': {}, 'passed': True}
        for kind in groups:
            bd = self._datum(kind)
            base = minimize(bd, HINGE_GEOMETRY, self.minimizer)
            gaps = [check_gauge_invariance(bd, HINGE_GEOMETRY, self.minimizer, seed, base).rel_gap
                    for seed in range(n_gauges)]
            passed = bool(max(gaps) <= GAUGE_TOL)
            results['groups'][kind.value] = {'rel_gaps': gaps, 'max_gap': max(gaps), 'passed': passed}
            results['passed'] &= passed
            print(f"   {kind.value}: max gap={max(gaps):.2e}")
        return self._save(results, "gauge_invariance.json")

    def hje_identity(self, n_ts: Sequence[int] = (16, 32)) -> Dict[str, Any]:
        """Boundary Hamilton-Jacobi gap on converged minimizers under time doubling."""
        print("\nChecking the Hamilton-Jacobi identity...")
        results = {'groups': {}, 'passed': True}
        for kind in (GroupKind.U1, GroupKind.SU2):
            gaps = []
            for n_t in n_ts:
                geometry = LatticeGeometry(n_t, 8, 8, 8, 1.0)
                gaps.append(hje_residual(minimize(self._datum(kind, geometry), geometry,
                                                  self.minimizer)).rel_gap)
            passed = bool(gaps[0] <= HJE_TOL[kind] and gaps[-1] <= gaps[0])
            results['groups'][kind.value] = {'n_t': list(n_ts), 'rel_gaps': gaps, 'passed': passed}
            results['passed'] &= passed
            print(f"   {kind.value}: gaps={', '.join(f'{g:.2e}' for g in gaps)}")
        return self._save(results, "hje_identity.json")

    def derivative_identity(self, n_tangents: int = 10) -> Dict[str, Any]:
        """Directional derivative of S against the boundary momentum."""
        print(f"\nChecking the functional derivative along {n_tangents} tangents...")
        results = {'groups': {}, 'passed': True}
        for kind in (GroupKind.U1, GroupKind.SU2):
            bd = self._datum(kind)
            base = minimize(bd, HINGE_GEOMETRY, self.minimizer)
            gaps = [check_derivative(bd, HINGE_GEOMETRY, self.minimizer, seed, base).rel_gap
                    for seed in range(n_tangents)]
            passed = bool(max(gaps) <= DERIV_TOL[kind])
            results['groups'][kind.value] = {'rel_gaps': gaps, 'max_gap': max(gaps), 'passed': passed}
            results['passed'] &= passed
            print(f"   {kind.value}: max gap={max(gaps):.2e}")
        return self._save(results, "derivative_identity.json")

    def descent_robustness(self, n_starts: int = 4,
                           datums: Sequence[str] = ("single_mode", "localized_bump", "random_small")
                           ) -> Dict[str, Any]:
        """
        Monotone descent, Dirichlet exactness and spread over random starts.

        Every run must decrease S at each accepted step and return the
        datum bit for bit on the t = 0 slice.
        """
        print(f"\nRunning {n_starts} starts on {len(datums)} data per group...")
        results = {'runs': [], 'passed': True}
        for kind in (GroupKind.U1, GroupKind.SU2):
            for name in datums:
                spec = DatumSpec(kind=name, amplitude=SMALL_AMPLITUDE)
                bd = spec.build(HINGE_GEOMETRY, kind)
                multi = minimize_multistart(bd, HINGE_GEOMETRY, self.minimizer, n_starts, self.threads)
                problem = DirichletMinimizer(bd, HINGE_GEOMETRY, self.minimizer)
                metrics = [problem.get_metrics(r) for r in multi.reports]
                monotone = all(m['monotone'] for m in metrics)
                exact = all(m['boundary_exact'] for m in metrics)
                violations = [v for m in metrics for v in m['violations']]
                run = {'group': kind.value, 'datum': name, 'monotone': monotone,
                       'dirichlet_exact': exact, 'violations': violations, **multi.to_dict()}
                run['passed'] = bool(not violations and all(run['converged']))
                results['runs'].append(run)
                results['passed'] &= run['passed']
                print(f"   {kind.value}/{name}: spread={multi.spread:.2e}  S_min={multi.S_min:.6e}")
        return self._save(results, "descent_robustness.json")

    def decay_study(self, sizes: Sequence[int] = (12, 24)) -> Dict[str, Any]:
        """Field-strength fall-off of a U(1) bump as the box doubles; p_F should approach -4."""
        print("\nFitting decay exponents of a localized U(1) bump...")
        results = {'runs': []}
        for n in sizes:
            geometry = LatticeGeometry(2 * n, n, n, n, 1.0)
            report = minimize(localized_bump_boundary(geometry, GroupKind.U1), geometry, self.minimizer)
            decay = decay_diagnostic(report)
            results['runs'].append({'N': n, 'n_t': 2 * n, 'p_F': decay.p_F, 'p_A': decay.p_A,
                                    'radii': decay.radii, 'distance_to_4': abs(decay.p_F + 4.0)})
            print(f"   {n}^3 x {2 * n}: p_F={decay.p_F:.3f}  p_A={decay.p_A:.3f}")
        distances = [run['distance_to_4'] for run in results['runs']]
        results['passed'] = bool(all(run['p_F'] <= -3.0 for run in results['runs'])
                                 and all(b < a for a, b in zip(distances, distances[1:])))
        return self._save(results, "decay_study.json")

    # ------------------------------------------------------------------
    # Negative controls
    # ------------------------------------------------------------------

    def negative_controls(self) -> Dict[str, Any]:
        """A corrupted field fails the battery and exp(+S) is not annihilated."""
        print("\nRunning negative controls...")
        reports = run_suite(SuiteConfig(geometry=HINGE_GEOMETRY, battery=("gauss", "hje"),
                                        corrupt=True, threads=self.threads))
        grid = PotentialGrid.from_function(lambda x: anharmonic_potential(x, 1.0), -5.0, 5.0, 1e-3)
        S = principal_from_closed_form(grid.x, 1.0)
        wrong_sign = nno_residual(grid, S, np.exp(S.S))
        results = {
            'corrupted_suite': [r.to_dict() for r in reports],
            'corrupted_suite_failed': not all_passed(reports),
            'wrong_sign_residual': wrong_sign,
        }
        results['passed'] = bool(results['corrupted_suite_failed'] and wrong_sign > 0.1)
        print(f"   corrupted suite failed: {results['corrupted_suite_failed']}  "
              f"wrong-sign residual: {wrong_sign:.2e}")
        return self._save(results, "negative_controls.json")


if __name__ == "__main__":
    validator = AcceptanceValidator()
    validator.qm_annihilation()
    validator.negative_controls()
