"""
Unit tests for the invariance battery.
"""

import json
import pytest
import numpy as np
from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.lie import GroupKind
from src.core.errors import InvalidArgumentError
from src.lattice.geometry import LatticeGeometry
from src.lattice.data import DatumSpec, random_small_boundary
from src.yangmills.minimizer import MinimizerConfig, minimize
from src.verification.suite import (InvarianceReport, SymmetryOp, SuiteConfig, run_suite,
                                    all_passed, reports_to_json, corrupt_report,
                                    check_gauss_residual, check_hje, input_digest,
                                    random_tangent, check_names)


GEOM = LatticeGeometry(8, 4, 4, 4, 1.0)


def suite_config(group=GroupKind.U1, **kwargs):
    return SuiteConfig(geometry=GEOM, group=group,
                       datum=DatumSpec("single_mode", (1, 0, 0), 0.05, 2), **kwargs)


class TestSymmetryOp:
    """Test symmetry parsing."""

    def test_parse(self):
        """Rotations and shifts round-trip through their labels."""
        assert SymmetryOp.parse("rot90:1,2") == SymmetryOp.rotation(1, 2)
        assert SymmetryOp.parse(" shift:0,1,0 ").label == "shift:0,1,0"

    @pytest.mark.parametrize("text", ["rot90:1", "shift:1,0", "flip:1,2", "rot90:a,b"])
    def test_parse_invalid(self, text):
        """Malformed ops are usage errors."""
        with pytest.raises(InvalidArgumentError):
            SymmetryOp.parse(text)


class TestSuiteConfig:
    """Test suite configuration validation."""

    def test_unknown_battery_entry(self):
        """Only known checks may be requested."""
        with pytest.raises(InvalidArgumentError):
            suite_config(battery=("gauge", "parity"))

    def test_threads(self):
        """At least one worker is needed."""
        with pytest.raises(InvalidArgumentError):
            suite_config(threads=0)

    def test_empty_battery(self):
        """No checks give no reports."""
        assert run_suite(suite_config(battery=())) == []


class TestReports:
    """Test report construction and serialization."""

    def test_compare(self):
        """Passing is decided by the gap against the tolerance."""
        ok = InvarianceReport.compare("gauge", {}, 1.0, 1.0 + 1e-12, 1e-10)
        bad = InvarianceReport.compare("gauge", {}, 1.0, 1.1, 1e-10)

        assert ok.passed == True
        assert bad.passed == False

    def test_failure_serializes(self):
        """Aborted checks carry the error and null numbers."""
        report = InvarianceReport.failure("deriv", {'seed': 0}, RuntimeError("boom"))

        doc = report.to_dict()

        assert doc['passed'] == False
        assert doc['rel_gap'] is None
        assert doc['error'] == "RuntimeError: boom"

    def test_digest(self):
        """The digest identifies seed, geometry, group and datum."""
        bd = suite_config().datum.build(GEOM, GroupKind.U1)

        digest = input_digest(bd, GEOM, 7)

        assert digest == {'seed': 7, 'geometry': GEOM.to_list(), 'group': 'u1',
                          'datum_sha256': bd.digest()}

    def test_random_tangent_bounded(self):
        """Tangents are seeded and bounded by the scale."""
        bd = suite_config().datum.build(GEOM, GroupKind.SU2)

        h = random_tangent(bd, seed=3)

        assert h.shape == (4, 4, 4, 3, 3)
        assert np.max(np.abs(h)) <= 0.1
        np.testing.assert_array_equal(h, random_tangent(bd, seed=3))


class TestBattery:
    """Test the full battery on small lattices."""

    @pytest.mark.parametrize("group", [GroupKind.U1, GroupKind.SU2])
    def test_all_checks_pass(self, group):
        """A converged minimizer passes every check."""
        reports = run_suite(suite_config(group))

        names = [r.check for r in reports]
        assert names == ["gauge", "symmetry[rot90:1,2]", "symmetry[shift:1,0,0]",
                         "gauss", "hje", "deriv"]
        assert all_passed(reports), [r.to_dict() for r in reports if not r.passed]

    def test_negative_control(self):
        """Corrupting one link makes the battery fail."""
        reports = run_suite(suite_config(corrupt=True))

        by_name = {r.check: r for r in reports}
        assert all_passed(reports) == False
        assert by_name['gauss'].passed == False
        assert by_name['hje'].passed == False
        assert by_name['gauge'].passed == False

    def test_corrupt_report_moves_one_link(self):
        """Only the chosen t = 1 link changes."""
        report = minimize(suite_config().datum.build(GEOM, GroupKind.U1), GEOM)

        corrupted = corrupt_report(report, site=(1, 2, 3), direction=2)
        changed = np.argwhere(np.any(corrupted.final_field.links != report.final_field.links, axis=-1))

        assert changed.tolist() == [[1, 1, 2, 3, 2]]
        assert corrupted.S > report.S
        assert check_gauss_residual(corrupted).passed == False
        assert check_hje(corrupted).passed == False

    @pytest.mark.parametrize("group", [GroupKind.U1, GroupKind.SU2])
    def test_early_stop_fails_gauss(self, group):
        """Three iterations from the default start leave a visible Gauss residual."""
        bd = random_small_boundary(GEOM, group, 0.05, seed=0)

        report = minimize(bd, GEOM, MinimizerConfig(max_iters=3))

        assert report.converged == False
        assert check_gauss_residual(report).passed == False

    def test_aborted_check_is_reported(self):
        """Checks that raise become failed reports instead of crashing."""
        reports = run_suite(suite_config(battery=("deriv",), minimizer=MinimizerConfig(max_iters=1)))

        assert len(reports) == 1
        assert reports[0].passed == False
        assert reports[0].error.startswith("ConvergenceError")

    def test_failed_base_run_marks_every_check(self):
        """An error in the shared minimization is reported per check."""
        other = LatticeGeometry(8, 6, 6, 6, 1.0)
        bd = suite_config().datum.build(other, GroupKind.U1)

        reports = run_suite(suite_config(), bd=bd)

        assert [r.check for r in reports] == check_names(suite_config())
        assert not any(r.passed for r in reports)
        assert all(r.error.startswith("InvalidArgumentError") for r in reports)

    def test_check_names(self):
        """Symmetry entries expand to one name per op."""
        names = check_names(suite_config(battery=("symmetry", "hje")))

        assert names == ["symmetry[rot90:1,2]", "symmetry[shift:1,0,0]", "hje"]

    def test_threads_do_not_change_results(self):
        """Parallel checks report the same gaps in the same order."""
        serial = run_suite(suite_config(battery=("gauge", "symmetry")))
        parallel = run_suite(suite_config(battery=("gauge", "symmetry"), threads=2))

        assert [r.check for r in parallel] == [r.check for r in serial]
        assert [r.rel_gap for r in parallel] == [r.rel_gap for r in serial]

    def test_json_is_deterministic(self):
        """Equal inputs give byte-identical JSON."""
        config = suite_config(battery=("gauss", "hje"))

        first = reports_to_json(run_suite(config))
        second = reports_to_json(run_suite(config))

        assert first == second
        assert [r['check'] for r in json.loads(first)] == ["gauss", "hje"]


def run_tests():
    """Run all unit tests."""
    pytest.main([__file__, '-v'])


if __name__ == "__main__":
    run_tests()
