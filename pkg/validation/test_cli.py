"""
Integration tests for the command-line interface.

Every run writes into a pytest temporary directory and omits timestamps,
so artifacts can be compared byte for byte.
"""

import json
import pytest
import numpy as np
import pandas as pd
from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent.parent))

import main
from src.lattice.field_io import load_field


SMALL_LATTICE = ['--n-t', '8', '--n-x', '4', '--n-y', '4', '--n-z', '4']


def run(tmp_path, command, *argv):
    return main.main([command, *argv, '--output-dir', str(tmp_path), '--no-timestamp'])


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


class TestUsage:
    """Test argument handling and exit codes."""

    def test_missing_subcommand(self):
        """No subcommand is a usage error."""
        assert main.main([]) == main.EXIT_USAGE

    def test_unknown_flag(self, tmp_path):
        """Unknown flags are usage errors."""
        assert run(tmp_path, 'qm', '--lamda', '1') == main.EXIT_USAGE

    def test_bad_config_key(self, tmp_path):
        """Unknown configuration keys abort with exit code 2."""
        path = tmp_path / "bad.ini"
        path.write_text("[minimizer]\nmax_iter = 3\n", encoding="utf-8")

        assert run(tmp_path, 'minimize', '--config', str(path)) == main.EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        """A config path that does not exist is a usage error."""
        assert run(tmp_path, 'qm', '--config', str(tmp_path / "none.ini")) == main.EXIT_USAGE


class TestQMCommand:
    """Test the qm subcommand."""

    def test_anharmonic(self, tmp_path):
        """lambda = 1 meets the residual bound and writes CSV and JSON."""
        code = run(tmp_path, 'qm', '--lambda', '1', '--h', '1e-3')

        summary = read_json(tmp_path / "qm" / "qm_lambda_1.json")
        table = pd.read_csv(tmp_path / "qm" / "qm_lambda_1.csv")
        assert code == main.EXIT_OK
        assert summary['nno_residual'] <= 1e-5
        assert list(table.columns) == ['x', 'V', 'S', 'psi', 'residual']
        assert (table['psi'] > 0).all()

    def test_negative_coupling(self, tmp_path):
        """lambda < 0 is a usage error."""
        assert run(tmp_path, 'qm', '--lambda', '-1') == main.EXIT_USAGE

    def test_grid_missing_minimum(self, tmp_path):
        """A grid that skips x = 0 has no zero minimum and is a usage error."""
        code = run(tmp_path, 'qm', '--lambda', '1', '--h', '0.3', '--half-width', '5')

        assert code == main.EXIT_USAGE
        assert not (tmp_path / "qm").exists()

    def test_zero_coupling(self, tmp_path):
        """lambda = 0 is rejected by the configuration schema."""
        assert run(tmp_path, 'qm', '--lambda', '0') == main.EXIT_USAGE

    def test_harmonic_limit(self, tmp_path):
        """A vanishing coupling produces the Gaussian."""
        code = run(tmp_path, 'qm', '--lambda', '1e-9')

        table = pd.read_csv(tmp_path / "qm" / "qm_lambda_1e-09.csv")
        expected = np.exp(-0.5 * table['x'] ** 2) / np.pi ** 0.25
        assert code == main.EXIT_OK
        np.testing.assert_allclose(table['psi'], expected, atol=1e-7)

    def test_convergence_study(self, tmp_path):
        """--hs adds the fitted order to the summary."""
        code = run(tmp_path, 'qm', '--lambda', '0.5', '--hs', '4e-3,2e-3,1e-3')

        summary = read_json(tmp_path / "qm" / "qm_lambda_0.5.json")
        assert code == main.EXIT_OK
        assert summary['convergence']['order'] == pytest.approx(2.0, abs=0.1)


class TestMaxwellCommand:
    """Test the maxwell subcommand."""

    def test_localized_field(self, tmp_path):
        """A localized field passes kernel and boost comparisons."""
        code = run(tmp_path, 'maxwell', '--n', '32', '--seeds', '0')

        document = read_json(tmp_path / "maxwell" / "maxwell_localized_N32.json")
        assert code == main.EXIT_OK
        assert document['passed'] == True
        assert document['runs'][0]['rel_gap'] <= 0.05
        assert len(document['runs'][0]['boost']) == 3

    def test_gradient_field(self, tmp_path):
        """Pure gauge fields are flagged and pass against the mode scale."""
        code = run(tmp_path, 'maxwell', '--n', '24', '--field', 'gradient')

        run_doc = read_json(tmp_path / "maxwell" / "maxwell_gradient_N24.json")['runs'][0]
        assert code == main.EXIT_OK
        assert run_doc['pure_gauge'] == True
        assert run_doc['rel_gap'] <= 1e-3

    def test_kernel_needs_large_grid(self, tmp_path):
        """The kernel form is refused below N = 16."""
        assert run(tmp_path, 'maxwell', '--n', '8') == main.EXIT_USAGE

    def test_finite_extent_oracle(self, tmp_path):
        """--oracle-n-t reports a finite-extent value below the half-space one."""
        code = run(tmp_path, 'maxwell', '--n', '16', '--field', 'single_mode', '--no-kernel',
                   '--oracle-n-t', '4')

        run_doc = read_json(tmp_path / "maxwell" / "maxwell_single_mode_N16.json")['runs'][0]
        assert code in (main.EXIT_OK, main.EXIT_CHECK_FAILED)
        assert 0.0 < run_doc['S_oracle_finite_T'] < run_doc['S_spectral']


class TestMinimizeCommand:
    """Test the minimize and report subcommands."""

    def test_u1_single_mode(self, tmp_path):
        """A small U(1) run converges onto the lattice mode oracle."""
        code = run(tmp_path, 'minimize', *SMALL_LATTICE)

        document = read_json(tmp_path / "minimize" / "report.json")
        field = load_field(tmp_path / "minimize" / "field.hjvf")
        assert code == main.EXIT_OK
        assert document['converged'] == True
        assert document['oracle']['rel_gap_lattice'] <= 1e-6
        assert document['diagnostics']['hje']['rel_gap'] <= 0.05
        assert field.geometry.shape == (8, 4, 4, 4)

    def test_report_validation(self, tmp_path):
        """The report carries the hard checks of the run, all satisfied."""
        code = run(tmp_path, 'minimize', *SMALL_LATTICE, '--group', 'su2')

        validation = read_json(tmp_path / "minimize" / "report.json")['validation']
        assert code == main.EXIT_OK
        assert validation['is_valid'] == True
        assert validation['violations'] == []
        assert validation['boundary_exact'] == True
        assert validation['monotone'] == True

    def test_su2(self, tmp_path):
        """SU(2) runs have no abelian oracle."""
        code = run(tmp_path, 'minimize', *SMALL_LATTICE, '--group', 'su2')

        document = read_json(tmp_path / "minimize" / "report.json")
        assert code == main.EXIT_OK
        assert document['group'] == 'su2'
        assert 'oracle' not in document

    def test_not_converged(self, tmp_path):
        """Running out of iterations exits with 3 but still writes the report."""
        code = run(tmp_path, 'minimize', *SMALL_LATTICE, '--max-iters', '1')

        assert code == main.EXIT_NOT_CONVERGED
        assert read_json(tmp_path / "minimize" / "report.json")['converged'] == False

    def test_reproducible(self, tmp_path):
        """Two runs without timestamps write identical reports."""
        first, second = tmp_path / "first", tmp_path / "second"

        run(first, 'minimize', *SMALL_LATTICE, '--seed', '3')
        run(second, 'minimize', *SMALL_LATTICE, '--seed', '3')

        assert ((first / "minimize" / "report.json").read_bytes()
                == (second / "minimize" / "report.json").read_bytes())
        assert ((first / "minimize" / "field.hjvf").read_bytes()
                == (second / "minimize" / "field.hjvf").read_bytes())

    def test_warm_start(self, tmp_path):
        """Restarting from a saved field reproduces S."""
        run(tmp_path / "cold", 'minimize', *SMALL_LATTICE)
        field_path = tmp_path / "cold" / "minimize" / "field.hjvf"

        code = run(tmp_path / "warm", 'minimize', *SMALL_LATTICE, '--warm-start', str(field_path))

        cold = read_json(tmp_path / "cold" / "minimize" / "report.json")
        warm = read_json(tmp_path / "warm" / "minimize" / "report.json")
        assert code == main.EXIT_OK
        assert warm['S'] == pytest.approx(cold['S'], rel=1e-10)
        assert warm['iterations'] == 0

    def test_multistart(self, tmp_path):
        """--n-starts records the spread over starts."""
        code = run(tmp_path, 'minimize', *SMALL_LATTICE, '--n-starts', '2')

        multistart = read_json(tmp_path / "minimize" / "report.json")['multistart']
        assert code == main.EXIT_OK
        assert len(multistart['values']) == 2
        assert multistart['spread'] <= 1e-8 * multistart['S_min']

    def test_file_datum(self, tmp_path):
        """A saved field can serve as the datum of a new run."""
        run(tmp_path / "first", 'minimize', *SMALL_LATTICE)
        field_path = tmp_path / "first" / "minimize" / "field.hjvf"

        code = run(tmp_path / "second", 'minimize', *SMALL_LATTICE, '--datum', 'file',
                   '--datum-path', str(field_path))

        first = read_json(tmp_path / "first" / "minimize" / "report.json")
        second = read_json(tmp_path / "second" / "minimize" / "report.json")
        assert code == main.EXIT_OK
        assert second['datum_sha256'] == first['datum_sha256']

    def test_report(self, tmp_path):
        """report summarizes the trace of a saved run."""
        run(tmp_path, 'minimize', *SMALL_LATTICE)

        code = run(tmp_path, 'report', str(tmp_path / "minimize" / "report.json"))

        stats = read_json(tmp_path / "report" / "report_stats.json")
        trace = pd.read_csv(tmp_path / "report" / "report_trace.csv")
        assert code == main.EXIT_OK
        assert stats['monotone'] == True
        assert list(trace.columns) == ['iteration', 'S']
        assert stats['num_steps'] == len(trace)

    def test_report_missing_file(self, tmp_path):
        """An unreadable report is a usage error."""
        assert run(tmp_path, 'report', str(tmp_path / "missing.json")) == main.EXIT_USAGE


class TestVerifyCommand:
    """Test the verify subcommand."""

    def test_battery_passes(self, tmp_path):
        """The default battery passes on a small lattice."""
        code = run(tmp_path, 'verify', *SMALL_LATTICE)

        document = read_json(tmp_path / "verify" / "suite.json")
        assert code == main.EXIT_OK
        assert document['passed'] == True
        assert document['corrupt'] == False

    def test_negative_control(self, tmp_path):
        """--corrupt makes the battery fail with exit code 1."""
        code = run(tmp_path, 'verify', *SMALL_LATTICE, '--corrupt', '--battery', 'gauss,hje')

        document = read_json(tmp_path / "verify" / "suite.json")
        assert code == main.EXIT_CHECK_FAILED
        assert document['corrupt'] == True
        assert not any(r['passed'] for r in document['reports'])

    def test_unknown_check(self, tmp_path):
        """Unknown battery entries are usage errors."""
        assert run(tmp_path, 'verify', *SMALL_LATTICE, '--battery', 'parity') == main.EXIT_USAGE


def run_tests():
    """Run all unit tests."""
    pytest.main([__file__, '-v'])


if __name__ == "__main__":
    run_tests()
