"""
YMGround - zero-energy ground states of gauge theories at desk scale

Command-line entry point.  Subcommands:

    qm        anharmonic oscillator: Hamilton-Jacobi S, ground state, residuals
    maxwell   abelian ground-state functional, spectral vs kernel form, boosts
    minimize  lattice Yang-Mills Dirichlet minimization
    verify    invariance suite (gauge, symmetry, Gauss, HJE, derivative)
    report    statistics of a saved minimization report

Exit codes: 0 ok, 1 check failed, 2 usage error, 3 non-convergence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

sys.path.insert(0, str(Path(__file__).parent))

from src.core.checks import relative_gap
from src.core.config import RunConfig, load_config
from src.core.errors import (ConfigError, ConvergenceError, DiagnosticUnavailableError,
                             FieldFormatError, InvalidArgumentError, InvalidPotentialError,
                             YMGroundError)
from src.core.exports import compute_statistics, export_to_csv, export_to_json
from src.core.lie import GroupKind
from src.lattice.field_io import load_field, save_field
from src.maxwell.vector_field import (from_boundary, gradient_field, load_vector_field,
                                      localized_transverse_field, single_mode_field)
from src.maxwell.wheeler import (MIN_KERNEL_N, PURE_GAUGE_FRACTION, abelian_mode_oracle,
                                 boost_identity_check, mode_scale, spectral_kernel_gap,
                                 translation_generator, wheeler_S_spectral)
from src.quantum.hj1d import anharmonic_study, residual_convergence
from src.verification.suite import all_passed, run_suite
from src.yangmills.diagnostics import (decay_diagnostic, energy_density,
                                       field_equation_residual, hje_residual,
                                       lagrangian_action)
from src.yangmills.minimizer import DirichletMinimizer, minimize_multistart


logger = logging.getLogger("ymground")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3


def banner(title: str):
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


# ---------------------------------------------------------------------------
# Configuration plumbing
# ---------------------------------------------------------------------------

def resolve_config(args: argparse.Namespace, overrides: Dict[str, Dict[str, Any]]) -> RunConfig:
    """File values, then subcommand flags, then the global flags."""
    config = load_config(args.config)
    if args.seed is not None:
        overrides.setdefault('datum', {})['seed'] = args.seed
        overrides.setdefault('minimizer', {})['seed'] = args.seed
        overrides.setdefault('suite', {})['seed'] = args.seed
        maxwell = overrides.setdefault('maxwell', {})
        if maxwell.get('seeds') is None:
            maxwell['seeds'] = [args.seed]
    output = overrides.setdefault('output', {})
    if args.output_dir is not None:
        output['dir'] = args.output_dir
    if args.no_timestamp:
        output['timestamp'] = False
    return config.merged(overrides)


def lattice_overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    return {
        'geometry': {'n_t': args.n_t, 'n_x': args.n_x, 'n_y': args.n_y, 'n_z': args.n_z,
                     'a': args.spacing},
        'datum': {'group': args.group, 'kind': args.datum, 'mode': args.mode,
                  'amplitude': args.amplitude, 'polarization': args.polarization,
                  'center': args.center, 'width': args.width, 'path': args.datum_path},
        'minimizer': {'max_iters': args.max_iters, 'grad_tol': args.grad_tol,
                      'initial_step': args.initial_step, 'method': args.method,
                      'start_profile': args.start_profile},
    }


def output_dir(config: RunConfig, name: str) -> Path:
    path = Path(config.output.dir) / name
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_qm(args: argparse.Namespace) -> int:
    """Anharmonic oscillator study; CSV of the grid and a JSON summary."""
    config = resolve_config(args, {'qm': {
        'lambda': args.lam, 'h': args.h, 'half_width': args.half_width,
        'fd_order': args.fd_order, 'closed_form': args.closed_form,
        'convergence_hs': args.hs,
    }})
    qm = config.qm
    banner(f"QM ORACLE: V = x^2/2 + lambda x^4/4, lambda = {qm.lam:g}")

    study = anharmonic_study(qm.lam, qm.h, qm.half_width, qm.fd_order, qm.closed_form)
    summary = study.summary()
    summary.update({'fd_order': qm.fd_order, 'half_width': qm.half_width,
                    'closed_form': qm.closed_form})
    if qm.convergence_hs:
        summary['convergence'] = residual_convergence(qm.lam, qm.convergence_hs, qm.half_width)
        print(f"  convergence order (fd_order=2): {summary['convergence']['order']:.3f}")

    out = output_dir(config, "qm")
    stem = f"qm_lambda_{qm.lam:g}"
    export_to_csv(study.table(), out / f"{stem}.csv", columns=['x', 'V', 'S', 'psi', 'residual'])
    export_to_json(summary, out / f"{stem}.json", timestamp=config.output.timestamp)

    print(f"  nno residual:           {study.residual:.3e}")
    print(f"  HJE residual:           {study.hje_residual:.3e}")
    print(f"  closed-form max error:  {study.closed_form_error:.3e}")
    print(f"  symmetric energy:       {study.symmetric_energy:.6f}")
    print(f"\nResults saved to {out}/{stem}.*")
    return EXIT_OK


def _maxwell_field(config: RunConfig, seed: int):
    mx = config.maxwell
    if mx.field == "localized":
        return localized_transverse_field(mx.n, mx.a, width=mx.width, amplitude=mx.amplitude, seed=seed)
    if mx.field == "gradient":
        return gradient_field(mx.n, mx.a, width=mx.width, amplitude=mx.amplitude)
    if mx.field == "single_mode":
        return single_mode_field(mx.n, mx.a, tuple(mx.mode), mx.amplitude, mx.polarization)
    if not mx.path:
        raise ConfigError("maxwell field 'file' needs a path")
    return load_vector_field(mx.path)


def cmd_maxwell(args: argparse.Namespace) -> int:
    """Spectral against kernel form of S plus boost moments, per seed."""
    config = resolve_config(args, {'maxwell': {
        'n': args.n, 'a': args.spacing, 'field': args.field, 'width': args.width,
        'amplitude': args.amplitude, 'seeds': args.seeds, 'kernel': args.kernel,
        'oracle_n_t': args.oracle_n_t, 'path': args.field_path,
    }})
    mx = config.maxwell
    if mx.kernel and mx.n < MIN_KERNEL_N:
        raise InvalidArgumentError(f"kernel comparison needs N >= {MIN_KERNEL_N}, got {mx.n}")
    banner(f"MAXWELL GROUND STATE: {mx.field} field on {mx.n}^3, a = {mx.a:g}")

    workers = args.threads if args.threads > 1 else None
    runs: List[Dict[str, Any]] = []
    passed = True
    for seed in mx.seeds:
        A = _maxwell_field(config, seed)
        run: Dict[str, Any] = {'seed': seed, 'S_spectral': wheeler_S_spectral(A)}
        pure_gauge = bool(run['S_spectral'] <= PURE_GAUGE_FRACTION * mode_scale(A))
        run['pure_gauge'] = pure_gauge
        delocalized = False
        if mx.kernel:
            comparison = spectral_kernel_gap(A, workers)
            run.update(comparison)
            delocalized = comparison['delocalized']
            passed &= comparison['rel_gap'] <= mx.kernel_tolerance
        boosts = []
        for axis in mx.boost_axes:
            check = boost_identity_check(A, axis)
            boosts.append({'axis': axis, 'lhs': check.lhs, 'rhs': check.rhs,
                           'rel_gap': check.rel_gap})
            delocalized |= check.delocalized
            if not pure_gauge:
                passed &= check.rel_gap <= mx.boost_tolerance
        run['boost'] = boosts
        run['translation_generator'] = translation_generator(A)
        if mx.oracle_n_t is not None:
            run['S_oracle_finite_T'] = abelian_mode_oracle(A, n_t=mx.oracle_n_t)
        run['delocalized'] = bool(delocalized)
        if delocalized and args.strict:
            passed = False
        runs.append(run)
        gap = run.get('rel_gap', float('nan'))
        print(f"  seed {seed}: S_spectral={run['S_spectral']:.6e}  kernel gap={gap:.3e}"
              f"{'  [delocalized]' if delocalized else ''}")

    document = {
        'field': mx.field, 'N': mx.n, 'a': mx.a, 'width': mx.width,
        'kernel_tolerance': mx.kernel_tolerance, 'boost_tolerance': mx.boost_tolerance,
        'strict': bool(args.strict), 'runs': runs, 'passed': bool(passed),
    }
    out = output_dir(config, "maxwell")
    export_to_json(document, out / f"maxwell_{mx.field}_N{mx.n}.json",
                   timestamp=config.output.timestamp)
    print(f"\n{'PASS' if passed else 'FAIL'}: results saved to {out}")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _optional(func, *args):
    try:
        return func(*args)
    except DiagnosticUnavailableError as err:
        logger.info("%s", err)
        return None


def minimize_document(report, config: RunConfig) -> Dict[str, Any]:
    """Report JSON with diagnostics and, for U(1) cubic data, the mode oracle."""
    document = report.to_dict()
    document['datum'] = config.datum_spec().to_dict()
    hje = hje_residual(report)
    lagrangian = lagrangian_action(report)
    document['diagnostics'] = {
        'hje': hje._asdict(),
        'field_equation_residual': field_equation_residual(report),
        'lagrangian': {'kinetic': lagrangian.kinetic, 'potential': lagrangian.potential,
                       'total': lagrangian.total},
        'energy_density_t0': energy_density(report, 0),
    }
    decay = _optional(decay_diagnostic, report)
    if decay is not None:
        document['diagnostics']['decay'] = {'p_F': decay.p_F, 'p_A': decay.p_A,
                                            'radii': decay.radii}
    geom = report.geometry
    if report.final_field.kind is GroupKind.U1 and geom.n_x == geom.n_y == geom.n_z:
        A = from_boundary(report.boundary)
        oracle = abelian_mode_oracle(A, n_t=geom.n_t, lattice=True)
        document['oracle'] = {
            'S_lattice': oracle,
            'S_continuum': abelian_mode_oracle(A, n_t=geom.n_t),
            'rel_gap_lattice': relative_gap(report.S, oracle),
        }
    return document


def cmd_minimize(args: argparse.Namespace) -> int:
    """Minimize, write the field file and the report; exit 1 on a failed hard check, 3 if unconverged."""
    overrides = lattice_overrides(args)
    overrides['minimizer']['n_starts'] = args.n_starts
    config = resolve_config(args, overrides)
    geom = config.lattice_geometry()
    banner(f"DIRICHLET MINIMIZATION: {config.group.value} on {geom.n_t}x{geom.n_x}x{geom.n_y}x{geom.n_z}")

    bd = config.datum_spec().build(geom, config.group)
    cfg = config.minimizer_config()
    warm = load_field(args.warm_start) if args.warm_start else None
    problem = DirichletMinimizer(bd, geom, cfg, warm)
    multistart = None
    if config.minimizer.n_starts > 1:
        multistart = minimize_multistart(bd, geom, cfg, config.minimizer.n_starts, args.threads)
        report = multistart.best
    else:
        report = problem.solve()
    metrics = problem.get_metrics(report)

    document = minimize_document(report, config)
    document['validation'] = {key: metrics[key] for key in
                              ('is_valid', 'num_violations', 'violations',
                               'boundary_exact', 'monotone', 'max_increase', 'weyl')}
    if multistart is not None:
        document['multistart'] = multistart.to_dict()
    out = output_dir(config, "minimize")
    save_field(report.final_field, out / "field.hjvf")
    export_to_json(document, out / "report.json", timestamp=config.output.timestamp)

    print(f"  S          = {report.S:.12e}")
    print(f"  grad_norm  = {report.grad_norm:.3e}")
    print(f"  iterations = {report.iterations}")
    if 'oracle' in document:
        print(f"  oracle gap = {document['oracle']['rel_gap_lattice']:.3e}")
    print(f"\nResults saved to {out}")
    if not metrics['is_valid']:
        for violation in metrics['violations']:
            print(f"  FAIL  {violation}")
        return EXIT_CHECK_FAILED
    if not report.converged:
        print("Minimizer did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the invariance battery; exit 1 if any check fails."""
    overrides = lattice_overrides(args)
    overrides['suite'] = {'battery': args.battery, 'corrupt': True if args.corrupt else None}
    config = resolve_config(args, overrides)
    suite_config = config.suite_config(args.threads)
    banner(f"INVARIANCE SUITE: {', '.join(suite_config.battery) or '(empty)'}")

    reports = run_suite(suite_config)
    passed = all_passed(reports)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"  {status}  {r.check:<22} gap={r.rel_gap:.3e}  tol={r.tolerance:.1e}"
              + (f"  ({r.error})" if r.error else ""))
    out = output_dir(config, "verify")
    export_to_json({'reports': [r.to_dict() for r in reports], 'passed': passed,
                    'corrupt': suite_config.corrupt},
                   out / "suite.json", timestamp=config.output.timestamp)
    print(f"\n{'ALL CHECKS PASSED' if passed else 'CHECKS FAILED'}: results saved to {out}")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_report(args: argparse.Namespace) -> int:
    """Statistics of a saved report and its action trace as CSV."""
    config = resolve_config(args, {})
    path = Path(args.report)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
        trace = document['action_trace']
    except (OSError, ValueError, KeyError) as err:
        raise InvalidArgumentError(f"cannot read report {path}: {err}") from None
    banner(f"REPORT: {path}")

    stats = compute_statistics(trace)
    stats.update({'S': document.get('S'), 'grad_norm': document.get('grad_norm'),
                  'iterations': document.get('iterations'),
                  'converged': document.get('converged')})
    out = output_dir(config, "report")
    export_to_csv({'iteration': [int(i) for i, _ in trace], 'S': [float(s) for _, s in trace]},
                  out / f"{path.stem}_trace.csv", columns=['iteration', 'S'])
    export_to_json(stats, out / f"{path.stem}_stats.json", timestamp=config.output.timestamp)
    for key in sorted(stats):
        print(f"  {key:<16} {stats[key]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='INI configuration file')
    common.add_argument('--seed', type=int, help='Seed for every randomized step')
    common.add_argument('--threads', type=int, default=1, help='Worker threads')
    common.add_argument('--no-timestamp', action='store_true',
                        help='Omit generated_at so outputs are byte-reproducible')
    common.add_argument('--strict', action='store_true',
                        help='Treat accuracy warnings as failures')
    common.add_argument('--output-dir', help='Artifact directory (default outputs/)')
    common.add_argument('--verbose', action='store_true', help='Debug logging')
    return common


def _lattice_arguments(sub: argparse.ArgumentParser):
    sub.add_argument('--n-t', type=int)
    sub.add_argument('--n-x', type=int)
    sub.add_argument('--n-y', type=int)
    sub.add_argument('--n-z', type=int)
    sub.add_argument('--spacing', type=float, help='Lattice spacing a')
    sub.add_argument('--group', choices=['u1', 'su2'])
    sub.add_argument('--datum', choices=['flat', 'single_mode', 'localized_bump',
                                         'random_small', 'file'])
    sub.add_argument('--datum-path', help='Field file for --datum file')
    sub.add_argument('--mode', help='Wave numbers, e.g. 1,0,0')
    sub.add_argument('--amplitude', type=float)
    sub.add_argument('--polarization', type=int)
    sub.add_argument('--center', help='Bump centre, e.g. 4,4,4')
    sub.add_argument('--width', type=float)
    sub.add_argument('--max-iters', type=int)
    sub.add_argument('--grad-tol', type=float)
    sub.add_argument('--initial-step', type=float)
    sub.add_argument('--method', choices=['cg', 'gd'])
    sub.add_argument('--start-profile', choices=['constant', 'damped'])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="YMGround - zero-energy ground states of gauge theories"
    )
    common = _common_arguments()
    subparsers = parser.add_subparsers(dest='command', required=True)

    qm = subparsers.add_parser('qm', parents=[common], help='Anharmonic oscillator oracle')
    qm.add_argument('--lambda', dest='lam', type=float, help='Quartic coupling (> 0)')
    qm.add_argument('--h', type=float, help='Grid spacing')
    qm.add_argument('--half-width', type=float)
    qm.add_argument('--fd-order', type=int, choices=[2, 4])
    qm.add_argument('--closed-form', action='store_true', default=None,
                    help='Use the closed-form S instead of the quadrature')
    qm.add_argument('--hs', help='Spacings for the convergence fit, e.g. 4e-3,2e-3,1e-3')
    qm.set_defaults(func=cmd_qm)

    mx = subparsers.add_parser('maxwell', parents=[common], help='Abelian ground-state functional')
    mx.add_argument('--n', type=int, help='Sites per dimension')
    mx.add_argument('--spacing', type=float)
    mx.add_argument('--field', choices=['localized', 'gradient', 'single_mode', 'file'])
    mx.add_argument('--field-path')
    mx.add_argument('--width', type=float)
    mx.add_argument('--amplitude', type=float)
    mx.add_argument('--seeds', help='Comma-separated field seeds')
    mx.add_argument('--kernel', action=argparse.BooleanOptionalAction, default=None,
                    help='Compare with the position-kernel form (needs N >= 16)')
    mx.add_argument('--oracle-n-t', type=int, help='Also report the finite-T mode oracle')
    mx.set_defaults(func=cmd_maxwell)

    mn = subparsers.add_parser('minimize', parents=[common], help='Dirichlet minimization')
    _lattice_arguments(mn)
    mn.add_argument('--n-starts', type=int, help='Independent starts')
    mn.add_argument('--warm-start', help='Field file to start from')
    mn.set_defaults(func=cmd_minimize)

    vf = subparsers.add_parser('verify', parents=[common], help='Invariance suite')
    _lattice_arguments(vf)
    vf.add_argument('--battery', help='Comma-separated checks: gauge,symmetry,gauss,hje,deriv')
    vf.add_argument('--corrupt', action='store_true', help='Negative control')
    vf.set_defaults(func=cmd_verify)

    rp = subparsers.add_parser('report', parents=[common], help='Summarize a saved report')
    rp.add_argument('report', help='report.json written by minimize')
    rp.set_defaults(func=cmd_report)
    return parser


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.verbose)

    try:
        return args.func(args)
    except (InvalidArgumentError, InvalidPotentialError, FieldFormatError) as e:
        print(f"\nUsage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as e:
        print(f"\nNo convergence: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except YMGroundError as e:
        print(f"\nError: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except Exception as e:
        print(f"\nError: {e}")
        import traceback
        traceback.print_exc()
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
