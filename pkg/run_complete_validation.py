"""
Complete YMGround acceptance pipeline.

Runs every acceptance study at desk scale and writes one JSON file per
study plus a summary to outputs/.
"""

import argparse
import logging
from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent))

from src.core.exports import export_to_json
from validation.acceptance_validation import AcceptanceValidator


STUDIES = (
    ('qm_annihilation', "One-dimensional annihilation and closed form"),
    ('wheeler_duality', "Spectral and kernel forms of the abelian functional"),
    ('boost_identity', "Boost identity of the abelian functional"),
    ('lattice_continuum_hinge', "U(1) minimizer against the mode oracle"),
    ('gauge_invariance', "Gauge invariance of S"),
    ('hje_identity', "Boundary Hamilton-Jacobi identity"),
    ('derivative_identity', "Functional derivative of S"),
    ('descent_robustness', "Monotone descent and Dirichlet exactness"),
    ('decay_study', "Decay exponents under box doubling"),
    ('negative_controls', "Negative controls"),
)


def run_complete_pipeline(output_dir: str = "outputs", threads: int = 1, only=None):
    """Run the selected acceptance studies and write the summary."""

    print("\n" + "=" * 80)
    print(" " * 20 + "YMGROUND - COMPLETE VALIDATION PIPELINE")
    print("=" * 80)

    validator = AcceptanceValidator(str(Path(output_dir) / "validation"), threads=threads)
    summary = {}
    for index, (name, title) in enumerate(STUDIES, start=1):
        if only and name not in only:
            continue
        print("\n" + "─" * 80)
        print(f"PART {index}: {title.upper()}")
        print("─" * 80)
        summary[name] = getattr(validator, name)()['passed']

    print("\n" + "=" * 80)
    print(" " * 30 + "VALIDATION COMPLETE")
    print("=" * 80)
    for name, passed in summary.items():
        print(f"   • {name:<26} {'PASS' if passed else 'FAIL'}")

    export_to_json({'studies': summary, 'passed': all(summary.values())},
                   Path(output_dir) / "summary_results.json", timestamp=True)
    print(f"\nSummary saved to {Path(output_dir) / 'summary_results.json'}")
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Run the YMGround acceptance studies")
    parser.add_argument('--output-dir', default="outputs")
    parser.add_argument('--threads', type=int, default=1)
    parser.add_argument('--only', nargs='+', choices=[name for name, _ in STUDIES],
                        help='Run a subset of the studies')
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    summary = run_complete_pipeline(args.output_dir, args.threads, args.only)
    return 0 if all(summary.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
