"""
Invariance suite.

Each check compares two numbers that must agree on the lattice (an exact
symmetry of the principal functional, the Gauss constraint at stationarity,
the Hamilton-Jacobi identity, the derivative identity) and records the
outcome as an InvarianceReport.  run_suite executes a named battery of
checks against one datum.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, asdict
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core import lie
from ..core.checks import relative_gap
from ..core.errors import InvalidArgumentError, YMGroundError
from ..core.exports import dumps
from ..core.lie import GroupKind
from ..lattice.data import DatumSpec, random_slice_gauge
from ..lattice.field import BoundaryData, gauss_residual
from ..lattice.geometry import LatticeGeometry
from ..yangmills.diagnostics import functional_derivative_check, hje_residual
from ..yangmills.minimizer import (MinimizeReport, MinimizerConfig, minimize,
                                   report_from_field)


logger = logging.getLogger(__name__)

BATTERY = ("gauge", "symmetry", "gauss", "hje", "deriv")

GAUGE_TOL = 1e-10
SYMMETRY_TOL = 1e-10
GAUSS_FACTOR = 10.0
HJE_TOL = {GroupKind.U1: 0.05, GroupKind.SU2: 0.10}
DERIV_TOL = {GroupKind.U1: 0.01, GroupKind.SU2: 0.03}
DERIV_EPS = 1e-3
DERIV_SCALE = 0.1
CORRUPTION_ANGLE = 0.5


@dataclass(frozen=True)
class InvarianceReport:
    """Outcome of one check; passed iff rel_gap <= tolerance and no error."""
    check: str
    digest: Dict[str, Any]
    lhs: float
    rhs: float
    rel_gap: float
    tolerance: float
    passed: bool
    error: Optional[str] = None

    @classmethod
    def compare(cls, check: str, digest: Dict[str, Any], lhs: float, rhs: float,
                tolerance: float, gap: Optional[float] = None) -> "InvarianceReport":
        gap = relative_gap(lhs, rhs) if gap is None else float(gap)
        return cls(check, digest, float(lhs), float(rhs), gap, float(tolerance),
                   bool(gap <= tolerance))

    @classmethod
    def failure(cls, check: str, digest: Dict[str, Any], error: Exception) -> "InvarianceReport":
        return cls(check, digest, float("nan"), float("nan"), float("nan"), float("nan"),
                   False, f"{type(error).__name__}: {error}")

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        for key in ("lhs", "rhs", "rel_gap", "tolerance"):
            if not np.isfinite(out[key]):
                out[key] = None
        return out


@dataclass(frozen=True)
class SymmetryOp:
    """Exact lattice symmetry of the datum: a 90 degree rotation or a shift."""
    kind: str
    plane: Optional[Tuple[int, int]] = None
    shift: Optional[Tuple[int, int, int]] = None

    @classmethod
    def rotation(cls, p: int, q: int) -> "SymmetryOp":
        return cls("rot90", plane=(int(p), int(q)))

    @classmethod
    def translation(cls, dx: int, dy: int, dz: int) -> "SymmetryOp":
        return cls("shift", shift=(int(dx), int(dy), int(dz)))

    @classmethod
    def parse(cls, text: str) -> "SymmetryOp":
        """'rot90:1,2' or 'shift:1,0,0'."""
        name, _, args = text.strip().partition(":")
        try:
            values = [int(v) for v in args.split(",")]
        except ValueError:
            raise InvalidArgumentError(f"bad symmetry op {text!r}") from None
        if name == "rot90" and len(values) == 2:
            return cls.rotation(*values)
        if name == "shift" and len(values) == 3:
            return cls.translation(*values)
        raise InvalidArgumentError(f"bad symmetry op {text!r}")

    def apply(self, bd: BoundaryData) -> BoundaryData:
        if self.kind == "rot90":
            return bd.rotate90(self.plane)
        if self.kind == "shift":
            return bd.translate(self.shift)
        raise InvalidArgumentError(f"unknown symmetry {self.kind!r}")

    @property
    def label(self) -> str:
        values = self.plane if self.kind == "rot90" else self.shift
        return f"{self.kind}:{','.join(str(v) for v in values)}"


DEFAULT_SYMMETRIES = (SymmetryOp.rotation(1, 2), SymmetryOp.translation(1, 0, 0))


@dataclass(frozen=True)
class SuiteConfig:
    """Datum, solver settings and battery of one suite run."""
    geometry: LatticeGeometry = LatticeGeometry(16, 8, 8, 8, 1.0)
    group: GroupKind = GroupKind.U1
    datum: DatumSpec = DatumSpec()
    minimizer: MinimizerConfig = MinimizerConfig()
    battery: Tuple[str, ...] = BATTERY
    symmetries: Tuple[SymmetryOp, ...] = DEFAULT_SYMMETRIES
    seed: int = 0
    threads: int = 1
    corrupt: bool = False

    def __post_init__(self):
        unknown = [name for name in self.battery if name not in BATTERY]
        if unknown:
            raise InvalidArgumentError(f"unknown battery entries {unknown}; choose from {BATTERY}")
        if self.threads < 1:
            raise InvalidArgumentError(f"threads must be >= 1, got {self.threads}")


def input_digest(bd: BoundaryData, geometry: LatticeGeometry, seed: int) -> Dict[str, Any]:
    return {
        'seed': int(seed),
        'geometry': geometry.to_list(),
        'group': bd.kind.value,
        'datum_sha256': bd.digest(),
    }


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_gauge_invariance(bd: BoundaryData, geometry: LatticeGeometry,
                           config: MinimizerConfig, seed: int,
                           base: Optional[MinimizeReport] = None,
                           scale: Optional[float] = None) -> InvarianceReport:
    """S(bd) against S(bd^g) for a seeded slice gauge transformation g."""
    digest = input_digest(bd, geometry, seed)
    g = random_slice_gauge(geometry, bd.kind, seed, scale)
    S = base.S if base is not None else minimize(bd, geometry, config).S
    S_g = minimize(bd.gauge_transform(g), geometry, config).S
    return InvarianceReport.compare("gauge", digest, S_g, S, GAUGE_TOL)


def check_euclidean_symmetry(bd: BoundaryData, geometry: LatticeGeometry,
                             config: MinimizerConfig, op: SymmetryOp,
                             base: Optional[MinimizeReport] = None,
                             seed: int = 0) -> InvarianceReport:
    """S of a rotated or translated datum against S of the original."""
    digest = input_digest(bd, geometry, seed)
    moved = op.apply(bd)
    S = base.S if base is not None else minimize(bd, geometry, config).S
    S_moved = minimize(moved, geometry, config).S
    return InvarianceReport.compare(f"symmetry[{op.label}]", digest, S_moved, S, SYMMETRY_TOL)


def check_gauss_residual(report: MinimizeReport, seed: int = 0) -> InvarianceReport:
    """Sup norm of the covariant divergence of the boundary momentum (lattice units)."""
    field = report.final_field
    digest = input_digest(report.boundary, field.geometry, seed)
    residual = float(np.max(np.linalg.norm(gauss_residual(field), axis=-1)))
    tolerance = GAUSS_FACTOR * report.config.grad_tol
    return InvarianceReport.compare("gauss", digest, residual, 0.0, tolerance, gap=residual)


def check_hje(report: MinimizeReport, seed: int = 0) -> InvarianceReport:
    field = report.final_field
    digest = input_digest(report.boundary, field.geometry, seed)
    lhs, rhs, gap = hje_residual(report)
    return InvarianceReport.compare("hje", digest, lhs, rhs, HJE_TOL[field.kind], gap=gap)


def random_tangent(bd: BoundaryData, seed: int, scale: float = DERIV_SCALE) -> np.ndarray:
    """Seeded perturbation with every coefficient in [-scale, scale]."""
    rng = np.random.RandomState(seed)
    return rng.uniform(-scale, scale, bd.spatial_shape + (3, lie.algebra_dim(bd.kind)))


def check_derivative(bd: BoundaryData, geometry: LatticeGeometry, config: MinimizerConfig,
                     seed: int, base: Optional[MinimizeReport] = None,
                     eps: float = DERIV_EPS) -> InvarianceReport:
    """Central-difference derivative of S along a random tangent against <dS/dA, h>."""
    digest = input_digest(bd, geometry, seed)
    h = random_tangent(bd, seed)
    numeric, analytic, gap = functional_derivative_check(bd, geometry, config, h, eps, base)
    return InvarianceReport.compare("deriv", digest, numeric, analytic, DERIV_TOL[bd.kind], gap=gap)


def corrupt_report(report: MinimizeReport, site: Tuple[int, int, int] = (0, 0, 0),
                   direction: int = 1, angle: float = CORRUPTION_ANGLE) -> MinimizeReport:
    """Rotate the t = 1 link at site along direction by angle (negative control)."""
    field = report.final_field
    kind = field.kind
    coeffs = np.zeros(lie.algebra_dim(kind))
    coeffs[0] = angle
    links = field.links.copy()
    index = (1,) + tuple(site) + (direction,)
    links[index] = lie.reunitarize(kind, lie.multiply(kind, lie.exp_array(kind, coeffs), links[index]))
    return report_from_field(field.with_links(links), report.config)


# ---------------------------------------------------------------------------
# Battery
# ---------------------------------------------------------------------------

def _guarded(name: str, digest: Dict[str, Any], func: Callable[[], InvarianceReport]) -> InvarianceReport:
    try:
        return func()
    except YMGroundError as err:
        logger.warning("check %s aborted: %s", name, err)
        return InvarianceReport.failure(name, digest, err)


def check_names(config: SuiteConfig) -> List[str]:
    """Report names of the battery in order, one per symmetry op."""
    names = []
    for name in config.battery:
        if name == "symmetry":
            names.extend(f"symmetry[{op.label}]" for op in config.symmetries)
        else:
            names.append(name)
    return names


def run_suite(config: SuiteConfig, bd: Optional[BoundaryData] = None) -> List[InvarianceReport]:
    """
    Run the configured battery against one datum.

    Args:
        config: Suite configuration
        bd: Datum (built from config.datum when omitted)

    Returns:
        Reports in battery order (one per symmetry op for "symmetry"); when the
        base minimization raises, every check is reported with that error
    """
    if not config.battery:
        return []
    geom = config.geometry
    cfg = config.minimizer
    bd = bd if bd is not None else config.datum.build(geom, config.group)
    digest = input_digest(bd, geom, config.seed)
    try:
        base = minimize(bd, geom, cfg)
    except YMGroundError as err:
        logger.warning("base minimization aborted: %s", err)
        return [InvarianceReport.failure(name, digest, err) for name in check_names(config)]
    if config.corrupt:
        base = corrupt_report(base)
        logger.info("negative control: corrupted one t=1 link by %.2f rad", CORRUPTION_ANGLE)

    tasks: List[Tuple[str, Callable[[], InvarianceReport]]] = []
    for name in config.battery:
        if name == "gauge":
            tasks.append((name, lambda: check_gauge_invariance(bd, geom, cfg, config.seed, base)))
        elif name == "symmetry":
            for op in config.symmetries:
                tasks.append((f"symmetry[{op.label}]",
                              lambda op=op: check_euclidean_symmetry(bd, geom, cfg, op, base, config.seed)))
        elif name == "gauss":
            tasks.append((name, lambda: check_gauss_residual(base, config.seed)))
        elif name == "hje":
            tasks.append((name, lambda: check_hje(base, config.seed)))
        elif name == "deriv":
            tasks.append((name, lambda: check_derivative(bd, geom, cfg, config.seed, base)))

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            futures = [pool.submit(_guarded, name, digest, func) for name, func in tasks]
            reports = [f.result() for f in futures]
    else:
        reports = [_guarded(name, digest, func) for name, func in tasks]

    for r in reports:
        logger.info("%-20s gap=%.3e tol=%.1e %s", r.check, r.rel_gap, r.tolerance,
                    "PASS" if r.passed else "FAIL")
    return reports


def all_passed(reports: Sequence[InvarianceReport]) -> bool:
    return all(r.passed for r in reports)


def reports_to_json(reports: Sequence[InvarianceReport]) -> str:
    """Deterministic JSON array of the reports."""
    return dumps([r.to_dict() for r in reports])
