"""
Dirichlet minimizer for the Euclidean lattice action.

The t = 0 spatial links are fixed to the datum; every other link is moved
along its left-trivialized gradient by the retraction U <- exp(alpha d) U.
Search directions come from Polak-Ribiere+ conjugate gradients (or plain
steepest descent) and step lengths from Armijo backtracking with a
quadratic-interpolation trial step.  The minimized action is Hamilton's
principal functional S of the datum.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, asdict
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core import lie
from ..core.checks import CustomCheck, ToleranceCheck
from ..core.errors import BranchCutError, ConvergenceError, InvalidArgumentError
from ..core.problem_base import VariationalProblem
from ..lattice.field import (BoundaryData, GaugeField, action_from_logs, action_gradient,
                             plane_weights, plaquette_logs)
from ..lattice.geometry import LatticeGeometry


logger = logging.getLogger(__name__)

START_PROFILES = ("constant", "damped")
METHODS = ("cg", "gd")

# Largest link rotation a single trial step may apply (radians of log norm)
MAX_ROTATION = 0.5
OPTIMISM = 2.0


@dataclass(frozen=True)
class MinimizerConfig:
    """Stopping rule, step control and start options of the minimizer."""
    max_iters: int = 5000
    grad_tol: float = 1e-9
    initial_step: float = 0.1
    backtrack_factor: float = 0.5
    armijo_constant: float = 1e-4
    weyl_gauge: bool = True
    seed: int = 0
    start_profile: str = "damped"
    method: str = "cg"
    max_backtracks: int = 30

    def __post_init__(self):
        if self.max_iters < 0:
            raise InvalidArgumentError(f"max_iters must be >= 0, got {self.max_iters}")
        if not self.grad_tol > 0:
            raise InvalidArgumentError(f"grad_tol must be positive, got {self.grad_tol}")
        if not self.initial_step > 0:
            raise InvalidArgumentError(f"initial_step must be positive, got {self.initial_step}")
        if not 0 < self.backtrack_factor < 1:
            raise InvalidArgumentError(
                f"backtrack_factor must lie in (0, 1), got {self.backtrack_factor}"
            )
        if not 0 < self.armijo_constant < 1:
            raise InvalidArgumentError(
                f"armijo_constant must lie in (0, 1), got {self.armijo_constant}"
            )
        if self.start_profile not in START_PROFILES:
            raise InvalidArgumentError(f"unknown start_profile {self.start_profile!r}")
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if self.max_backtracks < 1:
            raise InvalidArgumentError("max_backtracks must be >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class MinimizeReport:
    """Outcome of one Dirichlet minimization."""
    final_field: GaugeField
    S: float
    grad_norm: float
    iterations: int
    action_trace: Tuple[Tuple[int, float], ...]
    E: np.ndarray  # (n_x, n_y, n_z, 3, dim), continuum units
    converged: bool
    config: MinimizerConfig = dc_field(default_factory=MinimizerConfig)
    gradient: Optional[np.ndarray] = None  # left-trivialized dS/dU, lattice units

    @property
    def geometry(self) -> LatticeGeometry:
        return self.final_field.geometry

    @property
    def boundary(self) -> BoundaryData:
        return self.final_field.boundary()

    def to_dict(self) -> Dict[str, Any]:
        """JSON document: scalars, trace and E flattened with its shape."""
        return {
            'S': float(self.S),
            'grad_norm': float(self.grad_norm),
            'iterations': int(self.iterations),
            'converged': bool(self.converged),
            'action_trace': [[int(i), float(s)] for i, s in self.action_trace],
            'E': {'shape': list(self.E.shape), 'data': self.E.ravel().tolist()},
            'group': self.final_field.kind.value,
            'geometry': self.geometry.to_list(),
            'datum_sha256': self.boundary.digest(),
            'config': self.config.to_dict(),
        }


@dataclass(frozen=True)
class MultiStartResult:
    """Spread of S over independent starts for the same datum."""
    reports: Tuple[MinimizeReport, ...]

    @property
    def values(self) -> List[float]:
        return [r.S for r in self.reports]

    @property
    def best(self) -> MinimizeReport:
        return min(self.reports, key=lambda r: r.S)

    @property
    def S_min(self) -> float:
        return float(min(self.values))

    @property
    def spread(self) -> float:
        return float(max(self.values) - min(self.values))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'S_min': self.S_min,
            'spread': self.spread,
            'values': self.values,
            'converged': [r.converged for r in self.reports],
        }


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def free_link_mask(geometry: LatticeGeometry, weyl_gauge: bool) -> np.ndarray:
    """
    Boolean (n_t, 4) table of the links the minimizer may move.

    Spatial links are free for t >= 1.  Time links are pinned to the
    identity in Weyl gauge; otherwise they are free except on the last
    slice, where they enter no plaquette.
    """
    mask = np.zeros((geometry.n_t, 4), dtype=bool)
    mask[1:, 1:] = True
    if not weyl_gauge:
        mask[:-1, 0] = True
    return mask


def projected_gradient_norm(grad: np.ndarray, mask: np.ndarray) -> float:
    """Largest algebra-coefficient norm of the gradient over free links."""
    norms = np.linalg.norm(grad, axis=-1)
    free = norms[_link_mask(mask, norms.shape)]
    return float(free.max()) if free.size else 0.0


def _link_mask(mask: np.ndarray, shape) -> np.ndarray:
    """Broadcast an (n_t, 4) link table over the spatial sites."""
    return np.broadcast_to(mask[:, None, None, None, :], tuple(shape[:5]))


def _action_change(geometry: LatticeGeometry, old_logs, new_logs) -> float:
    """S(new) - S(old) evaluated as a sum of differences of squares."""
    total = 0.0
    for plane, old in old_logs.items():
        new = new_logs[plane]
        w = plane_weights(geometry, *plane)
        per_slice = np.sum((new - old) * (new + old), axis=(1, 2, 3, 4))
        total += 0.5 * float(np.dot(w, per_slice))
    return total


def boundary_electric_field(field: GaugeField, logs=None) -> np.ndarray:
    """Temporal plaquette logs at t = 0 divided by a^2 (the E of the report)."""
    if logs is None:
        logs = plaquette_logs(field)
    E = np.stack([logs[(0, i)][0] for i in (1, 2, 3)], axis=-2)
    return E / field.a ** 2


def cold_start(bd: BoundaryData, geometry: LatticeGeometry, profile: str = "damped") -> GaugeField:
    """
    Initial field satisfying the boundary condition.

    "constant" repeats the datum on every slice; "damped" scales its link
    logs by exp(-t/tau) with tau = n_t a / 4.
    """
    field = GaugeField.constant_extension(bd, geometry)
    if profile == "constant":
        return field
    if profile != "damped":
        raise InvalidArgumentError(f"unknown start_profile {profile!r}")
    tau = geometry.n_t * geometry.a / 4.0
    damping = np.exp(-np.arange(geometry.n_t) * geometry.a / tau)
    coeffs = bd.logs()[None] * damping[:, None, None, None, None, None]
    links = field.links.copy()
    links[1:, :, :, :, 1:, :] = lie.exp_array(bd.kind, coeffs[1:])
    return field.with_links(links)


# ---------------------------------------------------------------------------
# Problem class
# ---------------------------------------------------------------------------

class DirichletMinimizer(VariationalProblem):
    """
    Minimize the lattice action over all links not fixed by the datum.

    The field state between iterations is the link array plus cached
    plaquette logs, action and gradient of the current point.
    """

    def __init__(self, bd: BoundaryData, geometry: LatticeGeometry,
                 config: Optional[MinimizerConfig] = None,
                 warm_start: Optional[GaugeField] = None,
                 name: str = "dirichlet"):
        super().__init__(name)
        bd.require_compatible(geometry)
        self.bd = bd
        self.geometry = geometry
        self.config = config or MinimizerConfig()
        self.warm_start = warm_start
        self.kind = bd.kind
        self.mask = free_link_mask(geometry, self.config.weyl_gauge)
        if warm_start is not None:
            self._check_warm_start(warm_start)
        self.checks = self.define_checks()

    def _check_warm_start(self, warm: GaugeField):
        if warm.geometry != self.geometry or warm.kind is not self.kind:
            raise InvalidArgumentError("warm start does not match geometry or group")
        if not np.array_equal(warm.links[0, :, :, :, 1:, :], self.bd.links):
            raise InvalidArgumentError("warm start t=0 links differ from the datum")
        if self.config.weyl_gauge and not warm.is_weyl():
            raise InvalidArgumentError("warm start is not in Weyl gauge")

    def define_checks(self) -> List[Any]:
        checks = [
            CustomCheck("dirichlet_exactness",
                        lambda s: (bool(s['boundary_exact']), 0.0 if s['boundary_exact'] else 1.0)),
            CustomCheck("monotone_descent",
                        lambda s: (bool(s['monotone']), float(s['max_increase']))),
            ToleranceCheck("stationarity", "grad_norm", self.config.grad_tol, check_type='soft'),
        ]
        if self.config.weyl_gauge:
            checks.append(CustomCheck("weyl_gauge",
                                      lambda s: (bool(s['weyl']), 0.0 if s['weyl'] else 1.0)))
        return checks

    def initial_state(self) -> GaugeField:
        if self.warm_start is not None:
            return self.warm_start
        return cold_start(self.bd, self.geometry, self.config.start_profile)

    def solution_state(self, solution: MinimizeReport) -> Dict[str, Any]:
        values = np.array([s for _, s in solution.action_trace])
        increases = np.diff(values) if values.size > 1 else np.zeros(1)
        final = solution.final_field
        return {
            'S': solution.S,
            'grad_norm': solution.grad_norm,
            'iterations': solution.iterations,
            'converged': solution.converged,
            'boundary_exact': bool(np.array_equal(final.links[0, :, :, :, 1:, :], self.bd.links)),
            'monotone': bool(np.all(increases <= 0.0)),
            'max_increase': float(max(increases.max(), 0.0)),
            'weyl': final.is_weyl(),
        }

    # -- iteration ------------------------------------------------------------

    def _evaluate(self, links: np.ndarray):
        field = GaugeField(self.geometry, self.kind, links)
        logs = plaquette_logs(field)
        return field, logs

    def _gradient(self, field: GaugeField, logs) -> np.ndarray:
        _, grad = action_gradient(field, logs)
        grad[~_link_mask(self.mask, grad.shape)] = 0.0
        return grad

    def _retract(self, links: np.ndarray, direction: np.ndarray, alpha: float) -> np.ndarray:
        free = _link_mask(self.mask, links.shape)
        out = links.copy()
        step = lie.exp_array(self.kind, alpha * direction[free])
        out[free] = lie.reunitarize(self.kind, lie.multiply(self.kind, step, links[free]))
        return out

    def _line_search(self, links, logs, direction, slope, alpha):
        """
        Armijo backtracking along the retraction curve.

        Returns:
            (alpha, new_links, new_field, new_logs, delta) of the accepted
            step, or None when no trial decreases the action.
        """
        cfg = self.config
        best = None
        for _ in range(cfg.max_backtracks):
            try:
                trial_links = self._retract(links, direction, alpha)
                trial_field, trial_logs = self._evaluate(trial_links)
            except BranchCutError:
                alpha *= cfg.backtrack_factor
                continue
            delta = _action_change(self.geometry, logs, trial_logs)
            if delta <= cfg.armijo_constant * alpha * slope:
                best = (alpha, trial_links, trial_field, trial_logs, delta)
                break
            # minimizer of the quadratic through (0, 0), slope and (alpha, delta)
            curvature = delta - slope * alpha
            shrink = cfg.backtrack_factor * alpha
            if curvature > 0:
                alpha = float(np.clip(-slope * alpha ** 2 / (2.0 * curvature), 0.1 * alpha, shrink))
            else:
                alpha = shrink
        if best is None:
            return None

        # one interpolated refinement of an accepted step
        alpha, _, _, _, delta = best
        curvature = delta - slope * alpha
        if curvature > 0:
            alpha_q = -slope * alpha ** 2 / (2.0 * curvature)
            if abs(alpha_q - alpha) > 0.1 * alpha and alpha_q * self._max_coeff(direction) <= MAX_ROTATION:
                try:
                    q_links = self._retract(links, direction, alpha_q)
                    q_field, q_logs = self._evaluate(q_links)
                    q_delta = _action_change(self.geometry, logs, q_logs)
                    if q_delta < delta:
                        best = (alpha_q, q_links, q_field, q_logs, q_delta)
                except BranchCutError:
                    pass
        return best

    @staticmethod
    def _max_coeff(direction: np.ndarray) -> float:
        return float(np.max(np.linalg.norm(direction, axis=-1)))

    def solve(self) -> MinimizeReport:
        """Run the descent until the stopping rule fires."""
        cfg = self.config
        field = self.initial_state()
        links = np.array(field.links)
        links[0, :, :, :, 1:, :] = self.bd.links
        field, logs = self._evaluate(links)
        S = action_from_logs(field, logs)
        grad = self._gradient(field, logs)
        grad_norm = projected_gradient_norm(grad, self.mask)

        trace = [(0, S)]
        direction = -grad
        prev_grad = grad
        prev_decrease = None
        iterations = 0
        logger.debug("start: S=%.6e |G|=%.3e", S, grad_norm)

        while grad_norm > cfg.grad_tol and iterations < cfg.max_iters:
            slope = float(np.sum(direction * grad))
            if slope >= 0:
                direction = -grad
                slope = float(np.sum(direction * grad))
            d_max = self._max_coeff(direction)
            if prev_decrease is not None and prev_decrease < 0:
                alpha = OPTIMISM * 2.0 * prev_decrease / slope
            else:
                alpha = cfg.initial_step / max(d_max, 1e-300)
            alpha = min(alpha, MAX_ROTATION / max(d_max, 1e-300))

            result = self._line_search(links, logs, direction, slope, alpha)
            if result is None and cfg.method == "cg" and not np.array_equal(direction, -grad):
                direction = -grad
                slope = float(np.sum(direction * grad))
                d_max = self._max_coeff(direction)
                alpha = min(cfg.initial_step, MAX_ROTATION) / max(d_max, 1e-300)
                result = self._line_search(links, logs, direction, slope, alpha)
            if result is None:
                logger.info("line search stalled at iteration %d (|G|=%.3e)", iterations, grad_norm)
                break

            _, links, field, logs, delta = result
            iterations += 1
            S = S + delta
            trace.append((iterations, S))
            prev_decrease = delta

            grad = self._gradient(field, logs)
            grad_norm = projected_gradient_norm(grad, self.mask)
            if cfg.method == "cg":
                beta = float(np.sum(grad * (grad - prev_grad)) / max(np.sum(prev_grad ** 2), 1e-300))
                direction = -grad + max(beta, 0.0) * direction
            else:
                direction = -grad
            prev_grad = grad
            if iterations % 100 == 0:
                logger.debug("iter %d: S=%.12e |G|=%.3e", iterations, S, grad_norm)

        converged = grad_norm <= cfg.grad_tol
        if not converged:
            logger.warning("minimizer stopped after %d iterations with |G|=%.3e > %.1e",
                           iterations, grad_norm, cfg.grad_tol)
        report = _build_report(field, logs, self._gradient(field, logs), grad_norm,
                               iterations, trace, converged, cfg)
        self.solution = report
        logger.info("minimize: S=%.10e iterations=%d converged=%s", report.S, iterations, converged)
        return report


def _build_report(field: GaugeField, logs, grad, grad_norm, iterations, trace,
                  converged, config) -> MinimizeReport:
    return MinimizeReport(
        final_field=field,
        S=action_from_logs(field, logs),
        grad_norm=float(grad_norm),
        iterations=int(iterations),
        action_trace=tuple((int(i), float(s)) for i, s in trace),
        E=boundary_electric_field(field, logs),
        converged=bool(converged),
        config=config,
        gradient=grad,
    )


def report_from_field(field: GaugeField, config: Optional[MinimizerConfig] = None) -> MinimizeReport:
    """Wrap an arbitrary field as a zero-iteration report (no descent)."""
    config = config or MinimizerConfig()
    logs = plaquette_logs(field)
    grad = action_gradient(field, logs)[1]
    mask = free_link_mask(field.geometry, config.weyl_gauge)
    grad[~_link_mask(mask, grad.shape)] = 0.0
    grad_norm = projected_gradient_norm(grad, mask)
    S = action_from_logs(field, logs)
    return _build_report(field, logs, grad, grad_norm, 0, [(0, S)],
                         grad_norm <= config.grad_tol, config)


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

def minimize(bd: BoundaryData, geometry: LatticeGeometry,
             config: Optional[MinimizerConfig] = None,
             warm_start: Optional[GaugeField] = None) -> MinimizeReport:
    """
    Minimize the Euclidean action with the datum held fixed on t = 0.

    Args:
        bd: Dirichlet datum
        geometry: Lattice geometry (spatial extents must match bd)
        config: Minimizer settings
        warm_start: Field to start from; its t = 0 spatial links must equal bd

    Returns:
        MinimizeReport (converged=False when max_iters ran out)
    """
    return DirichletMinimizer(bd, geometry, config, warm_start).solve()


def principal_functional(bd: BoundaryData, geometry: LatticeGeometry,
                         config: Optional[MinimizerConfig] = None,
                         require_converged: bool = False) -> float:
    """Hamilton's principal functional S(bd)."""
    report = minimize(bd, geometry, config)
    if require_converged and not report.converged:
        raise ConvergenceError(
            f"minimizer did not converge (|G|={report.grad_norm:.3e} after {report.iterations} iterations)"
        )
    return report.S


def random_start(bd: BoundaryData, geometry: LatticeGeometry, config: MinimizerConfig,
                 seed: int, scale: float = 0.05) -> GaugeField:
    """Cold start with seeded random rotations applied to every free link."""
    base = cold_start(bd, geometry, config.start_profile)
    rng = np.random.RandomState(seed)
    mask = _link_mask(free_link_mask(geometry, config.weyl_gauge), geometry.shape + (4,))
    kicks = lie.random_group(bd.kind, geometry.shape + (4,), rng, scale=scale)
    links = base.links.copy()
    links[mask] = lie.reunitarize(bd.kind, lie.multiply(bd.kind, kicks[mask], links[mask]))
    return base.with_links(links)


def minimize_multistart(bd: BoundaryData, geometry: LatticeGeometry,
                        config: Optional[MinimizerConfig] = None,
                        n_starts: int = 4, threads: int = 1,
                        scale: float = 0.05) -> MultiStartResult:
    """
    Minimize from the cold start and n_starts - 1 seeded random starts.

    Seeds are config.seed + 1, config.seed + 2, ...; results keep start order.
    """
    config = config or MinimizerConfig()
    if n_starts < 1:
        raise InvalidArgumentError(f"n_starts must be >= 1, got {n_starts}")
    starts = [None] + [random_start(bd, geometry, config, config.seed + i, scale)
                       for i in range(1, n_starts)]

    def run(start):
        return minimize(bd, geometry, config, warm_start=start)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run, starts))
    else:
        reports = [run(s) for s in starts]
    result = MultiStartResult(tuple(reports))
    logger.info("multistart: S_min=%.10e spread=%.3e", result.S_min, result.spread)
    return result
