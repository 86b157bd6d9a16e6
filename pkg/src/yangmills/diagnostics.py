"""
Identities and diagnostics evaluated on minimizer output.

All functions read a MinimizeReport (or rerun the minimizer) and return
plain numbers; gating decisions are left to the invariance suite.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..core import lie
from ..core.checks import relative_gap
from ..core.errors import (BoundaryError, ConvergenceError, DiagnosticUnavailableError,
                           InvalidArgumentError)
from ..lattice.field import (SPATIAL_PLANES, BoundaryData, action_gradient, canonical_momentum,
                             plane_weights, plaquette_logs)
from ..lattice.geometry import LatticeGeometry
from .minimizer import MinimizeReport, MinimizerConfig, minimize


logger = logging.getLogger(__name__)

MIN_SHELLS = 4
MAX_PERTURBATION = 0.1
EPS_RANGE = (1e-4, 1e-2)


class IdentityGap(NamedTuple):
    """Two sides of an identity and their relative gap."""
    lhs: float
    rhs: float
    rel_gap: float


@dataclass(frozen=True)
class DecayExponents:
    """Log-log slopes of shell maxima of |F| and |A| against distance."""
    p_F: float
    p_A: float
    radii: np.ndarray
    max_F: np.ndarray
    max_A: np.ndarray


@dataclass(frozen=True)
class LagrangianSplit:
    """Time integral of the imaginary-time Lagrangian, kinetic and magnetic parts."""
    kinetic: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential


def _require_converged(report: MinimizeReport, what: str):
    if not report.converged:
        logger.warning("%s evaluated on an unconverged report (|G|=%.3e)", what, report.grad_norm)


# ---------------------------------------------------------------------------
# Hamilton-Jacobi residual
# ---------------------------------------------------------------------------

def hje_residual(report: MinimizeReport) -> IdentityGap:
    """
    Compare sum a^3 |dS/dA|^2 with sum a^3 |B|^2 on the boundary.

    Both sides are centred at t = a/2: the momentum is read off the t = 0
    temporal plaquettes and the magnetic side pairs the spatial plaquettes
    of the first two slices.
    """
    _require_converged(report, "hje_residual")
    field = report.final_field
    a = field.a
    logs = plaquette_logs(field)
    lhs = a ** 3 * float(np.sum(report.E ** 2))
    rhs = 0.0
    for plane in SPATIAL_PLANES:
        values = logs[plane]
        rhs += float(np.sum(values[0] * values[1]))
    rhs *= a ** 3 / a ** 4
    return IdentityGap(lhs, rhs, relative_gap(lhs, rhs))


# ---------------------------------------------------------------------------
# Functional derivative
# ---------------------------------------------------------------------------

def perturb_boundary(bd: BoundaryData, h: np.ndarray, eps: float) -> BoundaryData:
    """Datum exp(eps a h) U with h in continuum units."""
    step = lie.exp_array(bd.kind, eps * bd.a * np.asarray(h, dtype=float))
    links = lie.reunitarize(bd.kind, lie.multiply(bd.kind, step, bd.links))
    return BoundaryData(bd.kind, links, bd.a)


def functional_derivative_check(bd: BoundaryData, geometry: LatticeGeometry,
                                config: MinimizerConfig, h: np.ndarray,
                                eps: float = 1e-3,
                                base: Optional[MinimizeReport] = None) -> IdentityGap:
    """
    Central-difference directional derivative of S against <dS/dA, h>.

    Args:
        bd: Dirichlet datum
        geometry: Lattice geometry
        config: Minimizer settings (all three runs must converge)
        h: Tangential perturbation, shape (n_x, n_y, n_z, 3, dim), |h| <= 0.1
        eps: Step in [1e-4, 1e-2]
        base: Converged report for bd, reused as warm start when given

    Returns:
        IdentityGap(numeric, analytic, rel_gap)
    """
    h = np.asarray(h, dtype=float)
    if h.shape != bd.links.shape[:4] + (lie.algebra_dim(bd.kind),):
        raise InvalidArgumentError(f"perturbation has shape {h.shape}")
    if np.max(np.abs(h)) > MAX_PERTURBATION:
        raise InvalidArgumentError(f"perturbation exceeds {MAX_PERTURBATION} in sup norm")
    if not EPS_RANGE[0] <= eps <= EPS_RANGE[1]:
        raise InvalidArgumentError(f"eps must lie in {EPS_RANGE}, got {eps}")

    if base is None:
        base = minimize(bd, geometry, config)
    if not base.converged:
        raise ConvergenceError("base minimization did not converge")
    if not np.any(h):
        return IdentityGap(0.0, 0.0, 0.0)

    a = geometry.a
    momentum = canonical_momentum(base.final_field)
    analytic = a ** 3 * float(np.sum(momentum * h))

    values = []
    for sign in (+1.0, -1.0):
        shifted = perturb_boundary(bd, h, sign * eps)
        report = minimize(shifted, geometry, config,
                          warm_start=base.final_field.with_boundary(shifted))
        if not report.converged:
            raise ConvergenceError(
                f"perturbed minimization ({'+' if sign > 0 else '-'}eps) did not converge"
            )
        values.append(report.S)
    numeric = (values[0] - values[1]) / (2.0 * eps)
    return IdentityGap(numeric, analytic, relative_gap(numeric, analytic))


# ---------------------------------------------------------------------------
# Decay
# ---------------------------------------------------------------------------

def _datum_centroid(bd: BoundaryData) -> np.ndarray:
    """Circular mean of the |log U|^2 weight along each periodic axis."""
    weight = np.sum(bd.logs() ** 2, axis=(-2, -1))
    total = weight.sum()
    if total <= 0:
        raise DiagnosticUnavailableError("flat datum has no support")
    centre = []
    for axis, n in enumerate(weight.shape):
        angle = 2.0 * np.pi * np.arange(n) / n
        profile = weight.sum(axis=tuple(j for j in range(3) if j != axis))
        mean = np.arctan2(np.dot(profile, np.sin(angle)), np.dot(profile, np.cos(angle)))
        centre.append((mean % (2.0 * np.pi)) * n / (2.0 * np.pi))
    return np.array(centre)


def _fit_slope(radii: np.ndarray, maxima: np.ndarray) -> float:
    keep = maxima > 0
    if keep.sum() < MIN_SHELLS:
        raise DiagnosticUnavailableError(f"only {int(keep.sum())} non-empty shells")
    slope, _ = np.polyfit(np.log(radii[keep]), np.log(maxima[keep]), 1)
    return float(slope)


def decay_diagnostic(report: MinimizeReport) -> DecayExponents:
    """
    Fit the fall-off of |F| and |A| away from a localized datum.

    Distances are measured from the datum centroid on t = 0 with the
    minimal-image convention in space.  Shells of width a/2 between 25% and
    75% of R = min(t_max, L/2) contribute their maxima to a least-squares
    log-log fit.

    Raises:
        DiagnosticUnavailableError: fewer than 4 non-empty shells
    """
    _require_converged(report, "decay_diagnostic")
    field = report.final_field
    geom = field.geometry
    a = geom.a
    centre = _datum_centroid(report.boundary)

    logs = plaquette_logs(field)
    F = np.sqrt(sum(np.sum(v ** 2, axis=-1) for v in logs.values())) / a ** 2
    A = np.sqrt(np.sum(lie.log_array(field.kind, field.links) ** 2, axis=(-2, -1))) / a

    shape = np.array(geom.spatial_shape, dtype=float)
    grids = np.meshgrid(*(np.arange(n) for n in geom.spatial_shape), indexing="ij")
    disp = np.stack(grids, axis=-1) - centre
    disp -= shape * np.round(disp / shape)
    r_space2 = np.sum(disp ** 2, axis=-1)
    t = np.arange(geom.n_t)[:, None, None, None]
    r = np.sqrt(t ** 2 + r_space2[None]) * a

    R = min(geom.n_t - 1, shape.min() / 2.0) * a
    bins = np.round(2.0 * r / a).astype(int)
    lo, hi = int(np.ceil(0.5 * R / a)), int(np.floor(1.5 * R / a))
    radii, max_F, max_A = [], [], []
    for b in range(lo, hi + 1):
        shell = bins == b
        if not np.any(shell):
            continue
        radii.append(0.5 * b * a)
        max_F.append(float(F[shell].max()))
        max_A.append(float(A[shell].max()))
    radii, max_F, max_A = np.array(radii), np.array(max_F), np.array(max_A)
    result = DecayExponents(_fit_slope(radii, max_F), _fit_slope(radii, max_A),
                            radii, max_F, max_A)
    logger.info("decay exponents: p_F=%.3f p_A=%.3f over %d shells",
                result.p_F, result.p_A, len(radii))
    return result


# ---------------------------------------------------------------------------
# Field equations and the Lagrangian
# ---------------------------------------------------------------------------

def field_equation_residual(report: MinimizeReport) -> float:
    """Sup norm of the Euler-Lagrange residual on spatial links with t >= 1 (lattice units)."""
    _, grad = action_gradient(report.final_field)
    return float(np.max(np.linalg.norm(grad[1:, :, :, :, 1:, :], axis=-1)))


def lagrangian_action(report: MinimizeReport) -> LagrangianSplit:
    """
    Sum over slices of a (1/2 |dA/dt|^2 + 1/2 |B|^2) a^3.

    The kinetic part comes from temporal plaquettes (the Weyl-gauge time
    derivative), the magnetic part from spatial plaquettes weighted by the
    trapezoidal rule.  The total reproduces S.
    """
    field = report.final_field
    geom = field.geometry
    a = geom.a
    kinetic = potential = 0.0
    for plane, values in plaquette_logs(field).items():
        w = plane_weights(geom, *plane)
        per_slice = 0.5 * np.sum((values / a ** 2) ** 2, axis=(1, 2, 3, 4)) * a ** 4
        part = float(np.dot(w, per_slice))
        if plane[0] == 0:
            kinetic += part
        else:
            potential += part
    return LagrangianSplit(kinetic, potential)


def energy_density(report: MinimizeReport, t_slice: int = 0) -> float:
    """
    Hamiltonian 1/2 sum a^3 (|E|^2 + |B|^2) on one time slice.

    E comes from the temporal plaquettes between t_slice and t_slice + 1,
    so the last slice has no electric field.
    """
    field = report.final_field
    geom = field.geometry
    if not 0 <= t_slice < geom.n_t - 1:
        raise BoundaryError(f"no electric field on slice {t_slice}")
    a = geom.a
    logs = plaquette_logs(field)
    electric = sum(float(np.sum(logs[(0, i)][t_slice] ** 2)) for i in (1, 2, 3))
    magnetic = sum(float(np.sum(logs[p][t_slice] ** 2)) for p in SPATIAL_PLANES)
    return 0.5 * a ** 3 * (electric + magnetic) / a ** 4
