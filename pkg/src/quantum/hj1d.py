"""
Zero-energy ground states of one-dimensional potentials.

For V >= 0 with a zero minimum at x*, the imaginary-time Hamilton-Jacobi
equation 1/2 (S')^2 = V has the solution S(x) = |int_{x*}^x sqrt(2V)|, and
the Hamiltonian ordered as H = 1/2 (S' - d/dx)(S' + d/dx) annihilates
psi = N exp(-S) exactly.  This module integrates S, builds psi and measures
how well the discretized ordered Hamiltonian annihilates it.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_simpson, trapezoid

from ..core.errors import InvalidArgumentError, InvalidPotentialError


logger = logging.getLogger(__name__)

ZERO_MINIMUM_TOL = 1e-14
SERIES_LAMBDA = 1e-6
# exp(-S) below this fraction of the peak is dropped from exported tables
SUPPORT_CUTOFF = 1e-16


@dataclass(frozen=True, eq=False)
class PotentialGrid:
    """Samples of V >= 0 on a uniform grid containing its zero minimum."""
    x: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if x.ndim != 1 or x.shape != V.shape or x.size < 5:
            raise InvalidArgumentError("potential grid needs matching 1D arrays of >= 5 points")
        steps = np.diff(x)
        if not (steps[0] > 0 and np.allclose(steps, steps[0], rtol=1e-9, atol=0.0)):
            raise InvalidArgumentError("potential grid must be uniform and increasing")
        if not np.all(np.isfinite(V)):
            raise InvalidPotentialError("potential has non-finite samples")
        if np.any(V < 0):
            raise InvalidPotentialError(f"potential is negative (min {V.min():.3e})")
        if V.min() > ZERO_MINIMUM_TOL:
            raise InvalidPotentialError(f"potential has no zero minimum (min {V.min():.3e})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "V", V)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray],
                      x_min: float, x_max: float, h: float) -> "PotentialGrid":
        """Sample func on [x_min, x_max] with spacing h (rounded to fit)."""
        if not (h > 0 and x_max > x_min):
            raise InvalidArgumentError(f"invalid grid [{x_min}, {x_max}] with h={h}")
        n = int(round((x_max - x_min) / h)) + 1
        x = np.linspace(x_min, x_max, n)
        return cls(x, np.asarray(func(x), dtype=float))

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def star_index(self) -> int:
        return int(np.argmin(self.V))

    @property
    def x_star(self) -> float:
        return float(self.x[self.star_index])


@dataclass(frozen=True, eq=False)
class PrincipalFunction1D:
    """S sampled on a grid, zero at x_star and growing away from it."""
    x: np.ndarray
    S: np.ndarray
    star_index: int

    @property
    def x_star(self) -> float:
        return float(self.x[self.star_index])

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])


def anharmonic_potential(x: np.ndarray, lam: float) -> np.ndarray:
    """V(x) = x^2/2 + lam x^4/4."""
    x = np.asarray(x, dtype=float)
    return 0.5 * x ** 2 + 0.25 * lam * x ** 4


def anharmonic_S(x: Union[float, np.ndarray], lam: float) -> Union[float, np.ndarray]:
    """
    Closed-form principal function of the anharmonic potential.

    S(x) = (2 / (3 lam)) ((1 + lam x^2 / 2)^{3/2} - 1), evaluated through
    expm1/log1p; below lam = 1e-6 the series x^2/2 + lam x^4/16 - lam^2 x^6/192
    is used instead.

    Raises:
        InvalidArgumentError: lam <= 0
    """
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    if lam < SERIES_LAMBDA:
        value = 0.5 * x ** 2 + lam * x ** 4 / 16.0 - lam ** 2 * x ** 6 / 192.0
    else:
        value = (2.0 / (3.0 * lam)) * np.expm1(1.5 * np.log1p(0.5 * lam * x ** 2))
    return float(value) if value.ndim == 0 else value


def solve_hje_1d(V: PotentialGrid) -> PrincipalFunction1D:
    """
    Integrate sqrt(2V) outward from x* with composite Simpson quadrature.

    Returns:
        PrincipalFunction1D with S(x*) = 0
    """
    q = np.sqrt(2.0 * V.V)
    i = V.star_index
    h = V.h
    S = np.zeros_like(q)
    if i < q.size - 1:
        S[i:] = cumulative_simpson(q[i:], dx=h, initial=0.0)
    if i > 0:
        S[:i + 1] = cumulative_simpson(q[:i + 1][::-1], dx=h, initial=0.0)[::-1]
    return PrincipalFunction1D(V.x, S, i)


def principal_from_closed_form(x: np.ndarray, lam: float) -> PrincipalFunction1D:
    """Anharmonic S sampled on x (reference for the quadrature)."""
    x = np.asarray(x, dtype=float)
    return PrincipalFunction1D(x, anharmonic_S(x, lam), int(np.argmin(np.abs(x))))


def ground_state(S: PrincipalFunction1D) -> np.ndarray:
    """exp(-S) normalized to unit L2 norm with the trapezoidal rule."""
    if not np.all(np.isfinite(S.S)):
        raise InvalidArgumentError("principal function has non-finite samples")
    psi = np.exp(-(S.S - S.S.min()))
    return psi / np.sqrt(trapezoid(psi ** 2, S.x))


# ---------------------------------------------------------------------------
# Finite differences and residuals
# ---------------------------------------------------------------------------

def central_difference(f: np.ndarray, h: float, order: int = 4) -> np.ndarray:
    """
    First derivative on the interior points.

    Order 2 drops one point at each end, order 4 drops two.
    """
    if order == 2:
        return (f[2:] - f[:-2]) / (2.0 * h)
    if order == 4:
        return (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    raise InvalidArgumentError(f"fd_order must be 2 or 4, got {order}")


def _samples(S) -> np.ndarray:
    return S.S if isinstance(S, PrincipalFunction1D) else np.asarray(S, dtype=float)


def nno_residual(V: PotentialGrid, S: Union[PrincipalFunction1D, np.ndarray],
                 psi: np.ndarray, fd_order: int = 4) -> float:
    """
    Relative norm of 1/2 (S' - d/dx)(S' psi + psi') on the grid interior.

    Args:
        V: Potential grid (defines x and h)
        S: Principal function (or its samples) on the same grid
        psi: Wavefunction samples on the same grid
        fd_order: 2 or 4, order of the central differences

    Returns:
        ||r||_2 / ||psi||_2
    """
    s = _samples(S)
    psi = np.asarray(psi, dtype=float)
    if s.shape != V.x.shape or psi.shape != V.x.shape:
        raise InvalidArgumentError("S, psi and the potential grid have different sizes")
    if isinstance(S, PrincipalFunction1D) and not np.array_equal(S.x, V.x):
        raise InvalidArgumentError("S and the potential live on different grids")
    h = V.h
    cut = 1 if fd_order == 2 else 2
    ds = central_difference(s, h, fd_order)
    phi = ds * psi[cut:-cut] + central_difference(psi, h, fd_order)
    r = 0.5 * (ds[cut:-cut] * phi[cut:-cut] - central_difference(phi, h, fd_order))
    return float(np.sqrt(np.sum(r ** 2) * h) / np.sqrt(np.sum(psi ** 2) * h))


def hje_residual_1d(V: PotentialGrid, S: Union[PrincipalFunction1D, np.ndarray],
                    fd_order: int = 2) -> float:
    """max over the interior of |1/2 (S')^2 - V|."""
    s = _samples(S)
    cut = 1 if fd_order == 2 else 2
    ds = central_difference(s, V.h, fd_order)
    return float(np.max(np.abs(0.5 * ds ** 2 - V.V[cut:-cut])))


def symmetric_energy(V: PotentialGrid, psi: np.ndarray) -> float:
    """<psi| p^2/2 + V |psi> / <psi|psi>, positive for any normalizable psi."""
    psi = np.asarray(psi, dtype=float)
    dpsi = np.gradient(psi, V.h)
    numerator = trapezoid(0.5 * dpsi ** 2 + V.V * psi ** 2, V.x)
    return float(numerator / trapezoid(psi ** 2, V.x))


def harmonic_ladder_check(x: np.ndarray, psi: np.ndarray) -> float:
    """||a psi|| / ||psi|| for the lowering operator a = (x + d/dx)/sqrt(2)."""
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=float)
    lowered = (x * psi + np.gradient(psi, x[1] - x[0])) / np.sqrt(2.0)
    return float(np.sqrt(trapezoid(lowered ** 2, x) / trapezoid(psi ** 2, x)))


def convergence_order(residuals: Sequence[float], hs: Sequence[float]) -> float:
    """Least-squares slope of log(residual) against log(h)."""
    residuals = np.asarray(residuals, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if residuals.size < 2 or residuals.shape != hs.shape or np.any(residuals <= 0):
        raise InvalidArgumentError("need >= 2 positive residuals matching the step sizes")
    slope, _ = np.polyfit(np.log(hs), np.log(residuals), 1)
    return float(slope)


def support_window(S: Union[PrincipalFunction1D, np.ndarray],
                   cutoff: float = SUPPORT_CUTOFF) -> slice:
    """Index range where exp(-S) stays above cutoff relative to its peak."""
    s = _samples(S)
    keep = np.nonzero(s - s.min() <= -np.log(cutoff))[0]
    return slice(int(keep[0]), int(keep[-1]) + 1)


# ---------------------------------------------------------------------------
# Study driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QMStudy:
    """Grid samples and residuals of one anharmonic run."""
    lam: float
    h: float
    x: np.ndarray
    V: np.ndarray
    S: np.ndarray
    psi: np.ndarray
    residual: float
    hje_residual: float
    closed_form_error: float
    symmetric_energy: float

    def table(self) -> dict:
        """Columns (x, V, S, psi, residual) restricted to the support window."""
        window = support_window(self.S)
        n = window.stop - window.start
        return {
            'x': self.x[window],
            'V': self.V[window],
            'S': self.S[window],
            'psi': self.psi[window],
            'residual': np.full(n, self.residual),
        }

    def summary(self) -> dict:
        return {
            'lambda': self.lam,
            'h': self.h,
            'nno_residual': self.residual,
            'hje_residual': self.hje_residual,
            'closed_form_max_error': self.closed_form_error,
            'symmetric_energy': self.symmetric_energy,
        }


def anharmonic_study(lam: float, h: float = 1e-3, half_width: float = 5.0,
                     fd_order: int = 4, closed_form: bool = False) -> QMStudy:
    """
    Solve the anharmonic problem on [-half_width, half_width].

    Args:
        lam: Quartic coupling (> 0)
        h: Grid spacing
        half_width: Half the domain length
        fd_order: Difference order of the residual
        closed_form: Use the closed-form S instead of the quadrature

    Returns:
        QMStudy with samples and residuals
    """
    anharmonic_S(0.0, lam)  # raises for lam <= 0
    grid = PotentialGrid.from_function(lambda x: anharmonic_potential(x, lam),
                                       -half_width, half_width, h)
    quadrature = solve_hje_1d(grid)
    exact = principal_from_closed_form(grid.x, lam)
    S = exact if closed_form else quadrature
    psi = ground_state(S)
    study = QMStudy(
        lam=lam, h=grid.h, x=grid.x, V=grid.V, S=S.S, psi=psi,
        residual=nno_residual(grid, S, psi, fd_order),
        hje_residual=hje_residual_1d(grid, quadrature),
        closed_form_error=float(np.max(np.abs(quadrature.S - exact.S))),
        symmetric_energy=symmetric_energy(grid, psi),
    )
    logger.info("anharmonic lam=%g h=%g: residual=%.3e", lam, grid.h, study.residual)
    return study


def residual_convergence(lam: float, hs: Sequence[float] = (4e-3, 2e-3, 1e-3),
                         half_width: float = 5.0, fd_order: int = 2,
                         closed_form: bool = True) -> dict:
    """Residuals over several spacings and their fitted order."""
    residuals = [anharmonic_study(lam, h, half_width, fd_order, closed_form).residual for h in hs]
    return {'h': list(hs), 'residual': residuals, 'order': convergence_order(residuals, hs)}
