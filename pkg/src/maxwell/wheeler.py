"""
Abelian ground-state functional.

For the free Maxwell field the principal functional is known in closed
form:

    S(A) = 1/2 <A, (*d) Laplacian^{-1/2} (*d) A>
         = 1/(4 pi^2) int int B(x).B(y) / |x - y|^2 d^3x d^3y,

i.e. 1/2 sum_k |k| |A_T(k)|^2 per transverse mode.  This module evaluates the
spectral and the position-kernel form, the per-mode decay oracle used to
check the U(1) lattice minimizer, and the abelian boost identity.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import fft
from scipy.integrate import dblquad, solve_bvp
from scipy.linalg import solve_banded

from ..core.checks import EPS_FLOOR, relative_gap
from ..core.errors import ConvergenceError, InvalidArgumentError
from .vector_field import (VectorFieldGrid, coordinates, curl, transverse_project,
                           wavevectors, wrap_fraction)


logger = logging.getLogger(__name__)

MIN_KERNEL_N = 16
DELOCALIZED_FRACTION = 1e-3
BVP_TOL = 1e-10
PURE_GAUGE_FRACTION = 1e-4


@dataclass(frozen=True)
class KernelEstimate:
    """Position-kernel S and its localization flag."""
    S: float
    wrap_fraction: float
    delocalized: bool

    def __float__(self) -> float:
        return self.S


@dataclass(frozen=True)
class BoostCheck:
    """Both moments of the boost identity along one axis."""
    axis: int
    lhs: float
    rhs: float
    rel_gap: float
    delocalized: bool


def _weight(N: int, a: float) -> float:
    return a ** 3 / N ** 3


def wheeler_S_spectral(A: VectorFieldGrid) -> float:
    """1/2 (a^3 / N^3) sum over k != 0 of |k| |A_T(k)|^2."""
    transverse = transverse_project(A)
    knorm = np.linalg.norm(wavevectors(A.N, A.a), axis=-1)
    power = np.sum(np.abs(transverse.spectrum) ** 2, axis=-1)
    return 0.5 * _weight(A.N, A.a) * float(np.sum(knorm * power))


def functional_derivative(A: VectorFieldGrid) -> VectorFieldGrid:
    """delta S / delta A: the modes |k| A_T(k) back in position space."""
    transverse = transverse_project(A)
    knorm = np.linalg.norm(wavevectors(A.N, A.a), axis=-1)
    return VectorFieldGrid.from_spectral(knorm[..., None] * transverse.spectrum, A.a)


@lru_cache(maxsize=None)
def cell_integral() -> float:
    """
    int over the unit cube of d^3u / |u|^2.

    By the divergence theorem (div(u/|u|^2) = 1/|u|^2) this is
    3 int int_{[-1/2, 1/2]^2} dy dz / (1/4 + y^2 + z^2).
    """
    value, _ = dblquad(lambda z, y: 1.0 / (0.25 + y * y + z * z), -0.5, 0.5, -0.5, 0.5,
                       epsabs=1e-13, epsrel=1e-13)
    return 3.0 * value


def _kernel(N: int, a: float) -> np.ndarray:
    """1/|x - y|^2 over minimal-image displacements; the origin holds the cell average."""
    j = np.arange(N)
    j = np.where(j > N // 2, j - N, j) * a
    r2 = j[:, None, None] ** 2 + j[None, :, None] ** 2 + j[None, None, :] ** 2
    r2[0, 0, 0] = 1.0
    kernel = 1.0 / r2
    kernel[0, 0, 0] = cell_integral() / a ** 2
    return kernel


def wheeler_S_kernel(A: VectorFieldGrid, workers: Optional[int] = None) -> KernelEstimate:
    """
    Position-space double sum with kernel 1/(4 pi^2 |x - y|^2).

    B is taken with fourth-order central differences and the double sum is
    a circular convolution done by FFT.

    Raises:
        InvalidArgumentError: N < 16
    """
    if A.N < MIN_KERNEL_N:
        raise InvalidArgumentError(f"kernel form needs N >= {MIN_KERNEL_N}, got {A.N}")
    B = curl(A, "central4")
    kernel_hat = fft.fftn(_kernel(A.N, A.a), workers=workers).real
    total = 0.0
    for c in range(3):
        conv = fft.ifftn(fft.fftn(B[..., c], workers=workers) * kernel_hat, workers=workers).real
        total += float(np.sum(B[..., c] * conv))
    S = A.a ** 6 * total / (4.0 * np.pi ** 2)

    fraction = wrap_fraction(np.sum(B ** 2, axis=-1))
    delocalized = fraction > DELOCALIZED_FRACTION
    if delocalized:
        logger.warning("field carries %.2e of |B|^2 near the periodic wrap; kernel sum is unreliable",
                       fraction)
    return KernelEstimate(S, fraction, delocalized)


# ---------------------------------------------------------------------------
# Per-mode decay oracle
# ---------------------------------------------------------------------------

def _continuum_rate(k: float, T: float) -> float:
    """-a'(0) for a'' = k^2 a, a(0) = 1, a'(T) = 0 by collocation."""
    t = np.linspace(0.0, T, 64)
    guess = np.vstack([np.exp(-k * t), -k * np.exp(-k * t)])
    sol = solve_bvp(lambda _, y: np.vstack([y[1], k * k * y[0]]),
                    lambda ya, yb: np.array([ya[0] - 1.0, yb[1]]),
                    t, guess, tol=BVP_TOL, max_nodes=200000)
    if not sol.success:
        raise ConvergenceError(f"mode boundary problem failed for |k|={k:.4g}: {sol.message}")
    return float(-sol.sol(0.0)[1])


def lattice_mode_action(mu: float, n_t: Optional[int]) -> float:
    """
    Minimal action of one unit-amplitude lattice mode with eigenvalue mu.

    The discrete time profile c_t (c_0 = 1) solves
    -c_{t-1} + (2 + mu) c_t - c_{t+1} = 0 inside and
    -c_{T-1} + (1 + mu/2) c_T = 0 on the free end; the first and last
    magnetic terms carry weight 1/2.  n_t = None means an infinite extent.
    """
    if mu <= 0:
        return 0.0
    if n_t is None:
        r = 1.0 + 0.5 * mu - np.sqrt(mu + 0.25 * mu * mu)
        return 0.5 * (1.0 - r) / (1.0 + r) + 0.5 * mu * (1.0 / (1.0 - r * r) - 0.5)
    T = n_t - 1
    bands = np.zeros((3, T))
    bands[0, 1:] = -1.0
    bands[1, :] = 2.0 + mu
    bands[1, -1] = 1.0 + 0.5 * mu
    bands[2, :-1] = -1.0
    rhs = np.zeros(T)
    rhs[0] = 1.0
    c = np.concatenate([[1.0], solve_banded((1, 1), bands, rhs)])
    w = np.ones(T + 1)
    w[0] = w[-1] = 0.5
    return 0.5 * float(np.sum(np.diff(c) ** 2)) + 0.5 * mu * float(np.dot(w, c ** 2))


def _per_distinct(values: np.ndarray, func) -> np.ndarray:
    keys, inverse = np.unique(np.round(values, 12), return_inverse=True)
    return np.array([func(float(v)) for v in keys])[inverse].reshape(values.shape)


def abelian_mode_oracle(A: VectorFieldGrid, n_t: Optional[int] = None,
                        lattice: bool = False) -> float:
    """
    Principal functional of a boundary field from decoupled transverse modes.

    Args:
        A: Boundary field (for lattice data, A_i = log U_i / a on the links)
        n_t: Time sites of the half-space (None = infinite)
        lattice: Use the lattice dispersion and discrete time instead of
            the continuum decay exp(-|k| t)

    Returns:
        S in the same normalization as wheeler_S_spectral
    """
    if n_t is not None and n_t < 2:
        raise InvalidArgumentError(f"n_t must be >= 2, got {n_t}")
    a = A.a
    N = A.N
    if not lattice:
        if n_t is None:
            return wheeler_S_spectral(A)
        T = (n_t - 1) * a
        transverse = transverse_project(A)
        knorm = np.linalg.norm(wavevectors(N, a), axis=-1)
        power = np.sum(np.abs(transverse.spectrum) ** 2, axis=-1)
        excited = (power > 0) & (knorm > 0)
        if not excited.any():
            return 0.0
        rate = _per_distinct(knorm[excited], lambda k: _continuum_rate(k, T))
        return 0.5 * _weight(N, a) * float(np.sum(rate * power[excited]))

    theta = a * A.spectral()
    k = wavevectors(N, a)
    d = np.exp(1j * k * a) - 1.0
    mu = np.sum(np.abs(d) ** 2, axis=-1)
    safe = np.where(mu > 0, mu, 1.0)
    longitudinal = d * (np.sum(np.conj(d) * theta, axis=-1) / safe)[..., None]
    transverse = np.where((mu > 0)[..., None], theta - longitudinal, 0.0)
    sigma = _per_distinct(mu, lambda m: 2.0 * lattice_mode_action(m, n_t))
    power = np.sum(np.abs(transverse) ** 2, axis=-1)
    return float(np.sum(0.5 * sigma * power)) / N ** 3


# ---------------------------------------------------------------------------
# Boost and translation identities
# ---------------------------------------------------------------------------

def boost_identity_check(A: VectorFieldGrid, axis: int,
                         curl_method: str = "central4") -> BoostCheck:
    """
    Compare sum x^i |dS/dA|^2 a^3 with sum x^i |curl A|^2 a^3.

    The gap is relative to sum |x^i| |B|^2 a^3.
    """
    if axis not in (0, 1, 2):
        raise InvalidArgumentError(f"axis must be 0, 1 or 2, got {axis}")
    x = coordinates(A.N, A.a)[..., axis]
    dS = functional_derivative(A).components
    B = curl(A, curl_method)
    B2 = np.sum(B ** 2, axis=-1)
    vol = A.a ** 3
    lhs = vol * float(np.sum(x * np.sum(dS ** 2, axis=-1)))
    rhs = vol * float(np.sum(x * B2))
    scale = vol * float(np.sum(np.abs(x) * B2))
    fraction = wrap_fraction(B2)
    delocalized = fraction > DELOCALIZED_FRACTION
    if delocalized:
        logger.warning("boost moments of a delocalized field (%.2e near the wrap)", fraction)
    gap = abs(lhs - rhs) / max(scale, 1e-15)
    return BoostCheck(axis, lhs, rhs, gap, delocalized)


def translation_generator(A: VectorFieldGrid) -> np.ndarray:
    """a^3 sum dS/dA . d_i A for i = 1, 2, 3 (zero for a translation-invariant S)."""
    dS = functional_derivative(A).components
    spectrum = A.spectral()
    k = wavevectors(A.N, A.a)
    out = np.zeros(3)
    for i in range(3):
        dA = fft.ifftn(1j * k[..., i:i + 1] * spectrum, axes=(0, 1, 2)).real
        out[i] = A.a ** 3 * float(np.sum(dS * dA))
    return out


def mode_scale(A: VectorFieldGrid) -> float:
    """1/2 (a^3 / N^3) sum |k| |A(k)|^2 without the transverse projection."""
    knorm = np.linalg.norm(wavevectors(A.N, A.a), axis=-1)
    power = np.sum(np.abs(A.spectral()) ** 2, axis=-1)
    return 0.5 * _weight(A.N, A.a) * float(np.sum(knorm * power))


def spectral_kernel_gap(A: VectorFieldGrid, workers: Optional[int] = None) -> dict:
    """
    Both forms of S and their relative gap.

    A field whose transverse part carries less than PURE_GAUGE_FRACTION of
    mode_scale is flagged pure_gauge; its gap is the larger S over that scale.
    """
    spectral = wheeler_S_spectral(A)
    kernel = wheeler_S_kernel(A, workers)
    scale = mode_scale(A)
    pure_gauge = spectral <= PURE_GAUGE_FRACTION * scale
    if pure_gauge:
        gap = max(spectral, abs(kernel.S)) / max(scale, EPS_FLOOR)
    else:
        gap = relative_gap(kernel.S, spectral)
    return {
        'S_spectral': spectral,
        'S_kernel': kernel.S,
        'rel_gap': gap,
        'pure_gauge': bool(pure_gauge),
        'delocalized': kernel.delocalized,
        'wrap_fraction': kernel.wrap_fraction,
    }
