"""
Periodic vector fields on an N^3 grid.

Components are stored as an array of shape (N, N, N, 3).  The discrete
Fourier convention is forward unnormalized and inverse 1/N^3 (scipy.fft
defaults), with wavevectors k = 2 pi fftfreq(N, d=a).  Coordinates are
measured from the grid centroid: x^i = (j - (N - 1)/2) a.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft

from ..core.errors import (InvalidArgumentError, MagicMismatchError, TruncatedFileError)
from ..core.lie import GroupKind
from ..lattice.field import BoundaryData


logger = logging.getLogger(__name__)

FILE_TAG = "ymground-vector-field"
CURL_METHODS = ("central4", "spectral")
# fraction of the box next to each face treated as the periodic wrap
WRAP_BAND = 0.1


@dataclass(frozen=True, eq=False)
class VectorFieldGrid:
    """Real vector field A_i(x) on a periodic cubic grid."""
    components: np.ndarray  # (N, N, N, 3)
    a: float = 1.0

    def __post_init__(self):
        comps = np.array(self.components, dtype=float)
        if comps.ndim != 4 or comps.shape[3] != 3 or len(set(comps.shape[:3])) != 1:
            raise InvalidArgumentError(f"vector field needs shape (N, N, N, 3), got {comps.shape}")
        if not np.all(np.isfinite(comps)):
            raise InvalidArgumentError("vector field must be finite")
        if not self.a > 0:
            raise InvalidArgumentError(f"grid spacing must be positive, got {self.a}")
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, N: int, a: float = 1.0) -> "VectorFieldGrid":
        return cls(np.zeros((N, N, N, 3)), a)

    @property
    def N(self) -> int:
        return self.components.shape[0]

    def spectral(self, workers: Optional[int] = None) -> np.ndarray:
        """Unnormalized DFT of each component, shape (N, N, N, 3)."""
        return fft.fftn(self.components, axes=(0, 1, 2), workers=workers)

    @classmethod
    def from_spectral(cls, spectrum: np.ndarray, a: float,
                      workers: Optional[int] = None) -> "VectorFieldGrid":
        return cls(fft.ifftn(spectrum, axes=(0, 1, 2), workers=workers).real, a)

    def __add__(self, other: "VectorFieldGrid") -> "VectorFieldGrid":
        if other.components.shape != self.components.shape or other.a != self.a:
            raise InvalidArgumentError("cannot add fields on different grids")
        return VectorFieldGrid(self.components + other.components, self.a)

    def scaled(self, factor: float) -> "VectorFieldGrid":
        return VectorFieldGrid(factor * self.components, self.a)


@dataclass(frozen=True, eq=False)
class TransverseField:
    """Spectral components with k . A(k) = 0 on every nonzero mode."""
    spectrum: np.ndarray  # (N, N, N, 3) complex
    a: float

    def to_grid(self) -> VectorFieldGrid:
        return VectorFieldGrid.from_spectral(self.spectrum, self.a)

    def max_longitudinal(self) -> float:
        """Largest |k.A(k)| / (|k| |A(k)|) over nonzero modes with content."""
        k = wavevectors(self.spectrum.shape[0], self.a)
        knorm = np.linalg.norm(k, axis=-1)
        anorm = np.linalg.norm(self.spectrum, axis=-1)
        dot = np.abs(np.sum(k * self.spectrum, axis=-1))
        keep = (knorm > 0) & (anorm > 1e-300)
        if not np.any(keep):
            return 0.0
        return float(np.max(dot[keep] / (knorm[keep] * anorm[keep])))


# ---------------------------------------------------------------------------
# Grid geometry
# ---------------------------------------------------------------------------

def wavevectors(N: int, a: float) -> np.ndarray:
    """k vectors of the DFT modes, shape (N, N, N, 3)."""
    k1 = 2.0 * np.pi * fft.fftfreq(N, d=a)
    return np.stack(np.meshgrid(k1, k1, k1, indexing="ij"), axis=-1)


def coordinates(N: int, a: float) -> np.ndarray:
    """Centroid-relative site coordinates, shape (N, N, N, 3)."""
    x1 = (np.arange(N) - (N - 1) / 2.0) * a
    return np.stack(np.meshgrid(x1, x1, x1, indexing="ij"), axis=-1)


def _minimal_image(N: int, a: float, center: Optional[Sequence[float]]) -> np.ndarray:
    box = N * a
    c = np.full(3, (N - 1) / 2.0 * a) if center is None else np.asarray(center, dtype=float)
    grid = np.arange(N) * a
    disp = np.stack(np.meshgrid(grid, grid, grid, indexing="ij"), axis=-1) - c
    return disp - box * np.round(disp / box)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def transverse_project(A: VectorFieldGrid) -> TransverseField:
    """Remove k (k.A)/|k|^2 from every nonzero mode."""
    spectrum = A.spectral()
    k = wavevectors(A.N, A.a)
    k2 = np.sum(k ** 2, axis=-1)
    safe = np.where(k2 > 0, k2, 1.0)
    longitudinal = k * (np.sum(k * spectrum, axis=-1) / safe)[..., None]
    longitudinal[k2 == 0] = 0.0
    return TransverseField(spectrum - longitudinal, A.a)


def _derivative(f: np.ndarray, axis: int, a: float) -> np.ndarray:
    """Fourth-order central difference along a periodic axis."""
    return (-np.roll(f, -2, axis) + 8.0 * np.roll(f, -1, axis)
            - 8.0 * np.roll(f, 1, axis) + np.roll(f, 2, axis)) / (12.0 * a)


def curl(A: VectorFieldGrid, method: str = "central4") -> np.ndarray:
    """
    B = curl A, shape (N, N, N, 3).

    Args:
        A: Vector field
        method: "central4" (fourth-order differences) or "spectral" (i k x A)
    """
    if method == "spectral":
        spectrum = A.spectral()
        k = wavevectors(A.N, A.a)
        return fft.ifftn(1j * np.cross(k, spectrum), axes=(0, 1, 2)).real
    if method != "central4":
        raise InvalidArgumentError(f"unknown curl method {method!r}")
    c = A.components
    d = lambda comp, axis: _derivative(c[..., comp], axis, A.a)
    return np.stack([
        d(2, 1) - d(1, 2),
        d(0, 2) - d(2, 0),
        d(1, 0) - d(0, 1),
    ], axis=-1)


def spectral_gradient(f: np.ndarray, a: float) -> np.ndarray:
    """Gradient of a scalar grid via i k, shape (N, N, N, 3)."""
    N = f.shape[0]
    k = wavevectors(N, a)
    f_hat = fft.fftn(f)
    return np.stack([fft.ifftn(1j * k[..., i] * f_hat).real for i in range(3)], axis=-1)


def wrap_fraction(density: np.ndarray) -> float:
    """Share of a non-negative site density lying within 10% of a box face."""
    N = density.shape[0]
    band = max(1, int(np.ceil(WRAP_BAND * N)))
    idx = np.arange(N)
    near = (idx < band) | (idx >= N - band)
    mask = near[:, None, None] | near[None, :, None] | near[None, None, :]
    total = float(np.sum(density))
    return float(np.sum(density[mask]) / total) if total > 0 else 0.0


def reflect(A: VectorFieldGrid, axis: int) -> VectorFieldGrid:
    """Mirror image x^axis -> -x^axis about the grid centroid."""
    if axis not in (0, 1, 2):
        raise InvalidArgumentError(f"axis must be 0, 1 or 2, got {axis}")
    comps = np.flip(A.components, axis=axis).copy()
    comps[..., axis] *= -1.0
    return VectorFieldGrid(comps, A.a)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def localized_transverse_field(N: int, a: float = 1.0,
                               center: Optional[Sequence[float]] = None,
                               width: float = 3.0, amplitude: float = 1.0,
                               seed: int = 0) -> VectorFieldGrid:
    """
    A = grad(g) x c for a Gaussian g and a seeded random vector c.

    The field is the curl of g c, so it is transverse up to sampling.

    Args:
        N: Sites per dimension
        a: Grid spacing
        center: Bump centre in length units (defaults to the grid centroid)
        width: Gaussian width in length units
        amplitude: Overall scale
        seed: Seed for c
    """
    if width <= 0:
        raise InvalidArgumentError(f"width must be positive, got {width}")
    rng = np.random.RandomState(seed)
    c = rng.standard_normal(3)
    disp = _minimal_image(N, a, center)
    g = np.exp(-0.5 * np.sum(disp ** 2, axis=-1) / width ** 2)
    grad_g = -disp * (g / width ** 2)[..., None]
    return VectorFieldGrid(amplitude * width * np.cross(grad_g, c), a)


def gradient_field(N: int, a: float = 1.0, width: float = 3.0,
                   amplitude: float = 1.0,
                   center: Optional[Sequence[float]] = None) -> VectorFieldGrid:
    """Pure gauge A = grad(phi) of a Gaussian phi, taken spectrally."""
    disp = _minimal_image(N, a, center)
    phi = amplitude * width * np.exp(-0.5 * np.sum(disp ** 2, axis=-1) / width ** 2)
    return VectorFieldGrid(spectral_gradient(phi, a), a)


def single_mode_field(N: int, a: float, mode: Tuple[int, int, int],
                      amplitude: float, polarization: int) -> VectorFieldGrid:
    """A_pol = amplitude cos(k.x) with k = 2 pi mode / (N a), pol in {1, 2, 3}."""
    pol = int(polarization) - 1
    if not 0 <= pol < 3:
        raise InvalidArgumentError(f"polarization must be 1, 2 or 3, got {polarization}")
    if int(mode[pol]) != 0:
        raise InvalidArgumentError("polarization must be transverse to the wave vector")
    j = np.stack(np.meshgrid(*(np.arange(N),) * 3, indexing="ij"), axis=-1)
    phase = 2.0 * np.pi * np.tensordot(j, np.asarray(mode, dtype=float), axes=([-1], [0])) / N
    comps = np.zeros((N, N, N, 3))
    comps[..., pol] = amplitude * np.cos(phase)
    return VectorFieldGrid(comps, a)


# ---------------------------------------------------------------------------
# Lattice conversion
# ---------------------------------------------------------------------------

def from_boundary(bd: BoundaryData) -> VectorFieldGrid:
    """A_i = log U_i / a of a U(1) datum on a cubic slice."""
    if bd.kind is not GroupKind.U1:
        raise InvalidArgumentError("only U(1) data map to a single vector field")
    return VectorFieldGrid(bd.logs()[..., 0] / bd.a, bd.a)


def to_boundary(A: VectorFieldGrid) -> BoundaryData:
    """U(1) datum with link phases a A_i."""
    return BoundaryData(GroupKind.U1, (A.a * A.components)[..., None], A.a)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_vector_field(A: VectorFieldGrid, path: Union[str, Path]) -> Path:
    """One text header line then the components as little-endian f64."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"{FILE_TAG} N={A.N} a={A.a!r}\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(A.components, dtype="<f8").tobytes())
    logger.info("saved %d^3 vector field to %s", A.N, path)
    return path


def load_vector_field(path: Union[str, Path]) -> VectorFieldGrid:
    blob = Path(path).read_bytes()
    end = blob.find(b"\n")
    if end < 0 or not blob.startswith(FILE_TAG.encode("ascii")):
        raise MagicMismatchError(f"{path} is not a vector field file")
    fields = dict(item.split("=", 1) for item in blob[:end].decode("ascii").split()[1:])
    N, a = int(fields["N"]), float(fields["a"])
    payload = blob[end + 1:]
    expected = N ** 3 * 3 * 8
    if len(payload) < expected:
        raise TruncatedFileError(f"expected {expected} payload bytes, found {len(payload)}")
    comps = np.frombuffer(payload[:expected], dtype="<f8").reshape(N, N, N, 3)
    return VectorFieldGrid(comps, a)
