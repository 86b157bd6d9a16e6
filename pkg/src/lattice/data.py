"""
Seeded generators for Dirichlet data on the t = 0 slice.
"""

from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core import lie
from ..core.errors import InvalidArgumentError
from ..core.lie import GroupKind
from .field import BoundaryData
from .field_io import load_field
from .geometry import LatticeGeometry


def flat_boundary(geometry: LatticeGeometry, kind: GroupKind) -> BoundaryData:
    """All links identity."""
    return BoundaryData(kind, lie.identity_array(kind, geometry.spatial_shape + (3,)), geometry.a)


def _site_coordinates(geometry: LatticeGeometry) -> np.ndarray:
    grids = np.meshgrid(*(np.arange(n) for n in geometry.spatial_shape), indexing="ij")
    return np.stack(grids, axis=-1).astype(float)


def _algebra_direction(kind: GroupKind, direction: Optional[Sequence[float]]) -> np.ndarray:
    if kind is GroupKind.U1:
        return np.ones(1)
    vec = np.array([1.0, 0.0, 0.0] if direction is None else direction, dtype=float)
    norm = np.linalg.norm(vec)
    if vec.shape != (3,) or norm == 0:
        raise InvalidArgumentError(f"invalid su(2) direction {direction}")
    return vec / norm


def single_mode_boundary(geometry: LatticeGeometry, kind: GroupKind,
                         mode: Tuple[int, int, int],
                         amplitude: float,
                         polarization: int,
                         algebra_direction: Optional[Sequence[float]] = None) -> BoundaryData:
    """
    Links exp(a * alpha * cos(k.x) T) along one polarization direction.

    Args:
        geometry: Lattice geometry
        kind: Structure group
        mode: Integer wave numbers (m_x, m_y, m_z); k_j = 2 pi m_j / (n_j a)
        amplitude: Field amplitude alpha in continuum units
        polarization: Spatial direction in {1, 2, 3} carrying the field;
            must be orthogonal to the wave vector
        algebra_direction: su(2) direction of the field (ignored for U(1))

    Returns:
        Boundary data
    """
    mode = tuple(int(m) for m in mode)
    if len(mode) != 3:
        raise InvalidArgumentError(f"mode needs 3 integers, got {mode}")
    pol = int(polarization) - 1
    if not 0 <= pol < 3:
        raise InvalidArgumentError(f"polarization must be 1, 2 or 3, got {polarization}")
    if mode[pol] != 0:
        raise InvalidArgumentError("polarization must be transverse to the wave vector")

    coords = _site_coordinates(geometry)
    phase = sum(2.0 * np.pi * mode[j] * coords[..., j] / geometry.spatial_shape[j] for j in range(3))
    profile = geometry.a * amplitude * np.cos(phase)
    coeffs = np.zeros(geometry.spatial_shape + (3, lie.algebra_dim(kind)))
    coeffs[..., pol, :] = profile[..., None] * _algebra_direction(kind, algebra_direction)
    return BoundaryData(kind, lie.exp_array(kind, coeffs), geometry.a)


def localized_bump_boundary(geometry: LatticeGeometry, kind: GroupKind,
                            center: Optional[Sequence[float]] = None,
                            width: float = 1.5,
                            amplitude: float = 0.05,
                            seed: int = 0) -> BoundaryData:
    """
    Gaussian bump of random algebra orientation per spatial direction.

    Args:
        geometry: Lattice geometry
        kind: Structure group
        center: Bump centre in site units (defaults to the slice centre)
        width: Gaussian width in site units
        amplitude: Peak link-log magnitude
        seed: Seed for the orientations

    Returns:
        Boundary data
    """
    if width <= 0:
        raise InvalidArgumentError(f"width must be positive, got {width}")
    rng = np.random.RandomState(seed)
    shape = np.array(geometry.spatial_shape, dtype=float)
    c = shape / 2.0 if center is None else np.asarray(center, dtype=float)
    disp = _site_coordinates(geometry) - c
    disp -= shape * np.round(disp / shape)  # minimal image
    bump = np.exp(-0.5 * np.sum(disp ** 2, axis=-1) / width ** 2)

    dim = lie.algebra_dim(kind)
    orient = rng.standard_normal((3, dim))
    orient /= np.max(np.abs(orient))
    coeffs = amplitude * bump[..., None, None] * orient
    return BoundaryData(kind, lie.exp_array(kind, coeffs), geometry.a)


def random_small_boundary(geometry: LatticeGeometry, kind: GroupKind,
                          scale: float = 0.05, seed: int = 0) -> BoundaryData:
    """Independent links exp(X) with every log coefficient bounded by scale."""
    rng = np.random.RandomState(seed)
    dim = lie.algebra_dim(kind)
    coeffs = rng.uniform(-1.0, 1.0, geometry.spatial_shape + (3, dim))
    norms = np.linalg.norm(coeffs, axis=-1, keepdims=True)
    coeffs = scale * coeffs / np.maximum(norms, 1.0)
    return BoundaryData(kind, lie.exp_array(kind, coeffs), geometry.a)


def random_slice_gauge(geometry: LatticeGeometry, kind: GroupKind, seed: int,
                       scale: Optional[float] = None) -> np.ndarray:
    """Seeded slice gauge transformation g(x), Haar-random unless scale is given."""
    rng = np.random.RandomState(seed)
    return lie.random_group(kind, geometry.spatial_shape, rng, scale=scale)


DATUM_KINDS = ("flat", "single_mode", "localized_bump", "random_small", "file")


@dataclass(frozen=True)
class DatumSpec:
    """Named recipe for Dirichlet data, as read from a run configuration."""
    kind: str = "single_mode"
    mode: Tuple[int, int, int] = (1, 0, 0)
    amplitude: float = 0.05
    polarization: int = 2
    center: Optional[Tuple[float, float, float]] = None
    width: float = 1.5
    seed: int = 0
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in DATUM_KINDS:
            raise InvalidArgumentError(f"unknown datum kind {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise InvalidArgumentError("file datum needs a path")

    def build(self, geometry: LatticeGeometry, kind: GroupKind) -> BoundaryData:
        """Materialize the datum on a geometry."""
        if self.kind == "flat":
            return flat_boundary(geometry, kind)
        if self.kind == "single_mode":
            return single_mode_boundary(geometry, kind, self.mode, self.amplitude, self.polarization)
        if self.kind == "localized_bump":
            return localized_bump_boundary(geometry, kind, self.center, self.width,
                                           self.amplitude, self.seed)
        if self.kind == "random_small":
            return random_small_boundary(geometry, kind, self.amplitude, self.seed)
        bd = load_field(self.path).boundary()
        if bd.kind is not kind:
            raise InvalidArgumentError(f"{self.path} holds {bd.kind.value} data, not {kind.value}")
        bd.require_compatible(geometry)
        return bd

    def to_dict(self) -> dict:
        return asdict(self)
