"""
Half-space lattice geometry.

The time axis is open: t = 0 carries the Dirichlet slice and t = (n_t-1)*a
the free boundary.  The three spatial axes are periodic.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.errors import InvalidArgumentError, BoundaryError


MIN_TIME_SITES = 4
MIN_SPATIAL_SITES = 4


@dataclass(frozen=True)
class LatticeGeometry:
    """Sites per direction and lattice spacing."""
    n_t: int
    n_x: int
    n_y: int
    n_z: int
    a: float = 1.0  # lattice spacing (length units)

    def __post_init__(self):
        if self.n_t < MIN_TIME_SITES:
            raise InvalidArgumentError(f"n_t must be >= {MIN_TIME_SITES}, got {self.n_t}")
        for name in ("n_x", "n_y", "n_z"):
            if getattr(self, name) < MIN_SPATIAL_SITES:
                raise InvalidArgumentError(
                    f"{name} must be >= {MIN_SPATIAL_SITES}, got {getattr(self, name)}"
                )
        if not (self.a > 0 and np.isfinite(self.a)):
            raise InvalidArgumentError(f"lattice spacing must be positive, got {self.a}")

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return (self.n_t, self.n_x, self.n_y, self.n_z)

    @property
    def spatial_shape(self) -> Tuple[int, int, int]:
        return (self.n_x, self.n_y, self.n_z)

    @property
    def num_sites(self) -> int:
        return int(np.prod(self.shape))

    @property
    def t_max(self) -> float:
        return (self.n_t - 1) * self.a

    def check_site(self, site: Tuple[int, int, int, int]) -> Tuple[int, int, int, int]:
        """Validate a site index; spatial components wrap, time does not."""
        if len(site) != 4:
            raise InvalidArgumentError(f"site needs 4 indices, got {site}")
        t = int(site[0])
        if not 0 <= t < self.n_t:
            raise BoundaryError(f"time index {t} outside [0, {self.n_t - 1}]")
        return (t,
                int(site[1]) % self.n_x,
                int(site[2]) % self.n_y,
                int(site[3]) % self.n_z)

    def to_list(self) -> list:
        return [self.n_t, self.n_x, self.n_y, self.n_z, float(self.a)]
