"""
Spatial (Coulomb-type) gauge fixing of time slices.

The functional 1/2 sum |log U_i(x)|^2 is minimized over slice gauge
transformations by checkerboard successive overrelaxation.  Its stationary
points are exactly the slices with vanishing log divergence

    D(x) = sum_i [log U_i(x) - log U_i(x - i)].

A site update g(x) = exp(omega D(x) / 6) removes the local divergence to
first order; all sites of one colour touch disjoint links and are updated
together.
"""

import logging
from typing import Tuple, Union

import numpy as np

from ..core import lie
from ..core.errors import ConvergenceError, InvalidArgumentError
from ..lattice.field import BoundaryData, GaugeField, gauge_transform


logger = logging.getLogger(__name__)

DIVERGENCE_TOL = 1e-8
MAX_SWEEPS = 5000


def log_divergence(bd: BoundaryData) -> np.ndarray:
    """sum_i (A_i(x) - A_i(x - i)) / a with A = log U / a, shape (n_x, n_y, n_z, dim)."""
    logs = bd.logs()
    div = np.zeros(logs.shape[:3] + logs.shape[4:])
    for i in range(3):
        div += logs[..., i, :] - np.roll(logs[..., i, :], 1, axis=i)
    return div / bd.a ** 2


def _parity(shape) -> np.ndarray:
    grids = np.meshgrid(*(np.arange(n) for n in shape), indexing="ij")
    return (grids[0] + grids[1] + grids[2]) % 2


def _fix_slice(bd: BoundaryData, tol: float, max_sweeps: int,
               omega: float) -> Tuple[BoundaryData, np.ndarray]:
    kind = bd.kind
    shape = bd.spatial_shape
    if any(n % 2 for n in shape):
        raise InvalidArgumentError(f"checkerboard gauge fixing needs even extents, got {shape}")
    if omega is None:
        omega = 2.0 / (1.0 + np.sin(2.0 * np.pi / max(shape)))
    parity = _parity(shape)
    g_total = lie.identity_array(kind, shape)
    current = bd

    for sweep in range(max_sweeps):
        div = log_divergence(current)
        residual = float(np.max(np.abs(div))) if div.size else 0.0
        if residual <= tol:
            logger.debug("gauge fixed after %d sweeps (|div|=%.3e)", sweep, residual)
            return current, g_total
        for colour in (0, 1):
            div = log_divergence(current) * bd.a ** 2
            coeffs = np.where((parity == colour)[..., None], omega * div / 6.0, 0.0)
            g = lie.exp_array(kind, coeffs)
            current = current.gauge_transform(g)
            g_total = lie.reunitarize(kind, lie.multiply(kind, g_total, g))
    residual = float(np.max(np.abs(log_divergence(current))))
    raise ConvergenceError(f"gauge fixing stalled at |div|={residual:.3e} after {max_sweeps} sweeps")


def fix_spatial_gauge(data: Union[BoundaryData, GaugeField],
                      tol: float = DIVERGENCE_TOL,
                      max_sweeps: int = MAX_SWEEPS,
                      omega: float = None):
    """
    Bring a slice (or every slice of a field) to vanishing log divergence.

    Args:
        data: BoundaryData slice or GaugeField
        tol: Sup-norm tolerance on the divergence (continuum units)
        max_sweeps: Sweep limit before ConvergenceError
        omega: Overrelaxation parameter (default 2 / (1 + sin(2 pi / N)))

    Returns:
        (fixed copy, g) where g has the slice shape for BoundaryData and
        shape (n_t, n_x, n_y, n_z, width) for a GaugeField
    """
    if isinstance(data, BoundaryData):
        return _fix_slice(data, tol, max_sweeps, omega)
    if not isinstance(data, GaugeField):
        raise InvalidArgumentError(f"cannot gauge fix {type(data).__name__}")

    geom = data.geometry
    g_full = np.empty(geom.shape + (lie.group_width(data.kind),))
    for t in range(geom.n_t):
        slice_bd = BoundaryData(data.kind, data.links[t, :, :, :, 1:, :], geom.a)
        _, g_full[t] = _fix_slice(slice_bd, tol, max_sweeps, omega)
    return gauge_transform(data, g_full), g_full
