"""
Structure group arithmetic for U(1) and SU(2).

SU(2) elements are stored as unit quaternions q = (w, x, y, z) standing for
the matrix U = w*I + i*(x*sigma_1 + y*sigma_2 + z*sigma_3).  Algebra
elements are coefficient vectors in the basis T_a = -i*sigma_a/2, so that
inner(T_a, T_b) = delta_ab with inner(X, Y) = -2 tr(XY).

U(1) elements are stored as a phase theta (the group element is
exp(i*theta)) and algebra elements as the real rate x of i*x.

Two layers are provided: array functions that act on a trailing component
axis (used by the lattice code) and small immutable value types for single
elements.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Optional

import numpy as np

from .errors import BranchCutError, InvalidArgumentError


BRANCH_GUARD = 1e-9

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

# T_a = -i sigma_a / 2
SU2_BASIS = -0.5j * PAULI


class GroupKind(str, Enum):
    """Supported structure groups."""
    U1 = "u1"
    SU2 = "su2"

    @property
    def code(self) -> int:
        """Integer tag used by the field file format."""
        return 0 if self is GroupKind.U1 else 1

    @classmethod
    def from_code(cls, code: int) -> "GroupKind":
        if code == 0:
            return cls.U1
        if code == 1:
            return cls.SU2
        raise InvalidArgumentError(f"unknown group code {code}")

    @classmethod
    def parse(cls, value) -> "GroupKind":
        if isinstance(value, GroupKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgumentError(f"unknown group kind {value!r}") from None


def group_width(kind: GroupKind) -> int:
    """Number of reals per group element."""
    return 4 if kind is GroupKind.SU2 else 1


def algebra_dim(kind: GroupKind) -> int:
    """Number of reals per algebra element."""
    return 3 if kind is GroupKind.SU2 else 1


def wrap_phase(theta: np.ndarray) -> np.ndarray:
    """Map phases into (-pi, pi]."""
    wrapped = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


# ---------------------------------------------------------------------------
# Quaternion kernels
# ---------------------------------------------------------------------------

def _qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a0, av = a[..., :1], a[..., 1:]
    b0, bv = b[..., :1], b[..., 1:]
    scalar = a0 * b0 - np.sum(av * bv, axis=-1, keepdims=True)
    vector = a0 * bv + b0 * av - np.cross(av, bv)
    return np.concatenate([scalar, vector], axis=-1)


def _qconj(a: np.ndarray) -> np.ndarray:
    out = -a
    out[..., 0] = a[..., 0]
    return out


# ---------------------------------------------------------------------------
# Array layer
# ---------------------------------------------------------------------------

def identity_array(kind: GroupKind, shape: Tuple[int, ...]) -> np.ndarray:
    """Array of identity elements with the given leading shape."""
    out = np.zeros(tuple(shape) + (group_width(kind),))
    if kind is GroupKind.SU2:
        out[..., 0] = 1.0
    return out


def multiply(kind: GroupKind, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise group product a*b."""
    if kind is GroupKind.SU2:
        return _qmul(a, b)
    return a + b


def inverse(kind: GroupKind, a: np.ndarray) -> np.ndarray:
    """Elementwise group inverse."""
    if kind is GroupKind.SU2:
        return _qconj(a)
    return -a


def reunitarize(kind: GroupKind, a: np.ndarray) -> np.ndarray:
    """Remove arithmetic drift: normalize quaternions, wrap phases."""
    if kind is GroupKind.SU2:
        return a / np.linalg.norm(a, axis=-1, keepdims=True)
    return wrap_phase(a)


def exp_array(kind: GroupKind, coeffs: np.ndarray) -> np.ndarray:
    """Exponential map on coefficient arrays (Rodrigues form for SU(2))."""
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise InvalidArgumentError("exp_map of non-finite algebra element")
    if kind is GroupKind.U1:
        return coeffs.copy()
    half = 0.5 * np.linalg.norm(coeffs, axis=-1, keepdims=True)
    # np.sinc(x) = sin(pi x)/(pi x)
    vector = -0.5 * coeffs * np.sinc(half / np.pi)
    return np.concatenate([np.cos(half), vector], axis=-1)


def log_array(kind: GroupKind, group: np.ndarray) -> np.ndarray:
    """Principal logarithm on group arrays; raises near the branch cut."""
    group = np.asarray(group, dtype=float)
    if kind is GroupKind.U1:
        if np.any(np.cos(group) <= -1.0 + BRANCH_GUARD):
            raise BranchCutError("U(1) phase at the branch cut (pi)")
        return wrap_phase(group)

    w = group[..., :1]
    v = group[..., 1:]
    if np.any(w <= -1.0 + BRANCH_GUARD):
        raise BranchCutError("SU(2) element with tr(U)/2 near -1")
    vnorm = np.linalg.norm(v, axis=-1, keepdims=True)
    angle = np.arctan2(vnorm, w)
    small = vnorm < 1e-300
    factor = np.where(small, 1.0, angle / np.where(small, 1.0, vnorm))
    return -2.0 * factor * v


def adjoint_inverse(kind: GroupKind, g: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Return g^{-1} X g for coefficient arrays X."""
    if kind is GroupKind.U1:
        return np.array(coeffs, dtype=float, copy=True)
    pure = np.concatenate([np.zeros(coeffs.shape[:-1] + (1,)), -0.5 * coeffs], axis=-1)
    rotated = _qmul(_qmul(_qconj(g), pure), g)
    return -2.0 * rotated[..., 1:]


def inner_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise trace inner product of coefficient arrays."""
    return np.sum(a * b, axis=-1)


def random_group(kind: GroupKind, shape: Tuple[int, ...],
                 rng: np.random.RandomState,
                 scale: Optional[float] = None) -> np.ndarray:
    """
    Draw random group elements.

    Args:
        kind: Structure group
        shape: Leading array shape
        rng: Seeded random state
        scale: If given, elements are exp of Gaussian algebra coefficients with
            this standard deviation; otherwise Haar-uniform.

    Returns:
        Group array of shape ``shape + (width,)``
    """
    shape = tuple(shape)
    if scale is not None:
        return exp_array(kind, scale * rng.standard_normal(shape + (algebra_dim(kind),)))
    if kind is GroupKind.U1:
        return rng.uniform(-np.pi, np.pi, size=shape + (1,))
    q = rng.standard_normal(shape + (4,))
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def to_matrix(kind: GroupKind, group: np.ndarray) -> np.ndarray:
    """Matrix view of a group array (2x2 for SU(2), 1x1 for U(1))."""
    if kind is GroupKind.U1:
        return np.exp(1j * group)[..., None]
    w, x, y, z = (group[..., i] for i in range(4))
    out = np.empty(group.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = w + 1j * z
    out[..., 0, 1] = 1j * x + y
    out[..., 1, 0] = 1j * x - y
    out[..., 1, 1] = w - 1j * z
    return out


def algebra_matrix(kind: GroupKind, coeffs: np.ndarray) -> np.ndarray:
    """Matrix view of an algebra array."""
    if kind is GroupKind.U1:
        return (1j * coeffs)[..., None]
    return np.einsum("...a,aij->...ij", coeffs.astype(complex), SU2_BASIS)


# ---------------------------------------------------------------------------
# Value layer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlgebraElement:
    """Element of u(1) or su(2), stored as basis coefficients."""
    kind: GroupKind
    coeffs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.coeffs) != algebra_dim(self.kind):
            raise InvalidArgumentError(
                f"{self.kind.value} algebra element needs {algebra_dim(self.kind)} coefficients"
            )

    @classmethod
    def from_array(cls, kind: GroupKind, arr) -> "AlgebraElement":
        return cls(kind, tuple(float(c) for c in np.ravel(arr)))

    @classmethod
    def zero(cls, kind: GroupKind) -> "AlgebraElement":
        return cls(kind, (0.0,) * algebra_dim(kind))

    @classmethod
    def basis(cls, index: int) -> "AlgebraElement":
        """SU(2) basis element T_{index+1}."""
        coeffs = [0.0, 0.0, 0.0]
        coeffs[index] = 1.0
        return cls(GroupKind.SU2, tuple(coeffs))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)

    @property
    def matrix(self) -> np.ndarray:
        return algebra_matrix(self.kind, self.array)

    def __mul__(self, scalar: float) -> "AlgebraElement":
        return AlgebraElement.from_array(self.kind, scalar * self.array)

    __rmul__ = __mul__

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _check_kinds(self.kind, other.kind)
        return AlgebraElement.from_array(self.kind, self.array + other.array)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement.from_array(self.kind, -self.array)

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))


@dataclass(frozen=True)
class GroupElement:
    """Element of U(1) (phase) or SU(2) (unit quaternion)."""
    kind: GroupKind
    data: Tuple[float, ...]

    def __post_init__(self):
        if len(self.data) != group_width(self.kind):
            raise InvalidArgumentError(
                f"{self.kind.value} group element needs {group_width(self.kind)} reals"
            )

    @classmethod
    def from_array(cls, kind: GroupKind, arr) -> "GroupElement":
        return cls(kind, tuple(float(c) for c in np.ravel(arr)))

    @classmethod
    def identity(cls, kind: GroupKind) -> "GroupElement":
        return cls.from_array(kind, identity_array(kind, ()))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.data, dtype=float)

    @property
    def matrix(self) -> np.ndarray:
        return to_matrix(self.kind, self.array)

    @property
    def value(self) -> complex:
        """Unit-modulus complex number (U(1) only)."""
        if self.kind is not GroupKind.U1:
            raise InvalidArgumentError("value is defined for U(1) elements only")
        return complex(np.exp(1j * self.data[0]))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        _check_kinds(self.kind, other.kind)
        product = reunitarize(self.kind, multiply(self.kind, self.array, other.array))
        return GroupElement.from_array(self.kind, product)

    def inverse(self) -> "GroupElement":
        return GroupElement.from_array(self.kind, inverse(self.kind, self.array))

    def unitarity_defect(self) -> float:
        """||U^dagger U - I|| of the matrix view."""
        m = self.matrix
        return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))


def _check_kinds(a: GroupKind, b: GroupKind):
    if a is not b:
        raise InvalidArgumentError(f"group kind mismatch: {a.value} vs {b.value}")


def exp_map(X: AlgebraElement) -> GroupElement:
    """Exponential map, exactly unitary via the closed form."""
    return GroupElement.from_array(X.kind, exp_array(X.kind, X.array))


def log_map(U: GroupElement) -> AlgebraElement:
    """Principal logarithm; BranchCutError near tr(U) = -2."""
    return AlgebraElement.from_array(U.kind, log_array(U.kind, U.array))


def inner(X: AlgebraElement, Y: AlgebraElement) -> float:
    """Trace form -2 tr(XY) (SU(2)) or product of rates (U(1))."""
    _check_kinds(X.kind, Y.kind)
    return float(np.dot(X.array, Y.array))


def conjugate(g: GroupElement, X: AlgebraElement) -> AlgebraElement:
    """Adjoint action g^{-1} X g."""
    _check_kinds(g.kind, X.kind)
    return AlgebraElement.from_array(X.kind, adjoint_inverse(X.kind, g.array, X.array))


def project_algebra(M: np.ndarray) -> AlgebraElement:
    """
    Anti-hermitian traceless part of a 1x1 or 2x2 complex matrix.

    Args:
        M: Square complex matrix

    Returns:
        Algebra element of the matching group
    """
    M = np.asarray(M, dtype=complex)
    if M.shape == (1, 1):
        return AlgebraElement(GroupKind.U1, (float(M[0, 0].imag),))
    if M.shape != (2, 2):
        raise InvalidArgumentError(f"cannot project a matrix of shape {M.shape}")
    anti = 0.5 * (M - M.conj().T)
    anti = anti - 0.5 * np.trace(anti) * np.eye(2)
    coeffs = [-2.0 * np.trace(SU2_BASIS[a] @ anti).real for a in range(3)]
    return AlgebraElement(GroupKind.SU2, tuple(float(c) for c in coeffs))
