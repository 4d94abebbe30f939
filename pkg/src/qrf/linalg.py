"""Dense complex linear algebra used throughout the package.

Operators and states are plain ``numpy`` complex128 arrays. State vectors
may be passed either as 1-D arrays or as column matrices. Every constructor
rejects NaN/Inf, and every routine that creates a new matrix goes through a
size guard so an accidental exponential blow-up fails cleanly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, NormalizationError, SizeError, SpaceMismatchError, SymmetryError

DEFAULT_MAX_ENTRIES = 1 << 20
HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-10


def max_entries() -> int:
    """Current dimension guard, read from ``QRF_MAX_DIM`` at call time."""
    raw = os.environ.get("QRF_MAX_DIM")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_ENTRIES
    try:
        value = int(raw)
    except ValueError as exc:
        raise SizeError(f"QRF_MAX_DIM must be a positive integer, got {raw!r}") from exc
    if value <= 0:
        raise SizeError(f"QRF_MAX_DIM must be a positive integer, got {raw!r}")
    return value


def check_size(rows: int, cols: int) -> None:
    limit = max_entries()
    if rows * cols > limit:
        raise SizeError(
            f"a {rows}x{cols} matrix has {rows * cols} entries, above the limit of {limit} "
            "(raise QRF_MAX_DIM to allow it)"
        )


def as_matrix(x, *, copy: bool = False) -> np.ndarray:
    """Validate ``x`` as a finite complex matrix; 1-D input becomes a column."""
    arr = np.array(x, dtype=np.complex128, copy=copy) if copy else np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a matrix, got an array with {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("matrix entries must be finite")
    return arr


def as_vector(x) -> np.ndarray:
    """Validate ``x`` as a finite complex vector (1-D, or a single column)."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("vector entries must be finite")
    return arr


@dataclass(frozen=True)
class BipartitionShape:
    """Split of a vector space into left (slow index) and right factors."""

    dim_left: int
    dim_right: int

    def __post_init__(self):
        if self.dim_left < 1 or self.dim_right < 1:
            raise DimensionError("bipartition dimensions must be positive")

    @property
    def total(self) -> int:
        return self.dim_left * self.dim_right


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the slow index."""
    a = as_matrix(a)
    b = as_matrix(b)
    check_size(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    return np.kron(a, b)


def tensor_all(*factors) -> np.ndarray:
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = tensor_product(out, f)
    return out


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    return a @ b - b @ a


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and max_abs(a - a.conj().T) <= tol


def partial_trace(rho, shape: BipartitionShape, keep: str = "left") -> np.ndarray:
    """Reduced density matrix of ``rho`` on the ``keep`` side ("left" or "right")."""
    rho = as_matrix(rho)
    n = shape.total
    if rho.shape != (n, n):
        raise DimensionError(f"rho has shape {rho.shape}, expected {(n, n)} for {shape}")
    t = rho.reshape(shape.dim_left, shape.dim_right, shape.dim_left, shape.dim_right)
    if keep == "left":
        return np.einsum("ajbj->ab", t)
    if keep == "right":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"keep must be 'left' or 'right', got {keep!r}")


def schmidt_coefficients(psi, shape: BipartitionShape) -> np.ndarray:
    """Descending Schmidt coefficients of a unit vector across ``shape``."""
    v = as_vector(psi)
    if v.size != shape.total:
        raise DimensionError(f"vector of length {v.size} does not match {shape}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > NORM_TOL:
        raise NormalizationError(f"Schmidt decomposition needs a unit vector, norm is {norm:.3e}")
    return np.linalg.svd(v.reshape(shape.dim_left, shape.dim_right), compute_uv=False)


def entropy_from_schmidt(coeffs) -> float:
    """Entanglement entropy in nats, ``-sum l^2 ln l^2``."""
    p = np.asarray(coeffs, dtype=float) ** 2
    p = np.where(p < 1e-14, 0.0, p)
    nz = p[p > 0]
    return float(max(0.0, -np.sum(nz * np.log(nz))))


def herm_eig(op) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and unitary eigenvectors of a Hermitian matrix."""
    op = as_matrix(op)
    if op.shape[0] != op.shape[1]:
        raise DimensionError(f"herm_eig needs a square matrix, got {op.shape}")
    if not is_hermitian(op):
        raise SymmetryError(f"matrix is not Hermitian (defect {max_abs(op - op.conj().T):.3e})")
    if op.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    h = 0.5 * (op + op.conj().T)
    w, v = scipy.linalg.eigh(h)
    return w, v


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """A dense matrix tagged with the space it acts on.

    ``space`` is a short tag such as ``"kin"``, ``"phys"``, ``"H_A"`` or
    ``"reduced:C:+"``. Products and sums between operators with different
    tags raise :class:`SpaceMismatchError`.
    """

    matrix: np.ndarray
    space: str
    sectors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"labeled operators are square, got {m.shape}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _check(self, other: "LabeledOperator") -> None:
        if not isinstance(other, LabeledOperator):
            raise TypeError("expected a LabeledOperator")
        if other.space != self.space:
            raise SpaceMismatchError(f"cannot combine an operator on {self.space!r} with one on {other.space!r}")

    def __matmul__(self, other):
        if isinstance(other, LabeledOperator):
            self._check(other)
            return LabeledOperator(self.matrix @ other.matrix, self.space, self.sectors)
        return self.matrix @ np.asarray(other, dtype=np.complex128)

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check(other)
        return LabeledOperator(self.matrix + other.matrix, self.space, self.sectors)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check(other)
        return LabeledOperator(self.matrix - other.matrix, self.space, self.sectors)

    def adjoint(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.conj().T, self.space, self.sectors)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)
