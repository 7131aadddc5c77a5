"""Dense complex linear algebra: atoms, Toeplitz maps, eigendecompositions, polynomials."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as la
from numpy.typing import ArrayLike, NDArray

from src.models.signal import TrigPolynomial

HERMITIAN_TOL = 1e-10
KERNEL_TOL = 1e-10


class LinalgDomainError(ValueError):
    """Raised when an input lies outside an operation's domain."""


class ShapeError(ValueError):
    """Raised on incompatible array shapes."""


class RankError(ValueError):
    """Raised when a nullspace is requested from a matrix that may have none."""


class Eigendecomposition(NamedTuple):
    values: NDArray[np.float64]
    vectors: NDArray[np.complex128]


def _as_vector(x: ArrayLike) -> NDArray[np.complex128]:
    vector = np.asarray(x, dtype=np.complex128)
    if vector.ndim != 1 or vector.shape[0] < 1:
        raise ShapeError(f"Expected a non-empty vector, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise LinalgDomainError("Vector entries must be finite")
    return vector


def _as_square(H: ArrayLike) -> NDArray[np.complex128]:
    matrix = np.asarray(H, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"Expected a square matrix, got shape {matrix.shape}")
    return matrix


def atom(tau: float, n: int) -> NDArray[np.complex128]:
    """a(tau) = [1, e^{i2pi tau}, ..., e^{i2pi(n-1)tau}]."""

    if not 0.0 <= tau < 1.0:
        raise LinalgDomainError(f"Frequency must lie in [0, 1), got {tau}")
    if n < 1:
        raise LinalgDomainError(f"Atom length must be positive, got {n}")
    return np.exp(2j * np.pi * tau * np.arange(n))


def atoms(taus: ArrayLike, n: int) -> NDArray[np.complex128]:
    """The n x p Vandermonde matrix [a(tau_1), ..., a(tau_p)]."""

    freqs = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any((freqs < 0) | (freqs >= 1)):
        raise LinalgDomainError("Frequencies must lie in [0, 1)")
    return np.exp(2j * np.pi * np.outer(np.arange(n), freqs))


def lag_weights(n: int) -> NDArray[np.float64]:
    """(1, 2, ..., 2): each off-diagonal lag of T(x) appears twice."""
    weights = np.full(n, 2.0)
    weights[0] = 1.0
    return weights


def k_diagonal(n: int) -> NDArray[np.float64]:
    """Diagonal of K = diag(1, 1/2, ..., 1/2)."""
    return 1.0 / lag_weights(n)


def toeplitz(x: ArrayLike) -> NDArray[np.complex128]:
    """Hermitian Toeplitz matrix with first column x (diagonal forced to Re(x_0))."""

    column = _as_vector(x).copy()
    column[0] = column[0].real
    return la.toeplitz(column, column.conj())


def toeplitz_adjoint(H: ArrayLike) -> NDArray[np.complex128]:
    """T*(H)_j = sum of the j-th subdiagonal of H, j = 0, ..., N-1."""

    matrix = _as_square(H)
    n = matrix.shape[0]
    return np.array([np.trace(matrix, offset=-j) for j in range(n)], dtype=np.complex128)


def is_hermitian(H: ArrayLike, tol: float = HERMITIAN_TOL) -> bool:
    matrix = _as_square(H)
    scale = max(1.0, float(np.max(np.abs(matrix))) if matrix.size else 1.0)
    return float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0)) <= tol * scale


def hermitian_eig(H: ArrayLike) -> Eigendecomposition:
    """Eigenvalues in descending order with a unitary eigenvector matrix."""

    matrix = _as_square(H)
    if not is_hermitian(matrix):
        raise LinalgDomainError("Matrix is not Hermitian within tolerance")
    values, vectors = la.eigh(0.5 * (matrix + matrix.conj().T))
    return Eigendecomposition(values[::-1].copy(), vectors[:, ::-1].copy())


def psd_project(H: ArrayLike) -> NDArray[np.complex128]:
    """Frobenius-nearest positive semidefinite matrix."""

    values, vectors = hermitian_eig(H)
    clipped = np.clip(values, 0.0, None)
    projected = (vectors * clipped) @ vectors.conj().T
    return 0.5 * (projected + projected.conj().T)


def _normalize_phase(u: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Rotate so the first nonzero entry is real positive."""

    magnitude = np.abs(u)
    threshold = 1e-12 * float(np.max(magnitude, initial=0.0))
    nonzero = np.flatnonzero(magnitude > threshold)
    if nonzero.size == 0:
        return u
    lead = u[nonzero[0]]
    return u * (np.conj(lead) / np.abs(lead))


def nullspace_basis(V: ArrayLike, tol: float = KERNEL_TOL) -> NDArray[np.complex128]:
    """Orthonormal kernel basis of V as rows, in singular-vector order."""

    matrix = np.asarray(V, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ShapeError(f"Expected a matrix, got shape {matrix.shape}")
    cols = matrix.shape[1]
    _, singular, vh = la.svd(matrix, full_matrices=True)
    sigma = np.zeros(cols)
    sigma[: singular.size] = singular
    sigma_max = float(sigma.max(initial=0.0))
    kernel = np.flatnonzero(sigma <= tol * sigma_max)
    return vh[kernel].conj()


def nullspace_vector(V: ArrayLike) -> NDArray[np.complex128]:
    """Unit-norm u with Vu = 0 for a wide p x M matrix (p < M)."""

    matrix = np.asarray(V, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ShapeError(f"Expected a matrix, got shape {matrix.shape}")
    rows, cols = matrix.shape
    if rows >= cols:
        raise RankError(f"nullspace may be empty: V is {rows} x {cols} with p >= M")
    _, singular, vh = la.svd(matrix, full_matrices=True)
    if singular.size == 0 or float(singular.max()) == 0.0:
        # zero matrix: every vector qualifies, the last right-singular vector is returned
        u = vh[-1].conj()
    else:
        u = nullspace_basis(matrix)[0]
    u = u / np.linalg.norm(u)
    return _normalize_phase(u)


def uniform_grid(size: int) -> NDArray[np.float64]:
    if size < 1:
        raise LinalgDomainError(f"Grid size must be positive, got {size}")
    return np.arange(size) / size


def eval_poly(poly: TrigPolynomial, grid: ArrayLike) -> NDArray[np.complex128]:
    """Evaluate sum_n c_n exp(sign * i 2 pi n tau) at each grid point."""

    points = np.atleast_1d(np.asarray(grid, dtype=float))
    coefficients = np.asarray(poly.coefficients, dtype=np.complex128)
    exponents = np.exp(poly.sign * 2j * np.pi * np.outer(points, np.arange(coefficients.size)))
    return exponents @ coefficients


def circle_distance(a: ArrayLike, b: ArrayLike) -> NDArray[np.float64]:
    """Wrap-around distance min(|a-b|, 1-|a-b|) on [0, 1)."""

    gap = np.abs(np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0))
    return np.minimum(gap, 1.0 - gap)
