"""Small fixed-size complex linear algebra (2x2 and 4x4).

Matrices are plain ``numpy`` complex arrays.  The helpers here only add
the dimension and Hermiticity checks the rest of the package relies on.
"""

from __future__ import annotations

import numpy as np

from eacode.errors import InvariantError, UnsupportedDimensionError

# Tolerances used throughout the package.
HERMITIAN_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
COMPARE_TOL = 1e-12
ZERO_EIG_TOL = 1e-10

SUPPORTED_DIMS = (2, 4)

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a square complex array of a supported dimension."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise UnsupportedDimensionError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] not in SUPPORTED_DIMS:
        raise UnsupportedDimensionError(f"dimension {a.shape[0]} not in {SUPPORTED_DIMS}")
    return a


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(m)
    return a.shape[0] == a.shape[1] and float(np.max(np.abs(a - a.conj().T))) <= tol


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def kron(a, b) -> np.ndarray:
    """Kronecker product of two supported-dimension matrices.

    Only products up to 4x4 are supported, since everything in this package
    lives on two qubits.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    dim = a.shape[0] * b.shape[0]
    if dim not in SUPPORTED_DIMS:
        raise UnsupportedDimensionError(f"kron of {a.shape[0]}x{b.shape[0]} gives dimension {dim}")
    return np.kron(a, b)


def trace(m) -> complex:
    return complex(np.trace(np.asarray(m)))


def projector(ket) -> np.ndarray:
    """Rank-1 projector ``|k><k|`` for a normalized ket."""
    k = np.asarray(ket, dtype=complex).reshape(-1)
    return np.outer(k, k.conj())


def eig_hermitian(h, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    h : array_like
        2x2 or 4x4 Hermitian matrix.
    tol : float
        Entrywise Hermiticity tolerance.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in descending order.
    eigenvectors : ndarray
        Orthonormal eigenvectors as columns, matching ``eigenvalues``.
    """
    a = as_matrix(h)
    if not is_hermitian(a, tol):
        dev = float(np.max(np.abs(a - a.conj().T)))
        raise InvariantError(f"matrix is not Hermitian (max |M - M^dagger| = {dev:.3e})")
    # eigh only reads one triangle; symmetrize so both halves count.
    a = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def positive_part_projector(h, threshold: float = ZERO_EIG_TOL) -> np.ndarray:
    """Projector onto the strictly positive eigenspace of ``h``.

    Eigenvalues within ``threshold`` of zero are treated as zero and left
    out, so the kernel always goes to the complement.
    """
    vals, vecs = eig_hermitian(h)
    keep = vecs[:, vals > threshold]
    return keep @ keep.conj().T


def zero_eigenspace_projector(h, threshold: float = ZERO_EIG_TOL) -> np.ndarray:
    vals, vecs = eig_hermitian(h)
    keep = vecs[:, np.abs(vals) <= threshold]
    return keep @ keep.conj().T


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduce a two-qubit operator to subsystem ``keep`` (0 = A, 1 = B)."""
    r = as_matrix(rho)
    if r.shape[0] != 4:
        raise UnsupportedDimensionError("partial trace needs a 4x4 operator")
    t = r.reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ajbj->ab", t)
    if keep == 1:
        return np.einsum("jajb->ab", t)
    raise ValueError("keep must be 0 or 1")
