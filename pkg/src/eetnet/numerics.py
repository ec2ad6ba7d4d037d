"""Dense complex linear algebra used by every other module.

Vectorization follows the column-stacking convention, so that

    vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotHermitianError

HERMITIAN_TOL = 1e-10


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a 2-D complex array, rejecting anything else."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate that ``m`` is square and Hermitian within ``tol`` (max-norm)."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    diff = np.abs(a - a.conj().T)
    idx = np.unravel_index(np.argmax(diff), diff.shape)
    if diff[idx] >= tol:
        raise NotHermitianError(diff[idx], idx)
    return a


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def blocks(self, tol: float = 1e-9) -> list[np.ndarray]:
        """Group eigenvalue indices into degenerate blocks.

        Consecutive eigenvalues closer than ``tol * max(1, |lambda|_max)`` share
        a block.
        """
        lam = self.eigenvalues
        scale = max(1.0, float(np.max(np.abs(lam)))) if lam.size else 1.0
        groups: list[list[int]] = []
        for k, value in enumerate(lam):
            if groups and value - lam[groups[-1][-1]] <= tol * scale:
                groups[-1].append(k)
            else:
                groups.append([k])
        return [np.array(g) for g in groups]


def eig_hermitian(m) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Uses LAPACK's Hermitian driver (tridiagonal reduction followed by a
    divide-and-conquer / implicit QL solve), which treats degenerate spectra
    stably. The input is symmetrized before the solve so that round-off in the
    lower triangle cannot leak into the result.

    Raises
    ------
    DimensionError
        If ``m`` is not square.
    NotHermitianError
        If ``max|M - M^H| >= 1e-10``; the error names the offending entry.
    """
    a = check_hermitian(m)
    a = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(a)
    w.flags.writeable = False
    v.flags.writeable = False
    return SpectralDecomposition(w, v)


def expm(m, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(t M)`` by Pade-13 scaling and squaring."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return scipy.linalg.expm(t * a)


def expm_action(m, v, t: float = 1.0) -> np.ndarray:
    """Return ``exp(t M) @ V``.

    ``V`` may be a vector or a matrix with as many rows as ``M``. The result has
    the same shape as ``V``.
    """
    a = as_matrix(m)
    vv = np.asarray(v, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if vv.ndim not in (1, 2) or vv.shape[0] != a.shape[0]:
        raise DimensionError(
            f"operand with shape {vv.shape} does not match matrix of order {a.shape[0]}"
        )
    return expm(a, t) @ vv


def kron(a, b) -> np.ndarray:
    """Kronecker product; ``(rA rB) x (cA cB)``."""
    return np.kron(as_matrix(a), as_matrix(b))


def vectorize(rho) -> np.ndarray:
    """Stack the columns of ``rho`` into a 1-D vector."""
    return as_matrix(rho).reshape(-1, order="F")


def devectorize(v, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`.

    ``dim`` defaults to the integer square root of ``len(v)``.
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size or (dim is not None and dim != n):
        raise DimensionError(f"vector of length {v.size} is not a {dim or '?'}-square matrix")
    return v.reshape(n, n, order="F")
