"""Dense Hermitian linear-algebra helpers shared by the solvers.

Thin contracts over LAPACK: eigendecomposition of small Hermitian matrices
and the principal singular pair used for rank-one extraction.
"""

from __future__ import annotations

import numpy as np

__all__ = ["hermitian_eig", "principal_singular_pair", "assert_hermitian"]


def assert_hermitian(m: np.ndarray, tol: float = 1e-12, name: str = "matrix") -> None:
    """Reject matrices whose asymmetry exceeds ``tol`` (max-abs entrywise)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > tol:
        raise ValueError(f"{name} is not Hermitian: asymmetry {asym:.3g} > {tol:.3g}")


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvectors as columns) such that
    m = U diag(lam) U^H with U unitary.
    """
    assert_hermitian(m)
    lam, u = np.linalg.eigh(m)
    return lam, u


def principal_singular_pair(m: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Largest singular value of a square matrix with its left/right vectors.

    Satisfies m @ v_right ~= sigma * v_left with unit-norm vectors.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    u, s, vh = np.linalg.svd(m)
    return float(s[0]), u[:, 0], vh[0].conj()
