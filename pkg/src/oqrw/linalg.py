"""Dense complex linear algebra used throughout the package.

Every decomposition goes through a Hermitian eigensolver. Rank and support
decisions use a relative cutoff ``tol * lambda_max`` so that verdicts do not
depend on the overall scale of the matrix; when the largest eigenvalue is
itself below ``TINY_SPECTRUM`` an absolute cutoff ``ABS_CUTOFF`` is used.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NotHermitian, NotPsd

DEFAULT_TOL = 1e-10
TINY_SPECTRUM = 1e-12
ABS_CUTOFF = 1e-14


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a square complex128 array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def opnorm(a: np.ndarray) -> float:
    """Spectral norm."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def is_hermitian(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    return opnorm(a - dagger(a)) <= tol * max(1.0, opnorm(a))


def _cutoff(evals: np.ndarray, tol: float) -> float:
    lam_max = float(np.max(evals)) if evals.size else 0.0
    if lam_max < TINY_SPECTRUM:
        return ABS_CUTOFF
    return tol * lam_max


def hermitian_eigh(a, tol: float = DEFAULT_TOL):
    """Eigendecomposition of a Hermitian matrix, symmetrizing rounding noise.

    Raises
    ------
    NotHermitian
        If ``||a - a*|| > tol * ||a||``.
    """
    a = as_matrix(a)
    scale = opnorm(a)
    if opnorm(a - dagger(a)) > tol * max(scale, TINY_SPECTRUM):
        raise NotHermitian(f"matrix is not Hermitian within tol={tol}")
    return np.linalg.eigh(0.5 * (a + dagger(a)))


def is_psd(a, tol: float = DEFAULT_TOL) -> bool:
    try:
        evals, _ = hermitian_eigh(a, tol)
    except NotHermitian:
        return False
    lam_max = max(float(np.max(np.abs(evals))), 1.0)
    return bool(np.min(evals) >= -tol * lam_max)


def is_projection(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    return is_hermitian(a, tol) and opnorm(a @ a - a) <= tol * max(1.0, opnorm(a))


def _support_basis(a, tol: float) -> np.ndarray:
    evals, evecs = hermitian_eigh(a, tol)
    keep = evals > _cutoff(evals, tol)
    return evecs[:, keep]


def support_basis(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the support of a PSD matrix."""
    return _support_basis(a, tol)


def support_projection(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthogonal projector onto the support (range) of a PSD matrix.

    Eigenvectors with eigenvalue above ``tol * lambda_max`` span the support.
    The zero matrix maps to the zero projector.

    Raises
    ------
    NotHermitian
        If ``a`` is not Hermitian within ``tol``.
    """
    v = _support_basis(a, tol)
    return v @ dagger(v)


def rank(a, tol: float = DEFAULT_TOL) -> int:
    return int(_support_basis(a, tol).shape[1])


def psd_sqrt(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Hermitian PSD square root.

    Raises
    ------
    NotPsd
        If an eigenvalue is below ``-tol * lambda_max``.
    """
    evals, evecs = hermitian_eigh(a, tol)
    lam_max = max(float(np.max(np.abs(evals))), TINY_SPECTRUM)
    if np.min(evals) < -tol * lam_max:
        raise NotPsd(f"smallest eigenvalue {np.min(evals):.3e} is negative beyond tol")
    root = np.sqrt(np.clip(evals, 0.0, None))
    return (evecs * root) @ dagger(evecs)


def is_faithful(rho, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``rho`` has full rank under the support threshold."""
    rho = as_matrix(rho)
    return rank(rho, tol) == rho.shape[0]


def span_projection(columns: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Projector onto the column span of ``columns`` (possibly with zero columns)."""
    columns = np.asarray(columns, dtype=complex)
    if columns.shape[1] == 0:
        d = columns.shape[0]
        return np.zeros((d, d), dtype=complex)
    return support_projection(columns @ dagger(columns), tol)
