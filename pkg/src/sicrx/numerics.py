"""Small dense complex linear-algebra kernel.

Every matrix in the receiver is tiny (a handful of LNBs), so the solvers
here are simple unblocked algorithms on numpy complex arrays: cyclic
Jacobi rotations for Hermitian eigenpairs, an unpivoted Cholesky
factorization, Gauss-Jordan elimination with partial pivoting, and
triangular substitution.  No LAPACK-style backend is used.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "LinAlgError",
    "as_matrix",
    "require_hermitian",
    "frobenius_norm_sq",
    "hermitian_dominant_eigvec",
    "cholesky_lower",
    "inverse",
    "solve_lower",
    "solve_upper",
]

HERMITIAN_RTOL = 1e-12
# Gauss-Jordan pivots below PIVOT_RTOL * max|X| are treated as singular,
# which caps the usable condition number at roughly 1/PIVOT_RTOL.
PIVOT_RTOL = 1e-13
JACOBI_MAX_ROTATIONS = 10_000


class LinAlgError(ValueError):
    """Singular, non-square, non-Hermitian or indefinite input."""


def as_matrix(x) -> np.ndarray:
    """Return ``x`` as a fresh 2-D complex128 array."""
    a = np.array(x, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise LinAlgError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def _require_square(a: np.ndarray) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise LinAlgError(f"expected a square matrix, got shape {a.shape}")
    return a


def require_hermitian(x, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate that ``x`` is square and Hermitian within ``rtol``.

    The tolerance is relative to the largest entry magnitude.  Returns the
    exactly symmetrized matrix (X + X^H) / 2 so downstream arithmetic is
    not polluted by round-off skew.
    """
    a = _require_square(as_matrix(x))
    scale = np.abs(a).max()
    if scale > 0 and np.abs(a - a.conj().T).max() > rtol * scale:
        raise LinAlgError("matrix is not Hermitian within tolerance")
    return 0.5 * (a + a.conj().T)


def frobenius_norm_sq(x) -> float:
    """Sum of squared entry magnitudes."""
    a = as_matrix(x)
    return float((a.real * a.real + a.imag * a.imag).sum())


def hermitian_dominant_eigvec(x, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    x : array_like
        Square Hermitian matrix (validated within ``HERMITIAN_RTOL``).
    tol : float
        Convergence target for the off-diagonal Frobenius norm, relative
        to the Frobenius norm of ``x``.

    Returns
    -------
    (eigval, eigvec)
        The algebraically largest eigenvalue and a unit-norm eigenvector.

    Raises
    ------
    LinAlgError
        Non-square or non-Hermitian input, or no convergence within
        ``JACOBI_MAX_ROTATIONS`` rotations.
    """
    a = require_hermitian(x)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    norm = np.sqrt(frobenius_norm_sq(a))
    if norm == 0.0:
        return 0.0, v[:, 0].copy()
    target = tol * norm

    rotations = 0
    while True:
        off = a - np.diag(np.diag(a))
        if np.sqrt(frobenius_norm_sq(off)) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) == 0.0:
                    continue
                if rotations >= JACOBI_MAX_ROTATIONS:
                    raise LinAlgError(
                        "Jacobi eigensolver did not converge within "
                        f"{JACOBI_MAX_ROTATIONS} rotations"
                    )
                g = abs(apq)
                phase = apq / g
                theta = (a[q, q].real - a[p, p].real) / (2.0 * g)
                sign = 1.0 if theta >= 0.0 else -1.0
                t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array(
                    [[c, s * phase], [-s * np.conj(phase), c]],
                    dtype=np.complex128,
                )
                a[:, [p, q]] = a[:, [p, q]] @ rot
                a[[p, q], :] = rot.conj().T @ a[[p, q], :]
                v[:, [p, q]] = v[:, [p, q]] @ rot
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                rotations += 1

    diag = np.diag(a).real
    k = int(np.argmax(diag))
    vec = v[:, k].copy()
    vec /= np.sqrt((vec.real * vec.real + vec.imag * vec.imag).sum())
    return float(diag[k]), vec


def cholesky_lower(x) -> np.ndarray:
    """Lower-triangular L with L L^H = X for Hermitian positive-definite X.

    Raises ``LinAlgError`` naming the failing pivot index when a pivot is
    not strictly positive.
    """
    a = require_hermitian(x)
    n = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(n):
        row = lower[j, :j]
        pivot = a[j, j].real - float((row.real * row.real + row.imag * row.imag).sum())
        if not np.isfinite(pivot) or pivot <= 0.0:
            raise LinAlgError(f"matrix is not positive definite (pivot {j})")
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (
                a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j].conj()
            ) / lower[j, j].real
    return lower


def inverse(x) -> np.ndarray:
    """Matrix inverse by Gauss-Jordan elimination with partial pivoting.

    Raises ``LinAlgError`` when a pivot falls below ``PIVOT_RTOL`` times
    the largest entry magnitude of the input (singular or too
    ill-conditioned to invert reliably).
    """
    a = _require_square(as_matrix(x))
    n = a.shape[0]
    scale = np.abs(a).max()
    if scale == 0.0:
        raise LinAlgError("matrix is singular (all zero)")
    aug = np.hstack([a, np.eye(n, dtype=np.complex128)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if np.abs(aug[piv, col]) <= PIVOT_RTOL * scale:
            raise LinAlgError(f"matrix is singular or ill-conditioned (pivot {col})")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:].copy()


def solve_lower(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve L y = b by forward substitution (L lower-triangular)."""
    n = lower.shape[0]
    y = np.array(b, dtype=np.complex128)
    for i in range(n):
        if i:
            y[i] -= lower[i, :i] @ y[:i]
        y[i] /= lower[i, i]
    return y


def solve_upper(upper: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve U y = b by backward substitution (U upper-triangular)."""
    n = upper.shape[0]
    y = np.array(b, dtype=np.complex128)
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            y[i] -= upper[i, i + 1:] @ y[i + 1:]
        y[i] /= upper[i, i]
    return y
