"""Small dense linear algebra: Gauss-Jordan inversion and cyclic Jacobi."""

from __future__ import annotations

import math

import numpy as np


class SingularMatrixError(ArithmeticError):
    pass


def gauss_jordan_solve(A, B, tol: float = 1e-14):
    """Solve ``A X = B`` by Gauss-Jordan elimination with partial pivoting.

    ``B`` may be a vector or a matrix.  Raises :class:`SingularMatrixError`
    when a pivot falls below ``tol`` times the largest entry of ``A``.
    """
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    vec = B.ndim == 1
    if vec:
        B = B[:, None]
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n:
        raise ValueError("shape mismatch")
    M = np.hstack([A, B])
    scale = max(np.max(np.abs(A)), 1e-300)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        if abs(M[piv, col]) <= tol * scale:
            raise SingularMatrixError(f"singular matrix (pivot {M[piv, col]:.3e} in column {col})")
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
        M[col] /= M[col, col]
        for row in range(n):
            if row != col and M[row, col] != 0.0:
                M[row] -= M[row, col] * M[col]
    X = M[:, n:]
    return X[:, 0] if vec else X


def gauss_jordan_inverse(A, tol: float = 1e-14):
    A = np.asarray(A, dtype=float)
    return gauss_jordan_solve(A, np.eye(A.shape[0]), tol)


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns
    -------
    values : ndarray
        Eigenvalues sorted in descending order.
    vectors : ndarray
        Columns are the matching orthonormal eigenvectors.
    """
    A = np.array(A, dtype=float)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * max(np.sqrt(np.sum(A**2)), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(A[p, q])
                if apq == 0.0:
                    continue
                diff = float(A[q, q] - A[p, p])
                if abs(diff) > 1e150 * abs(2.0 * apq):
                    # tiny rotation; t ~ 1/(2 theta) without overflowing theta
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    if theta == 0.0:
                        t = 1.0
                    else:
                        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def cholesky_ok(A, tol: float = 1e-10) -> bool:
    """Cheap positive-definiteness test by attempting a Cholesky factorization."""
    a = [list(map(float, row)) for row in A]
    n = len(a)
    L = [[0.0] * n for _ in range(n)]
    for j in range(n):
        d = a[j][j] - sum(L[j][k] * L[j][k] for k in range(j))
        if not d > tol:
            return False
        L[j][j] = d**0.5
        for i in range(j + 1, n):
            L[i][j] = (a[i][j] - sum(L[i][k] * L[j][k] for k in range(j))) / L[j][j]
    return True
