"""Dense symmetric eigen-utilities.

All matrices handled here are tiny (a few dozen rows at most), so a cyclic
Jacobi eigensolver is used. Rotations are applied in round-robin order, so
each step rotates ``n // 2`` disjoint index pairs at once.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError

PSD_TOL = 1e-9


def as_symmetric(A, name: str = "A") -> np.ndarray:
    """Validate ``A`` and return it as a float array.

    Only the upper triangle is read; the result is the symmetric matrix it
    defines.
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    upper = np.triu(A)
    return upper + np.triu(A, 1).T


def _round_robin(n: int) -> list[list[tuple[int, int]]]:
    # circle method; index n is a bye when n is odd
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for k in range(m // 2):
            p, q = players[k], players[m - 1 - k]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(pairs)
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    A : array_like
        Symmetric matrix (upper triangle is used).
    tol : float
        Relative off-diagonal Frobenius norm at which sweeps stop.
    max_sweeps : int
        Hard cap on the number of full sweeps.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    V : ndarray
        Orthonormal eigenvectors as columns, ``A = V diag(w) V^T``.
    """
    A = as_symmetric(A)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if n == 1 or scale == 0.0:
        return _sorted(np.diag(A).copy(), V)
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for pairs in rounds:
            J = np.eye(n)
            rotated = False
            for p, q in pairs:
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(diff) * 1e-300 >= abs(apq):
                    continue  # rotation angle underflows to zero
                tau = diff / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                rotated = True
            if rotated:
                A = J.T @ A @ J
                A = 0.5 * (A + A.T)
                V = V @ J
    return _sorted(np.diag(A).copy(), V)


def _sorted(w: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def eigenvalues_sym(A, vectors: bool = False):
    """Ascending eigenvalues of ``A``; also eigenvectors if ``vectors``."""
    w, V = jacobi_eigh(A)
    return (w, V) if vectors else w


def min_eigenvalue(A) -> float:
    return float(jacobi_eigh(A)[0][0])


def is_psd(A, tol: float = PSD_TOL) -> bool:
    """True iff the smallest eigenvalue of ``A`` is at least ``-tol``."""
    if tol < 0:
        raise InputError("tol must be non-negative")
    return min_eigenvalue(A) >= -tol


def try_cholesky(A, shift: float = 0.0) -> np.ndarray | None:
    """Lower Cholesky factor of ``A + shift*I``, or None if not positive definite."""
    A = as_symmetric(A)
    try:
        return np.linalg.cholesky(A + shift * np.eye(A.shape[0]))
    except np.linalg.LinAlgError:
        return None
