"""Small complex linear-algebra helpers and unit conversions."""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, DimensionError, SymmetryError

HERMITIAN_RTOL = 1e-10


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = np.max(np.abs(a)) if a.size else 0.0
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= rtol * scale)


def hermitian_max_eigenvalue(
    a: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000
) -> float:
    """Largest eigenvalue of a Hermitian positive semidefinite matrix.

    Power iteration from the normalized all-ones vector. Iteration stops
    when the eigen-residual ``||A x - r x||`` drops below ``tol * r`` or the
    Rayleigh quotient ``r`` stagnates to within ``tol**2`` relative.

    Parameters
    ----------
    a : (n, n) complex array
        Hermitian PSD matrix.
    tol : float
        Relative accuracy target.
    max_iter : int
        Iteration cap; exceeding it raises :class:`ConvergenceError`.

    Returns
    -------
    float
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a):
        raise SymmetryError("matrix is not Hermitian within tolerance")
    n = a.shape[0]
    if n == 0:
        raise DimensionError("empty matrix")
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    x = np.ones(n, dtype=complex) / np.sqrt(n)
    prev = None
    for _ in range(max_iter):
        y = a @ x
        ny = np.linalg.norm(y)
        if ny <= 1e-14 * scale:
            # start vector lies in the null space of a nonzero matrix:
            # move it off deterministically and retry
            x = x + np.exp(1j * np.arange(n)) / np.sqrt(n)
            x /= np.linalg.norm(x)
            prev = None
            continue
        r = float(np.real(np.vdot(x, y)))
        resid = np.linalg.norm(y - r * x)
        if resid <= tol * abs(r):
            return r
        if prev is not None and abs(r - prev) <= tol * tol * abs(r):
            return r
        prev = r
        x = y / ny
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def db_to_linear(g_db: float) -> float:
    return 10.0 ** (g_db / 10.0)


def linear_to_db(g: float) -> float:
    return 10.0 * np.log10(g)


def watts_to_dbm(p_w: float) -> float:
    return 10.0 * np.log10(p_w) + 30.0
