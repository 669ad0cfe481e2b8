"""Small linear-algebra helpers shared across the package.

One convention rules the codebase: ``vec`` stacks matrix *columns*
(column-major / Fortran order).  Every covariance block, Kronecker
identity and conditional-estimate formula depends on it.
"""

from __future__ import annotations

import numpy as np


def vec(m: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a matrix."""
    return np.asarray(m, dtype=float).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetric part (M + M^T) / 2."""
    return 0.5 * (m + m.T)


def weighted_sq_norm(v: np.ndarray, weight: np.ndarray) -> float:
    """Quadratic form v^T W v for SPD ``weight``."""
    v = np.asarray(v, dtype=float)
    return float(v @ (weight @ v))


def spd_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix, symmetrized."""
    out = np.linalg.inv(m)
    return sym(out)


def is_spd(m: np.ndarray, sym_tol: float = 1e-8) -> bool:
    """Cheap SPD check: symmetry plus a successful Cholesky."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > sym_tol * scale:
        return False
    try:
        np.linalg.cholesky(sym(m))
    except np.linalg.LinAlgError:
        return False
    return True
