"""Input validation helpers shared across the package.

All matrix-valued inputs pass through these checks before any
decomposition; symmetric routines are fed explicitly symmetrized
matrices so floating-point drift cannot break invariants downstream.
"""

from __future__ import annotations

import numpy as np

# Default tolerances (double precision, matrices of dimension <= 3).
SYM_TOL = 1e-9     # max allowed asymmetry |A - A.T|
PSD_TOL = 1e-9     # eigenvalues >= -PSD_TOL count as nonnegative
COST_TOL = 1e-9    # slack for cost comparisons
ZERO_DIST = 1e-12  # travel below this is treated as zero


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValidationError(f"{name} must have dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains non-finite entries")
    return v


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return (M + M.T) / 2."""
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def as_square_matrix(m, dim: int | None = None, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValidationError(f"{name} must be {dim}x{dim}, got {a.shape[0]}x{a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def check_symmetric(m: np.ndarray, name: str = "matrix", tol: float = SYM_TOL) -> np.ndarray:
    """Validate symmetry within ``tol`` and return the symmetrized matrix."""
    a = as_square_matrix(m, name=name)
    skew = np.max(np.abs(a - a.T)) if a.size else 0.0
    if skew > tol:
        raise ValidationError(f"{name} is not symmetric (max asymmetry {skew:.3e})")
    return symmetrize(a)


def check_spd(m, dim: int | None = None, name: str = "covariance") -> np.ndarray:
    """Validate a symmetric positive-definite matrix; returns it symmetrized."""
    a = check_symmetric(as_square_matrix(m, dim, name), name)
    lo = float(np.linalg.eigvalsh(a)[0])
    if lo <= 0.0:
        raise ValidationError(f"{name} is not positive definite (min eigenvalue {lo:.3e})")
    return a


def check_psd(m, dim: int | None = None, name: str = "matrix", tol: float = PSD_TOL) -> np.ndarray:
    """Validate a symmetric positive-semidefinite matrix within ``tol``."""
    a = check_symmetric(as_square_matrix(m, dim, name), name)
    lo = float(np.linalg.eigvalsh(a)[0])
    if lo < -tol:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {lo:.3e})")
    return a


def min_eigval(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(symmetrize(m))[0])


def psd_leq(a: np.ndarray, b: np.ndarray, tol: float = PSD_TOL) -> bool:
    """True iff A <= B in the semidefinite order, within ``tol``."""
    return min_eigval(b - a) >= -tol


def spectral_norm_sym(m: np.ndarray) -> float:
    """Largest singular value of a symmetric matrix (max absolute eigenvalue)."""
    w = np.linalg.eigvalsh(symmetrize(m))
    return float(max(abs(w[0]), abs(w[-1])))
