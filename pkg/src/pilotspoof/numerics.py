"""Special functions and small dense complex linear algebra.

Thin, domain-checked wrappers around LAPACK (via numpy/scipy) and the
scipy special-function library. Everything here is a pure function on
immutable inputs, safe to call concurrently from Monte Carlo workers.
Problem sizes never exceed a few tens, so no sparse paths are provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special
import scipy.stats

__all__ = [
    "EigenDecomposition",
    "herm_eig",
    "solve_hpd",
    "reg_upper_gamma",
    "inv_reg_upper_gamma",
    "erf",
    "erfinv",
    "central_chi2_cdf",
    "noncentral_chi2_sf",
]

#: Absolute symmetry slack (scaled by the largest entry for large matrices).
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Full spectrum of a Hermitian matrix.

    ``eigenvalues`` is real and ascending; column k of ``eigenvectors``
    is the unit eigenvector for ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_hermitian(matrix: np.ndarray) -> np.ndarray:
    """Validate Hermitian symmetry and symmetrize exactly."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    violation = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if violation > HERMITIAN_TOL * scale:
        raise ValueError(
            f"matrix is not Hermitian: max asymmetry {violation:.3e} "
            f"exceeds {HERMITIAN_TOL * scale:.3e}"
        )
    return 0.5 * (m + m.conj().T)


def herm_eig(matrix: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises ``ValueError`` if the input is not square or violates
    conjugate symmetry beyond ``HERMITIAN_TOL`` (relative to the largest
    entry).
    """
    m = _as_hermitian(matrix)
    vals, vecs = np.linalg.eigh(m)
    return EigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


def solve_hpd(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` for Hermitian positive-definite ``matrix``.

    Uses a Cholesky factorization; raises ``scipy.linalg.LinAlgError`` if
    the matrix is indefinite or singular.
    """
    m = _as_hermitian(matrix)
    b = np.asarray(rhs, dtype=complex)
    if b.shape != (m.shape[0],):
        raise ValueError(f"rhs shape {b.shape} incompatible with matrix {m.shape}")
    factor = scipy.linalg.cho_factor(m, lower=True)
    return scipy.linalg.cho_solve(factor, b)


def reg_upper_gamma(s: float, x: float):
    """Regularized upper incomplete gamma, monotone decreasing in ``x``."""
    if np.any(np.asarray(s) <= 0):
        raise ValueError("shape parameter must be positive")
    if np.any(np.asarray(x) < 0):
        raise ValueError("argument must be nonnegative")
    return scipy.special.gammaincc(s, x)


def inv_reg_upper_gamma(s: float, p: float):
    """Inverse of :func:`reg_upper_gamma` in its second argument."""
    if np.any(np.asarray(s) <= 0):
        raise ValueError("shape parameter must be positive")
    p_arr = np.asarray(p)
    if np.any(p_arr <= 0) or np.any(p_arr >= 1):
        raise ValueError("target probability must lie strictly inside (0, 1)")
    return scipy.special.gammainccinv(s, p)


def erf(x: float):
    """Error function (2/sqrt(pi)) * integral of exp(-t^2) from 0 to x."""
    return scipy.special.erf(x)


def erfinv(p: float):
    """Inverse error function; defined for ``p`` strictly inside (-1, 1)."""
    p_arr = np.asarray(p)
    if np.any(p_arr <= -1) or np.any(p_arr >= 1):
        raise ValueError("erfinv argument must lie strictly inside (-1, 1)")
    return scipy.special.erfinv(p)


def central_chi2_cdf(k: int, x: float):
    """CDF of a central chi-square variable with ``k`` degrees of freedom."""
    if k < 1 or int(k) != k:
        raise ValueError("degrees of freedom must be a positive integer")
    if np.any(np.asarray(x) < 0):
        raise ValueError("argument must be nonnegative")
    return scipy.special.gammainc(k / 2.0, np.asarray(x) / 2.0)


def noncentral_chi2_sf(k: int, lam: float, x: float):
    """Survival function of a noncentral chi-square variable.

    ``k`` degrees of freedom, noncentrality ``lam``; reduces to the
    central case for ``lam = 0``.
    """
    if k < 1 or int(k) != k:
        raise ValueError("degrees of freedom must be a positive integer")
    if np.any(np.asarray(lam) < 0):
        raise ValueError("noncentrality must be nonnegative")
    if np.any(np.asarray(x) < 0):
        raise ValueError("argument must be nonnegative")
    if np.all(np.asarray(lam) == 0):
        return 1.0 - central_chi2_cdf(k, x)
    return scipy.stats.ncx2.sf(x, k, lam)
