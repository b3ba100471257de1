"""Shared numerical kernels: symmetric/Hermitian eigensolves, PSD square root,
chi-square quantiles and the tolerance policy used by every verdict."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import InvalidInput, NotPositiveSemidefinite

# Asymmetry (relative to the largest entry) tolerated before symmetrizing.
_SYM_SLACK = 1e-8


@dataclass(frozen=True)
class Tolerances:
    psd_tol: float = 1e-9
    eig_tol: float = 1e-10
    quantile_tol: float = 1e-12

    def __post_init__(self):
        for name in ("psd_tol", "eig_tol", "quantile_tol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidInput(f"{name} must be a finite positive number, got {value!r}")


DEFAULT_TOL = Tolerances()


def _square(m, dtype) -> np.ndarray:
    a = np.array(m, dtype=dtype)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return a


def as_symmetric(m) -> np.ndarray:
    """Validate a real square matrix and return its exact symmetrization."""
    a = _square(m, float)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > _SYM_SLACK * scale:
        raise InvalidInput("matrix is not symmetric")
    return 0.5 * (a + a.T)


def as_hermitian(h) -> np.ndarray:
    a = _square(h, complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > _SYM_SLACK * scale:
        raise InvalidInput("matrix is not Hermitian")
    return 0.5 * (a + a.conj().T)


def as_antisymmetric(m) -> np.ndarray:
    a = _square(m, float)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a + a.T)) > _SYM_SLACK * scale:
        raise InvalidInput("matrix is not antisymmetric")
    return 0.5 * (a - a.T)


def eig_sym(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric matrix.

    Returns:
        ``(w, V)`` with eigenvalues ``w`` in descending order and the matching
        orthonormal eigenvectors as the columns of ``V``.
    """
    a = as_symmetric(m)
    w, v = np.linalg.eigh(a)
    return w[::-1].copy(), v[:, ::-1].copy()


def eig_herm_min(h) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(as_hermitian(h))[0])


def _psd_floor(eigvals: np.ndarray, tol: Tolerances) -> float:
    norm = float(np.max(np.abs(eigvals)))
    return -tol.psd_tol * max(1.0, norm)


def is_psd(h, tol: Tolerances = DEFAULT_TOL) -> bool:
    """PSD verdict with a tolerance relative to ``max(1, ||h||_2)``."""
    w = np.linalg.eigvalsh(as_hermitian(h))
    return bool(w[0] >= _psd_floor(w, tol))


def sqrtm_psd(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Symmetric PSD square root of a symmetric PSD matrix."""
    a = as_symmetric(m)
    w, v = np.linalg.eigh(a)
    if w[0] < _psd_floor(w, tol):
        raise NotPositiveSemidefinite(f"matrix has eigenvalue {w[0]:.3e} < 0")
    r = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return 0.5 * (r + r.T)


def chi2_cdf(q: float, dof: int) -> float:
    if q <= 0:
        return 0.0
    return float(gammainc(0.5 * dof, 0.5 * q))


def _chi2_pdf(q: float, dof: int) -> float:
    if q <= 0:
        return 0.0
    k = 0.5 * dof
    return math.exp((k - 1.0) * math.log(q) - 0.5 * q - k * math.log(2.0) - gammaln(k))


def chi2_quantile(dof: int, alpha: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Quantile of the chi-square distribution with ``dof`` degrees of freedom.

    Inverts the regularized lower incomplete gamma function: the root is
    bracketed, narrowed by bisection and polished with safeguarded Newton steps
    (a Newton step leaving the bracket falls back to bisection).
    """
    if isinstance(dof, bool) or int(dof) != dof or dof < 1:
        raise InvalidInput(f"dof must be a positive integer, got {dof!r}")
    dof = int(dof)
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha!r}")

    lo, hi = 0.0, max(1.0, float(dof))
    while chi2_cdf(hi, dof) < alpha:
        lo, hi = hi, 2.0 * hi

    q = 0.5 * (lo + hi)
    for _ in range(200):
        err = chi2_cdf(q, dof) - alpha
        if abs(err) <= tol.quantile_tol:
            break
        if err > 0:
            hi = q
        else:
            lo = q
        pdf = _chi2_pdf(q, dof)
        step = q - err / pdf if pdf > 0 else math.nan
        q_next = step if lo < step < hi else 0.5 * (lo + hi)
        if q_next == q or hi - lo <= 4 * math.ulp(hi):
            break
        q = q_next
    return q


def skew_block_form(k, pair_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal reduction of a nonsingular real antisymmetric matrix.

    Finds orthogonal ``O`` and ``d_1 >= ... >= d_n > 0`` with
    ``O.T @ k @ O == [[0, D], [-D, 0]]``, ``D = diag(d)``. The spectrum of the
    Hermitian matrix ``1j * k`` is ``{+-d_j}``; for each positive eigenvalue the
    eigenvector ``a + ib`` yields the real pair ``e = sqrt(2) a``,
    ``f = sqrt(2) b`` with ``k e = d f`` and ``k f = -d e``, and ``O = [f | e]``.

    Raises:
        InvalidInput: odd dimension, or eigenvalues that fail to pair up as
            ``+-d`` within ``pair_tol`` (relative), or a zero ``d``.
    """
    a = as_antisymmetric(k)
    dim = a.shape[0]
    if dim % 2:
        raise InvalidInput("antisymmetric matrix must have even dimension")
    n = dim // 2
    w, v = np.linalg.eigh(1j * a)
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    pos, neg = w[n:][::-1], -w[:n]
    if np.max(np.abs(pos - neg)) > pair_tol * scale:
        raise InvalidInput("eigenvalues of the antisymmetric matrix do not pair as +-d")
    d = 0.5 * (pos + neg)
    if d[-1] <= 0:
        raise InvalidInput("antisymmetric matrix is singular")
    u = v[:, n:][:, ::-1]
    e = math.sqrt(2.0) * u.real
    f = math.sqrt(2.0) * u.imag
    return np.hstack([f, e]), d
