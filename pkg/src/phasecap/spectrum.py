"""Symplectic spectra, Williamson normal form and symplectic capacities of ellipsoids."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite
from .numerics import DEFAULT_TOL, Tolerances, as_symmetric, skew_block_form, sqrtm_psd
from .phase_space import SymplecticFormSpec, standard_j

PAIR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SymplecticSpectrum:
    """Positive symplectic eigenvalues, largest first. ``form_tag`` is ``"sigma"``
    for the standard form or the :class:`SymplecticFormSpec` that was used."""

    lambdas: np.ndarray
    form_tag: Union[str, SymplecticFormSpec] = "sigma"

    @property
    def largest(self) -> float:
        return float(self.lambdas[0])

    @property
    def smallest(self) -> float:
        return float(self.lambdas[-1])

    def __len__(self):
        return len(self.lambdas)

    def tolist(self) -> list[float]:
        return [float(v) for v in self.lambdas]


@dataclass(frozen=True, eq=False)
class WilliamsonDecomposition:
    """``S.T @ M @ S == diag(Lambda, Lambda)`` with ``S`` symplectic."""

    S: np.ndarray
    Lambda: np.ndarray


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{z : (z - center)^T shape^{-1} (z - center) <= radius_sq}``."""

    center: np.ndarray
    shape: np.ndarray
    radius_sq: float = 1.0

    def __post_init__(self):
        q = _pd(self.shape)
        if not (math.isfinite(self.radius_sq) and self.radius_sq > 0):
            raise InvalidInput(f"radius_sq must be positive, got {self.radius_sq!r}")
        c = np.zeros(q.shape[0]) if self.center is None else np.asarray(self.center, dtype=float)
        if c.shape != (q.shape[0],):
            raise InvalidInput("center and shape dimensions differ")
        object.__setattr__(self, "shape", q)
        object.__setattr__(self, "center", c)

    @classmethod
    def from_quadratic(cls, m, center=None) -> "Ellipsoid":
        """The ellipsoid ``{z : (z - center)^T m (z - center) <= 1}``."""
        m = _pd(m)
        return cls(center, np.linalg.inv(m), 1.0)

    @classmethod
    def ball(cls, n: int, radius: float = 1.0) -> "Ellipsoid":
        return cls(None, np.eye(2 * n), radius**2)


def _pd(m) -> np.ndarray:
    try:
        a = as_symmetric(m)
    except InvalidInput as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if a.shape[0] % 2:
        raise InvalidInput("matrix must have even size 2n")
    w = np.linalg.eigvalsh(a)
    if w[0] <= 0:
        raise NotPositiveDefinite(f"matrix is not positive definite (smallest eigenvalue {w[0]:.3e})")
    return a


def _sqrt_and_invsqrt(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(m)
    root = np.sqrt(w)
    r = (v * root) @ v.T
    r_inv = (v / root) @ v.T
    return 0.5 * (r + r.T), 0.5 * (r_inv + r_inv.T)


def skew_moduli(k: np.ndarray) -> np.ndarray:
    """Moduli ``lambda_1 >= ... >= lambda_n >= 0`` of the eigenvalues ``+-i lambda``
    of a real antisymmetric matrix, read off the Hermitian matrix ``1j * k``."""
    k = 0.5 * (k - k.T)
    n = k.shape[0] // 2
    w = np.linalg.eigvalsh(1j * k)
    pos, neg = w[n:][::-1], -w[:n]
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    if np.max(np.abs(pos - neg)) > PAIR_TOL * scale:
        raise InvalidInput("eigenvalues do not pair as +-i*lambda")
    return np.clip(0.5 * (pos + neg), 0.0, None)


def sigma_eigenvalues_psd(m) -> np.ndarray:
    """Symplectic eigenvalues of a symmetric PSD matrix (zeros allowed)."""
    r = sqrtm_psd(m)
    return skew_moduli(r @ standard_j(r.shape[0] // 2) @ r)


def sigma_spectrum(m) -> SymplecticSpectrum:
    """Symplectic (sigma-) spectrum of a positive definite matrix.

    The eigenvalues of ``J M`` are those of ``M^{1/2} J M^{1/2}``, namely
    ``+-i lambda_j``; they are obtained from the Hermitian ``i M^{1/2} J M^{1/2}``.
    """
    a = _pd(m)
    r, _ = _sqrt_and_invsqrt(a)
    lam = skew_moduli(r @ standard_j(a.shape[0] // 2) @ r)
    return SymplecticSpectrum(lam, "sigma")


def omega_spectrum(m, spec: SymplecticFormSpec) -> SymplecticSpectrum:
    """Moduli of the eigenvalues of ``Omega M``, largest first."""
    a = _pd(m)
    if a.shape[0] != 2 * spec.n:
        raise InvalidInput("matrix and symplectic form dimensions differ")
    r, _ = _sqrt_and_invsqrt(a)
    return SymplecticSpectrum(skew_moduli(r @ spec.omega @ r), spec)


def williamson(m) -> WilliamsonDecomposition:
    """Williamson diagonalization of a positive definite matrix.

    With ``K = M^{-1/2} J M^{-1/2}`` reduced orthogonally to
    ``O.T K O = [[0, D], [-D, 0]]``, the matrix ``S = M^{-1/2} O diag(D, D)^{-1/2}``
    is symplectic and ``S.T M S = diag(D, D)^{-1}``. Pairs are then reordered so
    that ``Lambda = 1/D`` is descending.
    """
    a = _pd(m)
    n = a.shape[0] // 2
    _, r_inv = _sqrt_and_invsqrt(a)
    o, d = skew_block_form(r_inv @ standard_j(n) @ r_inv)
    scale = 1.0 / np.sqrt(np.concatenate([d, d]))
    s = (r_inv @ o) * scale
    rev = np.arange(n)[::-1]
    s = s[:, np.concatenate([rev, rev + n])]
    return WilliamsonDecomposition(s, 1.0 / d[::-1])


def normal_form_ellipsoid(m) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Normal form of ``{z : z^T M z <= 1}``.

    Returns ``(lambda_j, x_axis_j, p_axis_j)`` for each degree of freedom: in the
    coordinates ``w = S^{-1} z`` the ellipsoid reads
    ``sum_j lambda_j (x_j^2 + p_j^2) <= 1`` and ``x_axis_j``, ``p_axis_j`` are the
    columns of ``S`` spanning the j-th conjugate plane.
    """
    wd = williamson(m)
    n = len(wd.Lambda)
    return [(float(wd.Lambda[j]), wd.S[:, j].copy(), wd.S[:, n + j].copy()) for j in range(n)]


def pullback_shape(shape: np.ndarray, spec: SymplecticFormSpec) -> np.ndarray:
    """Shape matrix of the image of ``{z^T shape^{-1} z <= r^2}`` under ``(F^T)^{-1}``,
    i.e. ``F^{-T} shape F^{-1}``."""
    ft = spec.darboux_f.T
    x = np.linalg.solve(ft, shape)
    y = np.linalg.solve(ft, x.T)
    return 0.5 * (y + y.T)


def capacity(e: Ellipsoid, spec: SymplecticFormSpec | None = None) -> float:
    """Symplectic capacity of an ellipsoid (all capacities agree on ellipsoids).

    Standard form: ``pi * r^2 * lambda_n(Q)``, the smallest symplectic
    eigenvalue of the shape matrix, which equals ``pi / lambda_1(M)`` for the
    defining matrix ``M = Q^{-1} / r^2``. For a general form the ellipsoid is
    first pulled back to the standard structure by ``(F^T)^{-1}``. The center
    plays no role.
    """
    if not isinstance(e, Ellipsoid):
        raise InvalidInput("capacity expects an Ellipsoid")
    q = e.shape
    if spec is not None:
        if q.shape[0] != 2 * spec.n:
            raise InvalidInput("ellipsoid and symplectic form dimensions differ")
        if not spec.is_standard():
            q = pullback_shape(q, spec)
    return math.pi * e.radius_sq * sigma_spectrum(q).smallest


def spectrum_monotonic_check(m, m_prime, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Check ``lambda_j(M) <= lambda_j(M') + 1e-9`` for all j, given ``M <= M'``."""
    a, b = _pd(m), _pd(m_prime)
    if a.shape != b.shape:
        raise InvalidInput("matrices differ in size")
    gap = np.linalg.eigvalsh(b - a)
    if gap[0] < -tol.psd_tol * max(1.0, float(np.max(np.abs(gap)))):
        raise InvalidInput("M' - M is not positive semidefinite")
    la, lb = sigma_spectrum(a).lambdas, sigma_spectrum(b).lambdas
    return bool(np.all(la <= lb + 1e-9))
