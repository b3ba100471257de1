"""Uncertainty criteria for an estimated covariance matrix Sigma and a symplectic form Omega.

Three checks are provided: positivity of the Hermitian matrix ``Sigma + i Omega``,
the pairwise Robertson-Schroedinger-type inequalities it implies, and the
capacity criterion on the covariance ellipsoid.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .mve import EllipsoidEstimate, cov_matrix
from .numerics import DEFAULT_TOL, Tolerances, as_symmetric, sqrtm_psd
from .phase_space import SymplecticFormSpec, form_from_omega
from .spectrum import pullback_shape, sigma_eigenvalues_psd, skew_moduli

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairInequality:
    """``lhs = Delta^2 * Delta^2 >= rhs = covariance^2 + entry^2``; indices are 1-based."""

    kind: str
    j: int
    k: int
    lhs: float
    rhs: float
    slack: float
    holds: bool

    def label(self) -> str:
        a, b = {"xx": ("x", "x"), "pp": ("p", "p"), "xp": ("x", "p")}[self.kind]
        return f"{a}{self.j},{b}{self.k}"


@dataclass(frozen=True, eq=False)
class UncertaintyReport:
    sigma: np.ndarray
    omega_spec: SymplecticFormSpec
    min_eig: float
    psd_ok: bool
    pairs: list[PairInequality]
    capacity_value: float
    capacity_threshold: float
    capacity_ok: bool
    spectrum: list[float]

    @property
    def n(self) -> int:
        return self.omega_spec.n

    @property
    def pairs_ok(self) -> bool:
        return all(p.holds for p in self.pairs)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sigma": [[float(v) for v in row] for row in self.sigma],
            "omega": self.omega_spec.blocks(),
            "min_eig": float(self.min_eig),
            "psd_ok": bool(self.psd_ok),
            "pairs": [
                {
                    "kind": p.kind,
                    "j": p.j,
                    "k": p.k,
                    "lhs": p.lhs,
                    "rhs": p.rhs,
                    "slack": p.slack,
                    "holds": p.holds,
                }
                for p in self.pairs
            ],
            "capacity": {
                "value": float(self.capacity_value),
                "threshold": float(self.capacity_threshold),
                "ok": bool(self.capacity_ok),
            },
            "spectrum": [float(v) for v in self.spectrum],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "UncertaintyReport":
        om = d["omega"]
        b = np.array(om["B"], dtype=float)
        omega = np.block([[np.array(om["A"], dtype=float), b], [-b.T, np.array(om["C"], dtype=float)]])
        return cls(
            sigma=np.array(d["sigma"], dtype=float),
            omega_spec=form_from_omega(omega),
            min_eig=float(d["min_eig"]),
            psd_ok=bool(d["psd_ok"]),
            pairs=[PairInequality(**p) for p in d["pairs"]],
            capacity_value=float(d["capacity"]["value"]),
            capacity_threshold=float(d["capacity"]["threshold"]),
            capacity_ok=bool(d["capacity"]["ok"]),
            spectrum=[float(v) for v in d["spectrum"]],
        )

    @classmethod
    def from_json(cls, text: str) -> "UncertaintyReport":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, UncertaintyReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _check_dims(sigma, spec: SymplecticFormSpec) -> np.ndarray:
    s = as_symmetric(sigma)
    if s.shape != (2 * spec.n, 2 * spec.n):
        raise InvalidInput(f"Sigma has shape {s.shape}, expected {(2 * spec.n, 2 * spec.n)} for n={spec.n}")
    return s


def hermitian_condition(sigma, spec: SymplecticFormSpec, tol: Tolerances = DEFAULT_TOL) -> tuple[float, bool]:
    """Smallest eigenvalue of ``Sigma + i Omega`` and the PSD verdict.

    The verdict accepts ``min_eig >= -psd_tol * max(1, ||Sigma + i Omega||_2)``.
    """
    s = _check_dims(sigma, spec)
    w = np.linalg.eigvalsh(s + 1j * spec.omega)
    floor = -tol.psd_tol * max(1.0, float(np.max(np.abs(w))))
    return float(w[0]), bool(w[0] >= floor)


def _pair(kind, j, k, var_a, var_b, cov, entry, tol) -> PairInequality:
    lhs = float(var_a * var_b)
    rhs = float(cov * cov + entry * entry)
    slack = lhs - rhs
    return PairInequality(kind, j + 1, k + 1, lhs, rhs, slack, bool(slack >= -tol.psd_tol * max(1.0, abs(lhs))))


def pair_inequalities(sigma, spec: SymplecticFormSpec, tol: Tolerances = DEFAULT_TOL) -> list[PairInequality]:
    """All pairwise inequalities implied by ``Sigma + i Omega >= 0``.

    Emitted in the order: ``xx`` pairs (j < k, bound ``a_jk``), ``pp`` pairs
    (j < k, bound ``c_jk``), then every ``xp`` pair (bound ``b_jk``).
    """
    s = _check_dims(sigma, spec)
    n = spec.n
    a, b, c = spec.A, spec.B, spec.C
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            out.append(_pair("xx", j, k, s[j, j], s[k, k], s[j, k], a[j, k], tol))
    for j in range(n):
        for k in range(j + 1, n):
            out.append(_pair("pp", j, k, s[n + j, n + j], s[n + k, n + k], s[n + j, n + k], c[j, k], tol))
    for j in range(n):
        for k in range(n):
            out.append(_pair("xp", j, k, s[j, j], s[n + k, n + k], s[j, n + k], b[j, k], tol))
    return out


def _covariance_capacity(sigma: np.ndarray, m0: float, spec: SymplecticFormSpec) -> float:
    q = sigma if spec.is_standard() else pullback_shape(sigma, spec)
    return math.pi * m0**2 * float(sigma_eigenvalues_psd(q)[-1])


def capacity_criterion(
    est: EllipsoidEstimate, spec: SymplecticFormSpec, tol: Tolerances = DEFAULT_TOL
) -> tuple[float, float, bool]:
    """Capacity of the covariance ellipsoid ``{(z - c)^T Sigma^{-1} (z - c) <= m0^2}``
    under the form, compared with ``pi * m0^2``.

    The value is ``pi m0^2 lambda_n(F^{-T} Sigma F^{-1})``. Since
    ``Sigma + i Omega = F^T (F^{-T} Sigma F^{-1} + iJ) F``, the comparison
    ``value >= pi m0^2`` holds exactly when ``Sigma + i Omega >= 0``.
    A singular Sigma (flat ellipsoid) gets capacity 0.

    Returns:
        ``(value, threshold, ok)``.
    """
    sigma, m0 = cov_matrix(est)
    sigma = _check_dims(sigma, spec)
    value = _covariance_capacity(sigma, m0, spec)
    threshold = math.pi * m0**2
    ok = value >= threshold - tol.psd_tol * max(1.0, threshold)
    if log.isEnabledFor(logging.DEBUG):
        largest = float(sigma_eigenvalues_psd(sigma)[0])
        log.debug(
            "capacity %.17g vs threshold pi*m0^2 = %.17g; reading with largest sigma-eigenvalue: %.17g",
            value,
            threshold,
            threshold * largest,
        )
    return value, threshold, bool(ok)


def omega_spectrum_psd(sigma: np.ndarray, spec: SymplecticFormSpec) -> list[float]:
    r = sqrtm_psd(sigma)
    return [float(v) for v in skew_moduli(r @ spec.omega @ r)]


def analyze(est: EllipsoidEstimate, spec: SymplecticFormSpec, tol: Tolerances = DEFAULT_TOL) -> UncertaintyReport:
    """Run every criterion on the calibrated covariance of ``est``."""
    sigma, _ = cov_matrix(est)
    sigma = _check_dims(sigma, spec)
    min_eig, psd_ok = hermitian_condition(sigma, spec, tol)
    pairs = pair_inequalities(sigma, spec, tol)
    value, threshold, cap_ok = capacity_criterion(est, spec, tol)
    report = UncertaintyReport(
        sigma=sigma,
        omega_spec=spec,
        min_eig=min_eig,
        psd_ok=psd_ok,
        pairs=pairs,
        capacity_value=value,
        capacity_threshold=threshold,
        capacity_ok=cap_ok,
        spectrum=omega_spectrum_psd(sigma, spec),
    )
    if psd_ok and not report.pairs_ok:
        log.warning("Sigma + i Omega >= 0 but a pairwise inequality fails")
    if psd_ok != cap_ok:
        log.warning("PSD verdict (%s) and capacity verdict (%s) disagree", psd_ok, cap_ok)
    return report


def analyze_covariance(sigma, spec: SymplecticFormSpec, m0: float = 1.0, tol: Tolerances = DEFAULT_TOL) -> UncertaintyReport:
    """:func:`analyze` for a covariance matrix given directly."""
    return analyze(EllipsoidEstimate.from_covariance(sigma, m0), spec, tol)
