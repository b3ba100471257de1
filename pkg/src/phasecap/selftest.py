"""Embedded sanity suite run by ``phasecap selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_TOL, Tolerances, chi2_cdf, chi2_quantile
from .phase_space import standard_form, standard_j
from .spectrum import williamson
from .uncertainty import hermitian_condition, pair_inequalities

COUNTEREXAMPLE = np.array(
    [
        [1.0, -1.0, 0.0, 0.0],
        [-1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def check_counterexample(tol: Tolerances) -> Check:
    spec = standard_form(2)
    det = np.linalg.det(COUNTEREXAMPLE + 1j * spec.omega)
    _, psd_ok = hermitian_condition(COUNTEREXAMPLE, spec, tol)
    pairs = pair_inequalities(COUNTEREXAMPLE, spec, tol)
    ok = abs(det - (-1.0)) <= 1e-9 and not psd_ok and all(p.holds for p in pairs)
    return Check(
        "counterexample",
        bool(ok),
        f"det={det.real:.12g} (imag {det.imag:.1e}) psd_ok={psd_ok} pairs_hold={all(p.holds for p in pairs)}",
    )


def check_n1_equivalence(tol: Tolerances, samples: int = 2000, seed: int = 7) -> Check:
    rng = np.random.default_rng(seed)
    disagreements = considered = 0
    for _ in range(samples):
        g = rng.normal(size=(2, 2))
        sigma = g @ g.T + 0.05 * np.eye(2)
        a = rng.uniform(0.0, 2.0)
        spec = standard_form(1, a) if a > 0 else None
        if spec is None:
            continue
        gap = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] ** 2 - a * a
        lam_max = np.linalg.eigvalsh(sigma + 1j * a * standard_j(1))[-1]
        if abs(gap) <= 10 * tol.psd_tol * max(1.0, lam_max) * lam_max:
            continue
        considered += 1
        _, psd_ok = hermitian_condition(sigma, spec, tol)
        disagreements += psd_ok != (gap >= 0)
    return Check("n=1 equivalence", disagreements == 0, f"{disagreements} disagreements in {considered} samples")


def check_williamson(tol: Tolerances, trials: int = 40, seed: int = 11) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(trials):
        dim = 2 * (1 + i % 4)
        g = rng.normal(size=(dim, dim)) / math.sqrt(dim)
        m = g @ g.T + 0.5 * np.eye(dim)
        wd = williamson(m)
        j = standard_j(dim // 2)
        lam = np.concatenate([wd.Lambda, wd.Lambda])
        worst = max(
            worst,
            float(np.max(np.abs(wd.S.T @ j @ wd.S - j))),
            float(np.max(np.abs(wd.S.T @ m @ wd.S - np.diag(lam)))),
        )
    return Check("williamson residuals", worst <= 1e-9, f"max residual {worst:.2e}")


def check_chi2(tol: Tolerances) -> Check:
    worst = 0.0
    for dof in (2, 4, 8):
        for alpha in (0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99):
            worst = max(worst, abs(chi2_cdf(chi2_quantile(dof, alpha, tol), dof) - alpha))
    analytic = max(
        abs(chi2_quantile(2, 0.5, tol) - 2 * math.log(2)),
        abs(chi2_quantile(2, 0.95, tol) + 2 * math.log(0.05)),
    )
    return Check(
        "chi2 round trip",
        worst <= 1e-10 and analytic <= 1e-10,
        f"round-trip {worst:.1e}, analytic {analytic:.1e}",
    )


def run(tol: Tolerances = DEFAULT_TOL) -> list[Check]:
    return [check_counterexample(tol), check_n1_equivalence(tol), check_williamson(tol), check_chi2(tol)]
