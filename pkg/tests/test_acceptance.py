"""Exit criteria, each at its stated tolerance and time budget.

Every criterion is a function returning ``(ok, detail)``. Under pytest each
one is a test and a PASS/FAIL line per criterion is printed in the terminal
summary; ``python tests/test_acceptance.py`` prints the same lines directly.
"""

import json
import math
import os
import sys
import tempfile
import time
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

sys.path.insert(0, os.path.dirname(__file__))

from phasecap.cli import main as cli_main
from phasecap.dynamics import canned_hamiltonian, flow_map, invariance_experiment
from phasecap.mve import EXHAUSTIVE, EllipsoidEstimate, MveConfig, brute_force_mve, mve_estimate
from phasecap.numerics import DEFAULT_TOL, chi2_cdf, chi2_quantile
from phasecap.phase_space import PointCloud, form_from_omega, standard_form, standard_j
from phasecap.selftest import COUNTEREXAMPLE
from phasecap.spectrum import Ellipsoid, capacity, omega_spectrum, sigma_spectrum, spectrum_monotonic_check, williamson
from phasecap.uncertainty import capacity_criterion, hermitian_condition, pair_inequalities

from conftest import random_invertible, random_pd, random_symplectic

pytestmark = pytest.mark.acceptance

SEED = 20261016


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(np.abs(np.asarray(b)), 1e-300)))


def _timed(budget):
    """Decorator: append the runtime to the detail and fail when over budget."""

    def wrap(fn):
        def inner():
            t0 = time.perf_counter()
            ok, detail = fn()
            dt = time.perf_counter() - t0
            return ok and dt < budget, f"{detail}; {dt:.2f}s (budget {budget:g}s)"

        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner

    return wrap


# ---------------------------------------------------------------- 1


@_timed(1.0)
def criterion_1():
    """Counterexample: six pairs hold with slack 0, det(Sigma + iJ) = -1, psd_ok false."""
    spec = standard_form(2)
    pairs = pair_inequalities(COUNTEREXAMPLE, spec)
    slacks = [p.slack for p in pairs]
    det = np.linalg.det(COUNTEREXAMPLE + 1j * standard_j(2))
    _, psd_ok = hermitian_condition(COUNTEREXAMPLE, spec)
    ok_pairs = len(pairs) == 6 and all(p.holds for p in pairs)
    ok_slack = all(abs(s) <= 1e-12 for s in slacks)
    ok_det = abs(det - (-1.0)) <= 1e-9
    ok = ok_pairs and ok_slack and ok_det and not psd_ok
    detail = (
        f"pairs hold={ok_pairs}, slacks={[round(s, 12) for s in slacks]} (all zero: {ok_slack}), "
        f"det={det.real:.12g}{det.imag:+.1e}j, psd_ok={psd_ok}"
    )
    return ok, detail


# ---------------------------------------------------------------- 2


@_timed(10.0)
def criterion_2():
    """n=1 equivalence: psd_ok(Sigma + iaJ) iff det Sigma >= Delta(x,p)^2 + a^2."""
    r = np.random.default_rng(SEED + 2)
    disagreements = banded = 0
    for _ in range(10_000):
        g = r.normal(size=(2, 2)) * r.uniform(0.1, 1.5)
        sigma = g @ g.T + 1e-3 * np.eye(2)
        a = r.uniform(0.0, 2.0)
        if a == 0.0:
            continue
        gap = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] ** 2 - a * a
        top = np.trace(sigma) + a
        if abs(gap) <= 10 * DEFAULT_TOL.psd_tol * max(1.0, top) ** 2:
            banded += 1
            continue
        _, psd_ok = hermitian_condition(sigma, standard_form(1, a))
        disagreements += psd_ok != (gap >= 0)
    return disagreements == 0, f"{disagreements} disagreements in 10000 samples ({banded} in boundary band)"


# ---------------------------------------------------------------- 3


@_timed(60.0)
def criterion_3():
    """Exhaustive MVE equals the brute-force oracle."""
    r = np.random.default_rng(SEED + 3)
    exh = MveConfig(n_subsets=EXHAUSTIVE)
    cases = [(1, int(r.integers(8, 13))) for _ in range(200)] + [(2, 10)] * 20
    bad = 0
    worst = 0.0
    for n, size in cases:
        cloud = PointCloud(n, r.standard_t(4, size=(size, 2 * n)))
        a, b = mve_estimate(cloud, exh), brute_force_mve(cloud)
        rel = abs(a.volume_proxy - b.volume_proxy) / b.volume_proxy
        worst = max(worst, rel)
        bad += a.subset != b.subset or rel > 1e-9
    return bad == 0, f"{bad} mismatches in {len(cases)} clouds, worst proxy rel diff {worst:.1e}"


# ---------------------------------------------------------------- 4


@_timed(60.0)
def criterion_4():
    """Williamson residuals, inversion law, monotonicity, Darboux spectrum identity."""
    r = np.random.default_rng(SEED + 4)
    res = minv = mono = 0.0
    mono_fail = 0
    for i in range(1000):
        dim = (2, 4, 6, 8)[i % 4]
        n = dim // 2
        m = random_pd(r, dim)
        wd = williamson(m)
        j = standard_j(n)
        lam2 = np.concatenate([wd.Lambda, wd.Lambda])
        res = max(res, float(np.max(np.abs(wd.S.T @ j @ wd.S - j))), float(np.max(np.abs(wd.S.T @ m @ wd.S - np.diag(lam2)))))
        lam = sigma_spectrum(m).lambdas
        minv = max(minv, _rel(sigma_spectrum(np.linalg.inv(m)).lambdas, (1.0 / lam)[::-1]))
        t = r.normal(size=dim)
        bigger = m + np.outer(t, t)
        mono_fail += not spectrum_monotonic_check(m, bigger)
        mono = max(mono, float(np.max(lam - sigma_spectrum(bigger).lambdas)))
    spec_err = 0.0
    for _ in range(200):
        n = int(r.integers(1, 5))
        g = random_invertible(r, 2 * n)
        om = g.T @ standard_j(n) @ g
        spec = form_from_omega(0.5 * (om - om.T))
        m = random_pd(r, 2 * n)
        f = spec.darboux_f
        spec_err = max(spec_err, _rel(omega_spectrum(m, spec).lambdas, sigma_spectrum(f @ m @ f.T).lambdas))
    ok = res <= 1e-9 and minv <= 1e-8 and mono_fail == 0 and mono <= 1e-8 and spec_err <= 1e-8
    return ok, (
        f"williamson residual {res:.1e}, inversion {minv:.1e}, monotonicity failures {mono_fail} "
        f"(max excess {max(mono, 0.0):.1e}), darboux identity {spec_err:.1e}"
    )


# ---------------------------------------------------------------- 5


@_timed(30.0)
def criterion_5():
    """Capacity invariance under symplectic maps; n=1 capacity equals ellipse area."""
    r = np.random.default_rng(SEED + 5)
    worst_spec = worst_cap = 0.0
    for i in range(500):
        n = 1 + i % 4
        s = random_symplectic(r, n, factors=3 + i % 4)
        q = random_pd(r, 2 * n)
        worst_spec = max(worst_spec, _rel(sigma_spectrum(s.T @ q @ s).lambdas, sigma_spectrum(q).lambdas))
        c0 = capacity(Ellipsoid(None, q))
        c1 = capacity(Ellipsoid(None, s @ q @ s.T))
        worst_cap = max(worst_cap, abs(c1 - c0) / c0)
    worst_area = 0.0
    for _ in range(200):
        a, b = np.exp(r.uniform(-3, 3, size=2))
        worst_area = max(worst_area, abs(capacity(Ellipsoid(None, np.diag([a, b]))) / (math.pi * math.sqrt(a * b)) - 1))
    ok = worst_spec <= 1e-8 and worst_cap <= 1e-8 and worst_area <= 1e-9
    return ok, f"spectrum {worst_spec:.1e}, capacity {worst_cap:.1e}, ellipse area {worst_area:.1e}"


# ---------------------------------------------------------------- 6


def _quadrature_quantile(dof, alpha):
    def cdf(q):
        return quad(lambda x: x ** (dof / 2 - 1) * math.exp(-x / 2) / (2 ** (dof / 2) * math.gamma(dof / 2)), 0, q, epsabs=1e-13, epsrel=1e-12, limit=200)[0]

    return brentq(lambda q: cdf(q) - alpha, 1e-9, 200.0, xtol=1e-14, rtol=1e-15)


@_timed(5.0)
def criterion_6():
    """Chi-square quantile round trip, closed forms and quadrature oracle."""
    trip = 0.0
    for dof in (2, 4, 8):
        for alpha in np.linspace(0.01, 0.99, 99):
            trip = max(trip, abs(chi2_cdf(chi2_quantile(dof, alpha), dof) - alpha))
    analytic = max(
        abs(chi2_quantile(2, 0.5) - 2 * math.log(2)),
        abs(chi2_quantile(2, 0.95) + 2 * math.log(0.05)),
    )
    quadr = max(abs(chi2_quantile(4, a) - _quadrature_quantile(4, a)) for a in (0.1, 0.5, 0.75, 0.9, 0.95, 0.99))
    ok = trip <= 1e-10 and analytic <= 1e-10 and quadr <= 1e-8
    return ok, f"round trip {trip:.1e}, analytic {analytic:.1e}, dof=4 quadrature {quadr:.1e}"


# ---------------------------------------------------------------- 7


@_timed(30.0)
def criterion_7():
    """Capacity verdict agrees with the PSD verdict for Omega = eps J; boundary construction."""
    r = np.random.default_rng(SEED + 7)
    disagreements = banded = 0
    for _ in range(1000):
        n = int(r.integers(1, 4))
        eps = r.uniform(1e-3, 2.0)
        spec = standard_form(n, eps)
        q, _ = np.linalg.qr(r.normal(size=(2 * n, 2 * n)))
        sigma = (q * np.exp(r.uniform(np.log(0.05), np.log(4.0), size=2 * n))) @ q.T
        min_eig, psd = hermitian_condition(sigma, spec)
        if abs(min_eig) <= 10 * DEFAULT_TOL.psd_tol * max(1.0, np.linalg.norm(sigma, 2) + eps):
            banded += 1
            continue
        _, _, cap_ok = capacity_criterion(EllipsoidEstimate.from_covariance(sigma), spec)
        disagreements += cap_ok != psd
    worst_eig = worst_cap = 0.0
    for _ in range(100):
        n = int(r.integers(1, 4))
        eps = r.uniform(1e-3, 2.0)
        s = random_symplectic(r, n)
        sigma = eps * s.T @ s
        spec = standard_form(n, eps)
        worst_eig = max(worst_eig, abs(hermitian_condition(sigma, spec)[0]))
        value, threshold, _ = capacity_criterion(EllipsoidEstimate.from_covariance(sigma), spec)
        worst_cap = max(worst_cap, abs(value - threshold) / threshold)
    ok = disagreements == 0 and worst_eig <= 1e-8 and worst_cap <= 1e-8
    return ok, (
        f"{disagreements} disagreements in 1000 ({banded} in band); boundary |min_eig| {worst_eig:.1e}, "
        f"capacity vs threshold {worst_cap:.1e}"
    )


# ---------------------------------------------------------------- 8


@_timed(30.0)
def criterion_8():
    """Capacity constant along oscillator and shear flows of a 40-point cloud."""
    r = np.random.default_rng(SEED + 8)
    cloud = PointCloud(1, r.normal(size=(40, 2)) * [3.0, 1.2])
    times = [0.0, 0.4, 1.1, 2.3, 4.7, 9.5]
    parts = []
    ok = True
    for name in ("oscillator", "free"):
        h = canned_hamiltonian(name, 1)
        rows = invariance_experiment(cloud, h, times)
        caps = np.array([row.capacity for row in rows])
        drift = float(np.max(np.abs(caps - caps[0])) / caps[0])
        verdicts = {(row.psd_ok, row.capacity_ok) for row in rows}
        res = max(float(np.max(np.abs(flow_map(h, t).S.T @ standard_j(1) @ flow_map(h, t).S - standard_j(1)))) for t in times)
        ok &= drift <= 1e-7 and len(verdicts) == 1 and res <= 1e-9
        parts.append(f"{name}: drift {drift:.1e}, verdicts {sorted(verdicts)}, symplecticity {res:.1e}")
    return ok, "; ".join(parts)


# ---------------------------------------------------------------- 9


def _cli(*argv):
    out, err = StringIO(), StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue(), err.getvalue()


@_timed(10.0)
def criterion_9():
    """Repeated CLI runs are byte-identical; exit codes 0 / 1 / 2."""
    r = np.random.default_rng(SEED + 9)
    with tempfile.TemporaryDirectory() as tmp:
        cloud = os.path.join(tmp, "cloud.csv")
        with open(cloud, "w") as fh:
            fh.write("x1,x2,p1,p2\n")
            for row in r.normal(size=(30, 4)):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        counter = os.path.join(tmp, "counter.json")
        with open(counter, "w") as fh:
            json.dump({"sigma": COUNTEREXAMPLE.tolist(), "m0": 1.0}, fh)
        eye = os.path.join(tmp, "eye.json")
        with open(eye, "w") as fh:
            json.dump(np.eye(4).tolist(), fh)
        bad = os.path.join(tmp, "bad.csv")
        with open(bad, "w") as fh:
            fh.write("x1,p1\n1,2\n3\n")

        runs = {
            "estimate": ("estimate", "--cloud", cloud, "--subsets", "500", "--seed", "11"),
            "analyze": ("analyze", "--cloud", cloud, "--subsets", "500", "--seed", "11"),
            "analyze-table": ("analyze", "--cloud", cloud, "--output", "table"),
        }
        identical = all(_cli(*argv) == _cli(*argv) for argv in runs.values())
        codes = {
            "estimate": _cli(*runs["estimate"])[0],
            "identity": _cli("analyze", "--sigma-json", eye)[0],
            "counterexample": _cli("analyze", "--sigma-json", counter)[0],
            "malformed": _cli("estimate", "--cloud", bad)[0],
            "missing omega": _cli("analyze", "--sigma-json", eye, "--omega", os.path.join(tmp, "none.json"))[0],
        }
    want = {"estimate": 0, "identity": 0, "counterexample": 1, "malformed": 2, "missing omega": 2}
    return identical and codes == want, f"byte-identical={identical}, exit codes {codes}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


def _line(i, ok, detail):
    return f"criterion {i}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("index", range(1, len(CRITERIA) + 1))
def test_criterion(index, acceptance_log):
    fn = CRITERIA[index - 1]
    ok, detail = fn()
    line = _line(index, ok, detail)
    acceptance_log.append(line)
    print(line)
    assert ok, f"{fn.__doc__.strip()} -> {detail}"


if __name__ == "__main__":
    results = [fn() for fn in CRITERIA]
    for i, (ok, detail) in enumerate(results, 1):
        print(_line(i, ok, detail))
    sys.exit(0 if all(ok for ok, _ in results) else 1)
