"""Minimum Volume Ellipsoid estimation of location and scatter for phase-space clouds.

Candidates are built from subsets of ``2n + 1`` points: the subset mean and
covariance give a trial ellipsoid, which is inflated until it covers ``k``
cloud points. The candidate with the smallest volume wins. Subsets are either
enumerated exhaustively or drawn from a counter-based generator keyed by
``(seed, subset_index)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
import scipy.linalg

from .errors import DegenerateScatter, GeneralPositionFailure, InvalidInput, NotPositiveSemidefinite, TooLarge
from .numerics import DEFAULT_TOL, Tolerances, as_symmetric, chi2_quantile
from .phase_space import PointCloud

EXHAUSTIVE = "exhaustive"

# Subset covariance is rejected when det(C) < DEGENERACY * (trace(C) / dim) ** dim.
DEGENERACY = 1e-12
BRUTE_FORCE_LIMIT = 10**6
COVERAGE_SLACK = 1e-12
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class MveConfig:
    """Estimator settings. ``None`` for ``k`` / ``m_alpha`` selects the defaults
    ``k = (N + 2n + 1) // 2`` and ``m_alpha = k / N``."""

    k: int | None = None
    m_alpha: float | None = None
    n_subsets: Union[int, str] = 5000
    seed: int = 0

    def __post_init__(self):
        if self.n_subsets != EXHAUSTIVE:
            if not isinstance(self.n_subsets, int) or isinstance(self.n_subsets, bool) or self.n_subsets < 1:
                raise InvalidInput(f"n_subsets must be a positive integer or {EXHAUSTIVE!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InvalidInput("seed must be an integer")
        if self.m_alpha is not None and not (0.0 < self.m_alpha < 1.0):
            raise InvalidInput(f"m_alpha must lie in (0, 1), got {self.m_alpha!r}")

    @property
    def exhaustive(self) -> bool:
        return self.n_subsets == EXHAUSTIVE

    def resolve(self, size: int, n: int) -> tuple[int, float]:
        """Return ``(k, alpha)`` for a cloud of ``size`` points with n degrees of freedom."""
        k = (size + 2 * n + 1) // 2 if self.k is None else self.k
        if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not (size // 2 + 1 <= k <= size):
            raise InvalidInput(f"k must lie in [{size // 2 + 1}, {size}], got {k!r}")
        alpha = k / size if self.m_alpha is None else self.m_alpha
        if not 0.0 < alpha < 1.0:
            # k == N would put the calibration quantile at infinity
            raise InvalidInput(f"calibration level k/N = {alpha} must lie in (0, 1); set m_alpha")
        return int(k), float(alpha)


@dataclass(frozen=True, eq=False)
class EllipsoidEstimate:
    """MVE output. The ellipsoid is ``{z : (z - center)^T sigma^{-1} (z - center) <= raw_m2}``;
    ``sigma`` is the defining subset's covariance (shape only, see :func:`cov_matrix`)."""

    n: int
    k: int
    center: np.ndarray
    sigma: np.ndarray
    m0: float
    raw_m2: float
    subset: tuple[int, ...]
    volume_proxy: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "center": [float(v) for v in self.center],
            "sigma": [[float(v) for v in row] for row in self.sigma],
            "m0": float(self.m0),
            "raw_m2": float(self.raw_m2),
            "subset": [int(i) for i in self.subset],
            "volume_proxy": float(self.volume_proxy),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EllipsoidEstimate":
        return cls(
            n=int(d["n"]),
            k=int(d["k"]),
            center=np.array(d["center"], dtype=float),
            sigma=np.array(d["sigma"], dtype=float),
            m0=float(d["m0"]),
            raw_m2=float(d["raw_m2"]),
            subset=tuple(int(i) for i in d["subset"]),
            volume_proxy=float(d["volume_proxy"]),
        )

    @classmethod
    def from_covariance(cls, sigma, m0: float = 1.0, center=None) -> "EllipsoidEstimate":
        """Wrap a known covariance matrix so that ``cov_matrix`` returns it unchanged."""
        s = as_symmetric(sigma)
        dim = s.shape[0]
        if dim % 2:
            raise InvalidInput("covariance matrix must have even size 2n")
        if not (math.isfinite(m0) and m0 > 0):
            raise InvalidInput(f"m0 must be positive, got {m0!r}")
        if np.linalg.eigvalsh(s)[0] < -DEFAULT_TOL.psd_tol * max(1.0, float(np.max(np.abs(s)))):
            raise NotPositiveSemidefinite("covariance matrix is not positive semidefinite")
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        det = float(np.linalg.det(s))
        proxy = math.sqrt(det) * m0**dim if det > 0 else 0.0
        return cls(dim // 2, 0, c, s, float(m0), float(m0) ** 2, (), proxy)

    def __eq__(self, other):
        if not isinstance(other, EllipsoidEstimate):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def mahalanobis_sq(z, center, sigma):
    """``(z - center)^T sigma^{-1} (z - center)`` via a Cholesky solve.

    ``z`` may be one vector or an ``(N, 2n)`` array of row vectors.
    """
    s = np.asarray(sigma, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(s, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError):
        raise DegenerateScatter("scatter matrix is not positive definite") from None
    diff = np.asarray(z, dtype=float) - np.asarray(center, dtype=float)
    if diff.shape[-1] != s.shape[0]:
        raise InvalidInput("dimension mismatch between points and scatter matrix")
    sol = scipy.linalg.cho_solve(factor, diff.T)
    out = np.einsum("i...,i...->...", diff.T, sol)
    return np.maximum(out, 0.0) if out.ndim else max(float(out), 0.0)


def _lex_order(points: np.ndarray) -> np.ndarray:
    return np.lexsort(points.T[::-1])


def _validate_cloud(cloud: PointCloud) -> None:
    if cloud.size < 2 * cloud.n + 2:
        raise InvalidInput(f"need at least 2n+2 = {2 * cloud.n + 2} points, got {cloud.size}")


def _subset_batches(size: int, m: int, config: MveConfig, chunk: int) -> Iterator[np.ndarray]:
    if config.exhaustive:
        combos = itertools.combinations(range(size), m)
        while True:
            block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.intp)
            if block.size == 0:
                return
            yield block.reshape(-1, m)
    else:
        seed = config.seed & (2**64 - 1)
        for start in range(0, config.n_subsets, chunk):
            stop = min(start + chunk, config.n_subsets)
            block = np.empty((stop - start, m), dtype=np.intp)
            for row, i in enumerate(range(start, stop)):
                rng = np.random.default_rng([seed, i])
                block[row] = np.sort(rng.choice(size, size=m, replace=False))
            yield block


def _evaluate(x: np.ndarray, idx: np.ndarray, k: int, n: int):
    """Score a batch of subsets (rows of indices into the sorted cloud ``x``)."""
    dim = 2 * n
    pts = x[idx]
    mu = pts.mean(axis=1)
    dev = pts - mu[:, None, :]
    cov = np.einsum("sij,sik->sjk", dev, dev) / dim
    det = np.linalg.det(cov)
    tr = np.trace(cov, axis1=1, axis2=2)
    ok = (det > 0) & (det >= DEGENERACY * (tr / dim) ** dim)
    proxy = np.full(len(idx), np.inf)
    m2 = np.full(len(idx), np.nan)
    if np.any(ok):
        diff = x[None, :, :] - mu[ok][:, None, :]
        sol = np.linalg.solve(cov[ok], np.swapaxes(diff, 1, 2))
        dist = np.einsum("snd,sdn->sn", diff, sol)
        kth = np.partition(dist, k - 1, axis=1)[:, k - 1]
        m2[ok] = kth
        proxy[ok] = np.sqrt(det[ok]) * kth**n
    return proxy, m2, mu, cov


def mve_estimate(cloud: PointCloud, config: MveConfig = MveConfig(), tol: Tolerances = DEFAULT_TOL) -> EllipsoidEstimate:
    """Minimum Volume Ellipsoid by subset resampling (or exhaustive enumeration).

    The objective of a subset is ``sqrt(det C_s) * (m2_s) ** n`` where ``m2_s``
    is the k-th smallest squared Mahalanobis distance of the cloud. Ties go to
    the subset whose points, sorted lexicographically, compare smallest, so the
    result does not depend on the row order of the cloud.

    Raises:
        InvalidInput: cloud too small or bad configuration.
        GeneralPositionFailure: every candidate subset was degenerate.
    """
    _validate_cloud(cloud)
    n, size = cloud.n, cloud.size
    k, alpha = config.resolve(size, n)
    m = 2 * n + 1
    order = _lex_order(cloud.points)
    x = cloud.points[order]
    chunk = max(1, _CHUNK_ELEMENTS // (size * 2 * n))

    best = None  # (proxy, subset tuple in sorted indexing, m2, mu, cov)
    for idx in _subset_batches(size, m, config, chunk):
        proxy, m2, mu, cov = _evaluate(x, idx, k, n)
        if not np.any(np.isfinite(proxy)):
            continue
        low = proxy.min()
        for j in np.flatnonzero(proxy == low):
            key = (float(low), tuple(int(i) for i in idx[j]))
            if best is None or key < best[:2]:
                best = (*key, float(m2[j]), mu[j].copy(), cov[j].copy())
    if best is None:
        raise GeneralPositionFailure("no candidate subset is in general position")

    proxy, sub, raw_m2, center, sigma = best
    sigma = 0.5 * (sigma + sigma.T)
    m0 = math.sqrt(chi2_quantile(2 * n, alpha, tol))
    subset = tuple(sorted(int(order[i]) for i in sub))
    return EllipsoidEstimate(n, k, center, sigma, m0, raw_m2, subset, proxy)


def brute_force_mve(cloud: PointCloud, config: MveConfig = MveConfig(), tol: Tolerances = DEFAULT_TOL) -> EllipsoidEstimate:
    """Reference MVE: loops over every subset of size 2n+1 one at a time.

    Uses explicit inverses and ``np.cov`` so that it shares no numerical path
    with :func:`mve_estimate`; only the objective and tie-break rule are common.
    """
    _validate_cloud(cloud)
    n, size = cloud.n, cloud.size
    m = 2 * n + 1
    if math.comb(size, m) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"C({size}, {m}) = {math.comb(size, m)} subsets exceeds {BRUTE_FORCE_LIMIT}")
    k, alpha = config.resolve(size, n)
    order = _lex_order(cloud.points)
    x = cloud.points[order]

    best = None
    for sub in itertools.combinations(range(size), m):
        pts = x[list(sub)]
        cov = np.atleast_2d(np.cov(pts, rowvar=False))
        det = np.linalg.det(cov)
        if det <= 0 or det < DEGENERACY * (np.trace(cov) / (2 * n)) ** (2 * n):
            continue
        mu = pts.mean(axis=0)
        inv = np.linalg.inv(cov)
        d2 = sorted(float((z - mu) @ inv @ (z - mu)) for z in x)
        proxy = math.sqrt(det) * d2[k - 1] ** n
        key = (proxy, tuple(map(tuple, pts)))
        if best is None or key < best[0]:
            best = (key, sub, d2[k - 1], mu, cov)
    if best is None:
        raise GeneralPositionFailure("no candidate subset is in general position")
    (proxy, _), sub, raw_m2, center, sigma = best
    m0 = math.sqrt(chi2_quantile(2 * n, alpha, tol))
    subset = tuple(sorted(int(order[i]) for i in sub))
    return EllipsoidEstimate(n, k, center, sigma, m0, raw_m2, subset, proxy)


def cov_matrix(est: EllipsoidEstimate) -> tuple[np.ndarray, float]:
    """Calibrated covariance: ``Sigma = (raw_m2 / m0^2) * sigma`` so that
    ``(z - center)^T Sigma^{-1} (z - center) <= m0^2`` is exactly the MVE."""
    factor = est.raw_m2 / est.m0**2
    sigma = est.sigma if factor == 1.0 else factor * est.sigma
    return np.array(sigma, dtype=float), est.m0


def coverage_count(cloud: PointCloud, est: EllipsoidEstimate) -> int:
    """Number of cloud points inside the estimated ellipsoid at radius ``raw_m2``."""
    d2 = mahalanobis_sq(cloud.points, est.center, est.sigma)
    return int(np.count_nonzero(d2 <= est.raw_m2 * (1 + COVERAGE_SLACK)))
