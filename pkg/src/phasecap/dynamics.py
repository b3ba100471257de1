"""Linear Hamiltonian flows and the invariance experiment built on them.

For ``H(z) = z^T H z / 2`` the equations of motion are ``dz/dt = J H z`` and
the time-t flow is the symplectic matrix ``exp(t J H)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FlowOverflow, InvalidInput
from .mve import EllipsoidEstimate, MveConfig, EXHAUSTIVE, cov_matrix, mve_estimate
from .numerics import DEFAULT_TOL, Tolerances, as_symmetric
from .phase_space import PointCloud, SymplecticFormSpec, standard_form, standard_j
from .uncertainty import analyze

CANNED = ("oscillator", "free", "coupled")

# Beyond this generator 1-norm the squaring phase amplifies rounding past any
# useful accuracy (each squaring roughly doubles the relative error).
MAX_GENERATOR_NORM = 1e6
_ALIASES = {
    "harmonic": "oscillator",
    "harmonic_oscillator": "oscillator",
    "free_particle": "free",
    "free-particle": "free",
    "shear": "free",
    "coupled_oscillators": "coupled",
}


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    H: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        h = as_symmetric(self.H)
        if h.shape[0] % 2:
            raise InvalidInput("Hamiltonian matrix must have even size 2n")
        object.__setattr__(self, "H", h)

    @property
    def n(self) -> int:
        return self.H.shape[0] // 2


@dataclass(frozen=True, eq=False)
class FlowMap:
    S: np.ndarray
    t: float


def canned_hamiltonian(name: str, n: int) -> QuadraticHamiltonian:
    """Named quadratic Hamiltonians with unit masses and frequencies.

    ``oscillator``: ``(|x|^2 + |p|^2) / 2``; ``free``: ``|p|^2 / 2``;
    ``coupled``: a chain of n >= 2 unit masses joined by unit springs with
    fixed ends, potential ``x^T K x / 2`` with ``K = tridiag(-1, 2, -1)``.
    """
    key = _ALIASES.get(name.lower(), name.lower())
    if key not in CANNED:
        raise InvalidInput(f"unknown Hamiltonian {name!r}; choose from {', '.join(CANNED)}")
    eye, zero = np.eye(n), np.zeros((n, n))
    if key == "oscillator":
        h = np.eye(2 * n)
    elif key == "free":
        h = np.block([[zero, zero], [zero, eye]])
    else:
        if n < 2:
            raise InvalidInput("coupled oscillators need n >= 2")
        k = 2 * eye - np.eye(n, k=1) - np.eye(n, k=-1)
        h = np.block([[k, zero], [zero, eye]])
    return QuadraticHamiltonian(h, key)


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Taylor kernel.

    The argument is scaled by ``2^-s`` until its 1-norm is at most 1/2, the
    series is summed until a term drops below unit roundoff relative to the
    partial sum, and the result is squared ``s`` times.
    """
    a = np.asarray(a, dtype=float)
    norm = float(np.max(np.sum(np.abs(a), axis=0))) if a.size else 0.0
    if not math.isfinite(norm):
        raise FlowOverflow("generator has non-finite entries")
    if norm > MAX_GENERATOR_NORM:
        raise FlowOverflow(f"generator norm {norm:.3e} exceeds {MAX_GENERATOR_NORM:.0e}")
    s = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm) + 1.0))
    b = a / 2.0**s
    eye = np.eye(a.shape[0])
    result, term = eye.copy(), eye.copy()
    eps = np.finfo(float).eps
    for j in range(1, 60):
        term = term @ b / j
        result = result + term
        if np.max(np.abs(term)) <= eps * np.max(np.abs(result)):
            break
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            result = result @ result
    if not np.all(np.isfinite(result)):
        raise FlowOverflow("matrix exponential overflowed")
    return result


def flow_map(h: QuadraticHamiltonian, t: float) -> FlowMap:
    """Time-t flow ``S_t = exp(t J H)``."""
    t = float(t)
    if not math.isfinite(t):
        raise InvalidInput("t must be finite")
    gen = t * (standard_j(h.n) @ h.H)
    return FlowMap(expm(gen), t)


def propagate(cloud: PointCloud, fmap: FlowMap) -> PointCloud:
    """Apply ``z -> S_t z`` to every point."""
    if fmap.S.shape != (2 * cloud.n, 2 * cloud.n):
        raise InvalidInput("flow map and cloud dimensions differ")
    return PointCloud(cloud.n, cloud.points @ fmap.S.T, cloud.position_unit, cloud.momentum_unit)


@dataclass(frozen=True, eq=False)
class ExperimentRow:
    t: float
    capacity: float
    psd_ok: bool
    capacity_ok: bool
    sigma: np.ndarray
    estimate: EllipsoidEstimate

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "capacity": self.capacity,
            "psd_ok": self.psd_ok,
            "capacity_ok": self.capacity_ok,
            "sigma": [[float(v) for v in row] for row in self.sigma],
        }


def invariance_experiment(
    cloud: PointCloud,
    h: QuadraticHamiltonian,
    times,
    spec: SymplecticFormSpec | None = None,
    config: MveConfig = MveConfig(n_subsets=EXHAUSTIVE),
    tol: Tolerances = DEFAULT_TOL,
) -> list[ExperimentRow]:
    """Estimate and analyze the cloud transported to each time in ``times``.

    Rows come back in the order of ``times``. Exhaustive MVE is required so
    that the estimate transforms exactly with the flow.
    """
    times = [float(t) for t in times]
    if not times:
        raise InvalidInput("need at least one time point")
    if not config.exhaustive:
        raise InvalidInput("the invariance experiment needs exhaustive MVE mode")
    if h.n != cloud.n:
        raise InvalidInput("Hamiltonian and cloud dimensions differ")
    spec = standard_form(cloud.n) if spec is None else spec
    rows = []
    for t in times:
        moved = propagate(cloud, flow_map(h, t))
        est = mve_estimate(moved, config, tol)
        report = analyze(est, spec, tol)
        sigma, _ = cov_matrix(est)
        rows.append(ExperimentRow(t, report.capacity_value, report.psd_ok, report.capacity_ok, sigma, est))
    return rows
