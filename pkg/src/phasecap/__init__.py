"""Robust covariance ellipsoids, symplectic spectra and classical uncertainty criteria."""

from .errors import (
    DegenerateForm,
    DegenerateScatter,
    FlowOverflow,
    GeneralPositionFailure,
    IngestError,
    InvalidBlocks,
    InvalidInput,
    NotPositiveDefinite,
    NotPositiveSemidefinite,
    PhaseCapError,
    TooLarge,
)
from .numerics import Tolerances, chi2_quantile, eig_herm_min, eig_sym, is_psd, sqrtm_psd
from .phase_space import (
    PointCloud,
    SymplecticFormSpec,
    build_form,
    darboux_factor,
    eval_form,
    form_from_omega,
    load_cloud,
    standard_form,
    standard_j,
)
from .mve import (
    EXHAUSTIVE,
    EllipsoidEstimate,
    MveConfig,
    brute_force_mve,
    cov_matrix,
    coverage_count,
    mahalanobis_sq,
    mve_estimate,
)
from .spectrum import (
    Ellipsoid,
    SymplecticSpectrum,
    WilliamsonDecomposition,
    capacity,
    normal_form_ellipsoid,
    omega_spectrum,
    sigma_spectrum,
    spectrum_monotonic_check,
    williamson,
)
from .uncertainty import (
    PairInequality,
    UncertaintyReport,
    analyze,
    capacity_criterion,
    hermitian_condition,
    pair_inequalities,
)
from .dynamics import (
    ExperimentRow,
    FlowMap,
    QuadraticHamiltonian,
    canned_hamiltonian,
    flow_map,
    invariance_experiment,
    propagate,
)

__version__ = "0.1.0"
