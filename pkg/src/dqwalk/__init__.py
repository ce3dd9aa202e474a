"""Discrete-time quantum walks on the integer line with coin decoherence."""

__version__ = "0.1.0"

from .errors import ContinuationError, NumericalError, ResourceError, ValidationError, WalkError  # noqa: E402
from .evolution import (  # noqa: E402
    CharFnSample,
    ConvergenceReport,
    DistributionTable,
    LatticeDensity,
    char_fn_exact,
    char_fn_values,
    convergence_study,
    distribution_density_matrix,
    distribution_fourier,
    evolve_density,
    position_moments,
    rescaled_pmf,
    trajectories,
)
from .limit import (  # noqa: E402
    LimitModel,
    MomentTable,
    RootTrack,
    build_limit_model,
    critical_exponent,
    degenerate_limits,
    density_mass,
    generating_fn,
    limit_char_fn,
    limit_density,
    moments_closed,
    moments_numeric,
    t_poly,
    track_root,
    variance_closed_form,
    variance_perturbative,
)
from .pauli import (  # noqa: E402
    SIGMA,
    char_poly,
    cluster_roots,
    det_poly,
    eigen_multiplicities,
    eigenvalues4,
    geometric_dim,
    pauli_compose,
    pauli_decompose,
    poly_eval,
    poly_roots,
)
from .spectral import (  # noqa: E402
    CoinClass,
    DegenerateCase,
    SpectralReport,
    classify,
    classify_superoperator,
    peripheral_gap,
    peripheral_gaps,
    u2_condition,
)
from .superop import ContractionReport, Superoperator, SuperoperatorMatrix, apply_pauli  # noqa: E402
from .walk import (  # noqa: E402
    CoinOperator,
    InitialCoinState,
    KrausSet,
    coin_from_u2,
    coin_o2,
    hadamard,
    kraus_from_matrices,
    momentum_coin,
    projective_kraus,
)
