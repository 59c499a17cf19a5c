"""Dissipative stabilization of grid states on a truncated Fock space.

Engine layers: operator construction (fock), state families and phase
space tools (states), the Lindblad generator with adaptive integration
(lindblad), the reduced circle-diffusion spectral theory (spectral), the
orchestrated studies (experiments), and deterministic file output (io).
"""

__version__ = "0.1.0"

from .errors import (
    CertificationFailureError,
    ContractViolationError,
    GkpsimError,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidRequestError,
    InvariantBreachError,
    NonConvergenceError,
    RefinementFailureError,
    ShapeMismatchError,
    StiffFailureError,
    SweepFailureError,
    TruncationError,
    UnderflowHorizonError,
    UnsupportedError,
)
from .fock import (
    FockOperator,
    InteriorProjector,
    build_four_dissipators,
    build_ladder,
    build_number,
    build_quadratures,
    build_two_dissipators,
    channel_adjoint_term,
    default_interior,
    spectral_function,
)
from .states import (
    GkpParams,
    LogicalFrame,
    QuantumState,
    WignerGrid,
    basis_state,
    build_codeword,
    build_logical_frame,
    build_logical_state,
    coherent,
    dominant_pure_component,
    fidelity,
    vacuum,
    wigner,
    wigner_marginal_x,
)
from .lindblad import (
    LindbladModel,
    RecordSpec,
    SteadyStateResult,
    ToleranceSpec,
    TrajectoryRecord,
    adjoint_duality_residual,
    apply_adjoint,
    apply_generator,
    integrate,
    loss_model,
    periodic_adjoint_residual,
    stabilizer_commutator_norm,
    steady_state,
    two_dissipator_model,
)
from .spectral import (
    GapResult,
    HardyReport,
    ReducedParams,
    SpectralProblem,
    build_problem,
    dirichlet_form,
    gap_table,
    hardy_constant,
    hardy_pair,
    predicted_rate,
    project_mean_zero,
    rayleigh_quotient,
    sigma_from_physical,
    spectral_gap,
    verify_hardy,
    weight_bounds,
    weighted_mean,
)
from .experiments import (
    ContrastDecayResult,
    CrossCheckReport,
    DecayFit,
    EnergyCertificate,
    PowerLawFit,
    QunaughtStudyResult,
    StabilizationResult,
    SweepResult,
    SweepSpec,
    certify_energy_bound,
    cross_check_reduced_model,
    fit_power_law,
    reduced_weighted_mean,
    run_contrast_decay,
    run_qunaught_noise_study,
    run_scaling_sweep,
    run_stabilization,
)
