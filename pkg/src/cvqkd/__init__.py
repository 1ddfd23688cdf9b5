"""Gaussian-state toolkit for continuous-variable QKD.

Covariance-matrix operations, source and channel noise models,
collective-attack secret key rates with finite-statistics worst cases, and
synthetic homodyne tomography, plus the `cvqkd` command line front end.
"""

from .errors import (
    CalibrationError,
    ConfigError,
    CvqkdError,
    DatasetParseError,
    DegenerateBoxError,
    EmptyDatasetError,
    FormulaDomainError,
    InvalidArgumentError,
    InvalidStateError,
    NumericalDegeneracyError,
    OutOfRangeError,
    ProtocolIncompleteError,
)
from .gaussian import (
    CovarianceMatrix,
    NormalForm,
    SymplecticInvariants,
    apply_symplectic,
    balanced_beamsplitter,
    conditional_variance,
    covariance,
    covariance_from_json,
    covariance_to_json,
    db_to_variance,
    epr_product,
    invariants,
    is_physical,
    normal_form,
    normal_form_matrix,
    rotation,
    squeeze,
    squeezed_vacuum,
    symplectic_eigenvalues,
    symplectic_eigenvalues_from_invariants,
    symplectic_form,
    tensor,
    vacuum,
    variance_to_db,
    wigner_density,
)
from .keyrate import (
    HolevoIntermediates,
    KeyRateReport,
    WorstCaseBreakdown,
    entropy_f,
    holevo,
    holevo_intermediates,
    holevo_oracle,
    mi_oracle,
    mutual_information,
    secret_key_rate,
    worst_case_breakdown,
    worst_case_key_rate,
)
from .noise import (
    ChannelParams,
    SourceParams,
    SqueezingSpec,
    detection_noise,
    epr_theory,
    loss_channel,
    make_epr_state,
    phase_noise_channel,
    phase_noise_monte_carlo,
    pump_for_target_squeezing,
    pump_to_variances,
    r_from_measured,
)
from .tomography import (
    CANONICAL_SETTINGS,
    HomodyneDataset,
    MeasurementSetting,
    ReconstructionResult,
    load_dataset,
    marginal_covariance,
    reconstruct,
    sample_homodyne,
    save_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ConfigError",
    "CvqkdError",
    "DatasetParseError",
    "DegenerateBoxError",
    "EmptyDatasetError",
    "FormulaDomainError",
    "InvalidArgumentError",
    "InvalidStateError",
    "NumericalDegeneracyError",
    "OutOfRangeError",
    "ProtocolIncompleteError",
    "CovarianceMatrix",
    "NormalForm",
    "SymplecticInvariants",
    "apply_symplectic",
    "balanced_beamsplitter",
    "conditional_variance",
    "covariance",
    "covariance_from_json",
    "covariance_to_json",
    "db_to_variance",
    "epr_product",
    "invariants",
    "is_physical",
    "normal_form",
    "normal_form_matrix",
    "rotation",
    "squeeze",
    "squeezed_vacuum",
    "symplectic_eigenvalues",
    "symplectic_eigenvalues_from_invariants",
    "symplectic_form",
    "tensor",
    "vacuum",
    "variance_to_db",
    "wigner_density",
    "HolevoIntermediates",
    "KeyRateReport",
    "WorstCaseBreakdown",
    "entropy_f",
    "holevo",
    "holevo_intermediates",
    "holevo_oracle",
    "mi_oracle",
    "mutual_information",
    "secret_key_rate",
    "worst_case_breakdown",
    "worst_case_key_rate",
    "ChannelParams",
    "SourceParams",
    "SqueezingSpec",
    "detection_noise",
    "epr_theory",
    "loss_channel",
    "make_epr_state",
    "phase_noise_channel",
    "phase_noise_monte_carlo",
    "pump_for_target_squeezing",
    "pump_to_variances",
    "r_from_measured",
    "CANONICAL_SETTINGS",
    "HomodyneDataset",
    "MeasurementSetting",
    "ReconstructionResult",
    "load_dataset",
    "marginal_covariance",
    "reconstruct",
    "sample_homodyne",
    "save_dataset",
    "__version__",
]
