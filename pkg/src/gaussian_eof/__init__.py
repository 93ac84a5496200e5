"""Entanglement of formation of symmetric two-mode Gaussian states."""
from .closed_form import (
    EntanglementReport,
    c_plus_minus,
    delta_of_tmss,
    entropy_of_tmss,
    eof_symmetric,
    epr_uncertainty_of_standard_form,
    f_of_delta,
    is_entangled,
    r_of_delta,
)
from .errors import (
    AsymmetricStateError,
    BoundaryStateError,
    ConditioningError,
    GaussianEofError,
    InputError,
    InvalidCovarianceError,
    RangeError,
    TruncationError,
)
from .symplectic import (
    StandardFormParams,
    apply_balancing_squeezing,
    psd_order,
    reduce_to_standard_form,
    tmss_cm,
    validate_cm,
)

__version__ = "0.1.0"
