"""Simulation and verification of the KCBS contextuality test with a single
photon in three optical modes."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ClosureFailure,
    ConfigError,
    DegenerateTarget,
    EmptyTally,
    IncompatiblePair,
    InvalidN,
    InvalidStage,
    KCBSError,
)
from .geometry import (  # noqa: E402
    OPTIMAL_THETA,
    QUANTUM_MIN,
    Pentagram,
    eq1_lhs,
    optimal_pentagram,
    pair_correlation,
    symmetric_pentagram,
)
from .lhv import cycle_min, eq1_min, eq1_value, eq2_min, eq2_value  # noqa: E402
from .photons import (  # noqa: E402
    DetectorModel,
    Estimate,
    TallyTable,
    blocked_click_rate,
    estimate_correlation,
    exact_overlap_term,
    overlap_term,
    sample_context,
)
from .pipeline import (  # noqa: E402
    ContextPipeline,
    build_pipeline,
    effective_vector,
    perturb,
    shared_measurement_audit,
)
from .qutrit import ModeObservable, QutritState, StageTransform, two_mode_unitary  # noqa: E402
from ._kernels import BACKEND  # noqa: E402
