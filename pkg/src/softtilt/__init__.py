"""Exponential-tilt updates over discrete joint tables.

Exact-rational probability tables, closed-form KL-regularized solvers,
interaction extraction with reward calibration, gauge-class comparison,
cross-direction coherence audits, and certified countable-support
log-normalizers. See the README for the JSON formats and the CLI.
"""

from .coherence import (
    DirectionPair,
    EventValueFunction,
    OrderIndependenceReport,
    build_problem,
    build_swapped_problem,
    commutativity_residual,
    order_independence_check,
)
from .countable import (
    CertificateStatus,
    CountableFamily,
    TruncatedTilt,
    TruncationCertificate,
    log_normalizer_truncated,
    tilt_truncated,
)
from .dist import (
    Assignment,
    DistVector,
    JointTable,
    VariableSpec,
    as_assignment,
    conditional,
    iter_group_assignments,
    marginal,
    pmi,
    total_variation,
)
from .errors import (
    CoverageMismatch,
    DegenerateProblem,
    InadmissibleSignal,
    InfiniteInteraction,
    InvalidBounds,
    MissingContext,
    MissingEventValue,
    NotFinite,
    SchemaError,
    SoftTiltError,
    SupportViolation,
    UndefinedPMI,
    ValidationError,
    ZeroMassContext,
)
from .fixtures import fixture_path, joint_f1, joint_f3
from .identify import (
    CalibrationResult,
    Direction,
    GaugeComparison,
    GaugeShift,
    InteractionTable,
    RewardTable,
    apply_gauge,
    calibrate_rewards,
    check_admissibility,
    construct_posterior,
    default_direction,
    gauge_equivalent,
    identify_interaction,
)
from .tilt import (
    SoftSolution,
    SoftUpdateProblem,
    SolverConfig,
    kl_decomposition_residual,
    kl_divergence,
    logsumexp,
    objective_value,
    soft_value,
    solve_tilt,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CalibrationResult",
    "CertificateStatus",
    "CountableFamily",
    "CoverageMismatch",
    "DegenerateProblem",
    "Direction",
    "DirectionPair",
    "DistVector",
    "EventValueFunction",
    "GaugeComparison",
    "GaugeShift",
    "InadmissibleSignal",
    "InfiniteInteraction",
    "InteractionTable",
    "InvalidBounds",
    "JointTable",
    "MissingContext",
    "MissingEventValue",
    "NotFinite",
    "OrderIndependenceReport",
    "RewardTable",
    "SchemaError",
    "SoftSolution",
    "SoftTiltError",
    "SoftUpdateProblem",
    "SolverConfig",
    "SupportViolation",
    "TruncatedTilt",
    "TruncationCertificate",
    "UndefinedPMI",
    "ValidationError",
    "VariableSpec",
    "ZeroMassContext",
    "apply_gauge",
    "as_assignment",
    "build_problem",
    "build_swapped_problem",
    "calibrate_rewards",
    "check_admissibility",
    "commutativity_residual",
    "conditional",
    "construct_posterior",
    "default_direction",
    "fixture_path",
    "gauge_equivalent",
    "identify_interaction",
    "iter_group_assignments",
    "joint_f1",
    "joint_f3",
    "kl_decomposition_residual",
    "kl_divergence",
    "log_normalizer_truncated",
    "logsumexp",
    "marginal",
    "objective_value",
    "order_independence_check",
    "pmi",
    "soft_value",
    "solve_tilt",
    "tilt_truncated",
    "total_variation",
    "__version__",
]
