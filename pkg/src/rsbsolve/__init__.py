"""Replica-symmetric and hierarchical variational pressures for
mean-field disordered spin models, with finite-size cross-checks."""

from .core import (
    BracketViolation,
    BudgetExceeded,
    DomainError,
    HopfieldParams,
    MaxIterations,
    NonFiniteIntegrand,
    OrderingViolation,
    QuadratureSpec,
    RangeViolation,
    RsbAnsatz,
    ShapeMismatch,
    SkParams,
    SolveReport,
    SusceptibilityDivergence,
    validate_ansatz,
)
from .quadrature import (
    THETA_FLOOR,
    gauss_expect,
    nested_log_cosh_expect,
    nested_ratio_expect,
)
from .sk import (
    SkEvaluation,
    sk_pressure_krsb,
    sk_pressure_rs,
    sk_sce_krsb,
    sk_sce_rs,
)
from .hopfield import (
    HopEvaluation,
    QDenominators,
    hop_p_closed_form,
    hop_pressure_krsb,
    hop_pressure_rs,
    hop_q_denominators,
    hop_sce_krsb,
    hop_sce_rs,
)
from .solver import (
    SolverOptions,
    ThetaExtremum,
    damped_fixed_point,
    default_starts,
    extremize_theta,
    golden_section_max,
    isotonic_nondecreasing,
    solve_model,
    stationarity_check,
)
from .oracle import (
    DerivativeCheck,
    Estimate,
    HopfieldDisorderSample,
    InterpolationPoint,
    MetropolisResult,
    OverlapHistogram,
    SkDisorderSample,
    enumerate_hopfield_pressure,
    enumerate_sk_pressure,
    hopfield_disorder_sample,
    interpolation_derivative_check,
    metropolis_run,
    metropolis_state_trace,
    overlap_histogram,
    sk_disorder_sample,
    substream,
)

__version__ = "0.1.0"

__all__ = [
    "BracketViolation",
    "BudgetExceeded",
    "DerivativeCheck",
    "DomainError",
    "Estimate",
    "HopEvaluation",
    "HopfieldDisorderSample",
    "HopfieldParams",
    "InterpolationPoint",
    "MaxIterations",
    "MetropolisResult",
    "NonFiniteIntegrand",
    "OrderingViolation",
    "OverlapHistogram",
    "QDenominators",
    "QuadratureSpec",
    "RangeViolation",
    "RsbAnsatz",
    "ShapeMismatch",
    "SkDisorderSample",
    "SkEvaluation",
    "SkParams",
    "SolveReport",
    "SolverOptions",
    "SusceptibilityDivergence",
    "THETA_FLOOR",
    "ThetaExtremum",
    "damped_fixed_point",
    "default_starts",
    "enumerate_hopfield_pressure",
    "enumerate_sk_pressure",
    "extremize_theta",
    "gauss_expect",
    "golden_section_max",
    "hop_p_closed_form",
    "hop_pressure_krsb",
    "hop_pressure_rs",
    "hop_q_denominators",
    "hop_sce_krsb",
    "hop_sce_rs",
    "hopfield_disorder_sample",
    "interpolation_derivative_check",
    "isotonic_nondecreasing",
    "metropolis_run",
    "metropolis_state_trace",
    "nested_log_cosh_expect",
    "nested_ratio_expect",
    "overlap_histogram",
    "sk_disorder_sample",
    "sk_pressure_krsb",
    "sk_pressure_rs",
    "sk_sce_krsb",
    "sk_sce_rs",
    "solve_model",
    "stationarity_check",
    "substream",
    "validate_ansatz",
]
