"""Discrete-time scattering quantum walks on star graphs with anomalies.

The walk lives on directed edge states and advances by one sparse unitary
step.  The package builds these operators for a family of structural
anomalies, reduces them to their invariant subspaces, analyzes spectra
and eigenphase shifts, and runs the searches the anomalies enable.
"""

from .collapse import (
    ReducedBasis,
    ReducedOperator,
    invariant_basis,
    lift,
    project,
    reduce_operator,
)
from .edgespace import (
    BasisLabel,
    EdgeBasis,
    WalkState,
    edge_probabilities,
    make_basis,
    make_state,
)
from .errors import (
    AnomalyWalkError,
    ConfigurationError,
    DimensionMismatchError,
    IndexRangeError,
    InsufficientDataError,
    InvarianceError,
    MatchingError,
    NoPredictionError,
    NothingToFindError,
    NumericalFailureError,
    SelfEdgeError,
    SizeError,
    SpecSemanticError,
    SpecSyntaxError,
    SubspaceTooLargeError,
)
from .numerics import DEFAULT_POLICY, NumericPolicy
from .perturb import (
    EigenShift,
    ScalingFit,
    SweepResult,
    build_unperturbed,
    eigenphase_shifts,
    fit_scaling,
    limit_reduced_operator,
    perturbation_sweep,
)
from .search import (
    BaselineResult,
    BaselineStatistics,
    InitialStateKind,
    MeasurementResult,
    SearchResult,
    StepRecord,
    baseline_statistics,
    classical_baseline,
    family_seeds,
    initial_state,
    measure_accessible,
    predicted_hitting_step,
    run_search,
)
from .spectral import Spectrum, eigendecompose, power_apply
from .stargraph import (
    Anomaly,
    PhaseAngle,
    StarGraph,
    build_star,
    parse_spec,
    serialize_spec,
)
from .stepop import (
    StepOperator,
    UnitarityReport,
    apply_adjoint,
    apply_step,
    build_step_operator,
    check_unitarity,
)

__version__ = "0.1.0"

__all__ = [
    "Anomaly",
    "AnomalyWalkError",
    "BaselineResult",
    "BaselineStatistics",
    "BasisLabel",
    "ConfigurationError",
    "DEFAULT_POLICY",
    "DimensionMismatchError",
    "EdgeBasis",
    "EigenShift",
    "IndexRangeError",
    "InitialStateKind",
    "InsufficientDataError",
    "InvarianceError",
    "MatchingError",
    "MeasurementResult",
    "NoPredictionError",
    "NothingToFindError",
    "NumericPolicy",
    "NumericalFailureError",
    "PhaseAngle",
    "ReducedBasis",
    "ReducedOperator",
    "ScalingFit",
    "SearchResult",
    "SelfEdgeError",
    "SizeError",
    "SpecSemanticError",
    "SpecSyntaxError",
    "Spectrum",
    "StarGraph",
    "StepOperator",
    "StepRecord",
    "SubspaceTooLargeError",
    "SweepResult",
    "UnitarityReport",
    "WalkState",
    "apply_adjoint",
    "apply_step",
    "baseline_statistics",
    "build_star",
    "build_step_operator",
    "build_unperturbed",
    "check_unitarity",
    "classical_baseline",
    "edge_probabilities",
    "eigendecompose",
    "eigenphase_shifts",
    "family_seeds",
    "fit_scaling",
    "initial_state",
    "invariant_basis",
    "lift",
    "limit_reduced_operator",
    "make_basis",
    "make_state",
    "measure_accessible",
    "parse_spec",
    "perturbation_sweep",
    "power_apply",
    "predicted_hitting_step",
    "project",
    "reduce_operator",
    "run_search",
    "serialize_spec",
]
