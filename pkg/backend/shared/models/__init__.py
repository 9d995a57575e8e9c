"""
Shared Data Models for the Synthetic Control Toolkit
"""

from .errors import (
    SynthControlError,
    PanelValidationError,
    PanelParseError,
    EstimationInputError,
    ConfigurationError,
    SolverConvergenceError,
    HullLPError,
)
from .panel import PanelData, MatchingMatrix, ColumnRef, ColumnSelection
from .estimation import (
    Method,
    CvScheme,
    SolverProblem,
    SolverResult,
    EigenScaling,
    TuningParams,
    CvSurface,
    WeightVector,
    EffectEstimate,
)
from .inference import TuningPolicy, UnitRatio, PermutationResult, VarianceEstimate, Z_95
from .hull import HullVerdict, HullQuery, HullResult, HullExperimentConfig, HullExperimentRow
from .simulation import (
    StudyScale,
    BiasMode,
    SimulationConfig,
    LatentParameters,
    SimulatedSample,
    ReplicationRecord,
    StudyRow,
    StudyResult,
    STUDY_SETTINGS,
    STUDY_COLUMNS,
)

__all__ = [
    # Errors
    "SynthControlError",
    "PanelValidationError",
    "PanelParseError",
    "EstimationInputError",
    "ConfigurationError",
    "SolverConvergenceError",
    "HullLPError",
    # Panel models
    "PanelData",
    "MatchingMatrix",
    "ColumnRef",
    "ColumnSelection",
    # Estimation models
    "Method",
    "CvScheme",
    "SolverProblem",
    "SolverResult",
    "EigenScaling",
    "TuningParams",
    "CvSurface",
    "WeightVector",
    "EffectEstimate",
    # Inference models
    "TuningPolicy",
    "UnitRatio",
    "PermutationResult",
    "VarianceEstimate",
    "Z_95",
    # Hull models
    "HullVerdict",
    "HullQuery",
    "HullResult",
    "HullExperimentConfig",
    "HullExperimentRow",
    # Simulation models
    "StudyScale",
    "BiasMode",
    "SimulationConfig",
    "LatentParameters",
    "SimulatedSample",
    "ReplicationRecord",
    "StudyRow",
    "StudyResult",
    "STUDY_SETTINGS",
    "STUDY_COLUMNS",
]
