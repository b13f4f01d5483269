"""Data models for linear-quadratic source separation"""

from src.models.mixing import (
    PARAM_NAMES, MixingParams, RawCoefficients, SamplePair, SignalBatch,
    InverseCandidates, JacobianSignClass,
)
from src.models.separation import (
    RecurrenceConfig, RecurrenceStatus, RecurrenceResult, BatchRecurrenceResult,
    ReconstructionResult, StabilityReport, ScoreMode, GradientVariant, TrainStatus, OptimizerConfig,
    SeparationMetrics, TrainReport, FdConfig, DerivativeReport, VariantComparison,
    GradcheckCase, GradcheckSummary,
)
from src.models.experiment import (
    DistributionKind, SourceDistribution, GradcheckSettings, ExperimentConfig,
)

__all__ = [
    'PARAM_NAMES', 'MixingParams', 'RawCoefficients', 'SamplePair', 'SignalBatch',
    'InverseCandidates', 'JacobianSignClass',
    'RecurrenceConfig', 'RecurrenceStatus', 'RecurrenceResult', 'BatchRecurrenceResult',
    'ReconstructionResult', 'StabilityReport', 'ScoreMode', 'GradientVariant', 'TrainStatus', 'OptimizerConfig',
    'SeparationMetrics', 'TrainReport', 'FdConfig', 'DerivativeReport', 'VariantComparison',
    'GradcheckCase', 'GradcheckSummary',
    'DistributionKind', 'SourceDistribution', 'GradcheckSettings', 'ExperimentConfig',
]
