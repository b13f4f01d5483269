"""Configuration and result types for separation, training and verification"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.config import (
    RECURRENCE_MAX_ITERATIONS, RECURRENCE_TOLERANCE, RECURRENCE_DIVERGENCE_BOUND,
    LEARNING_RATE, MAX_EPOCHS, GRADIENT_NORM_TOLERANCE, KERNEL_REFIT_EVERY,
    FD_STEP, FD_RELATIVE_TOLERANCE,
)
from src.models.mixing import MixingParams, SignalBatch


# ============================================================================
# Recurrent Structure
# ============================================================================

@dataclass(frozen=True)
class RecurrenceConfig:
    """Stopping rules of the fixed-point iteration

    tolerance is a sup-norm bound on successive outputs; 0 never converges.
    """
    max_iterations: int = RECURRENCE_MAX_ITERATIONS
    tolerance: float = RECURRENCE_TOLERANCE
    divergence_bound: float = RECURRENCE_DIVERGENCE_BOUND

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.tolerance < 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.divergence_bound <= 0:
            raise ValueError(f"divergence_bound must be > 0, got {self.divergence_bound}")


class RecurrenceStatus(Enum):
    CONVERGED = 'Converged'
    MAX_ITERATIONS = 'MaxIterations'
    DIVERGED = 'Diverged'


@dataclass(frozen=True)
class RecurrenceResult:
    """Outcome of iterating one observation pair"""
    output: tuple[float, float]
    iterations_used: int
    status: RecurrenceStatus


@dataclass(frozen=True, eq=False)
class BatchRecurrenceResult:
    """Per-sample outcome of iterating a whole batch

    Samples that are neither converged nor diverged hit max_iterations.
    """
    outputs: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    diverged: np.ndarray

    def status_of(self, index: int) -> RecurrenceStatus:
        if self.diverged[index]:
            return RecurrenceStatus.DIVERGED
        if self.converged[index]:
            return RecurrenceStatus.CONVERGED
        return RecurrenceStatus.MAX_ITERATIONS


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Reconstructed sources for the samples that survived

    kept marks the input rows present in sources; fallback_count rows came
    from the direct inverse after the recurrence diverged.
    """
    sources: SignalBatch
    kept: np.ndarray
    fallback_count: int = 0

    @property
    def dropped_count(self) -> int:
        return int(self.kept.size - np.count_nonzero(self.kept))


@dataclass(frozen=True)
class StabilityReport:
    """Eigenvalue magnitudes of the recurrence Jacobian at a separating point"""
    eigenvalue_magnitudes: tuple[float, float]
    locally_stable: bool


# ============================================================================
# Training
# ============================================================================

class ScoreMode(Enum):
    ANALYTIC = 'analytic'
    KERNEL = 'kernel'


class GradientVariant(Enum):
    CORRECTED = 'corrected'
    LEGACY = 'legacy'


class TrainStatus(Enum):
    CONVERGED = 'Converged'
    MAX_EPOCHS = 'MaxEpochs'
    DIVERGED = 'Diverged'


@dataclass(frozen=True)
class OptimizerConfig:
    """Gradient-ascent settings: w(n+1) = w(n) + learning_rate * dL/dw

    analytic_scores holds one score evaluator per source and is required
    in ScoreMode.ANALYTIC; kernel mode refits every refit_every epochs with
    a fixed bandwidth, or the default rule when bandwidth is None.

    max_step caps the sup-norm of each update. With halve_on_decrease a step
    whose likelihood falls below the last accepted one is taken again from
    the accepted point at half the rate; the rate doubles back towards
    learning_rate after every accepted step.

    Training draws no random numbers, so it has no seed.
    """
    learning_rate: float = LEARNING_RATE
    max_epochs: int = MAX_EPOCHS
    gradient_norm_tolerance: float = GRADIENT_NORM_TOLERANCE
    score_mode: ScoreMode = ScoreMode.KERNEL
    analytic_scores: Optional[tuple] = None
    refit_every: int = KERNEL_REFIT_EVERY
    gradient_variant: GradientVariant = GradientVariant.CORRECTED
    initial_params: MixingParams = field(default_factory=MixingParams)
    halve_on_decrease: bool = False
    bandwidth: Optional[float] = None
    max_step: Optional[float] = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.gradient_norm_tolerance <= 0:
            raise ValueError("gradient_norm_tolerance must be > 0")
        if self.refit_every < 1:
            raise ValueError(f"refit_every must be >= 1, got {self.refit_every}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError(f"max_step must be > 0, got {self.max_step}")
        if self.score_mode is ScoreMode.ANALYTIC:
            if self.analytic_scores is None or len(self.analytic_scores) != 2:
                raise ValueError("analytic score mode needs one evaluator per source")


@dataclass(frozen=True)
class SeparationMetrics:
    """Recovery quality modulo permutation, scale and offset"""
    sir_db: tuple[float, float]
    permuted: bool
    scales: tuple[float, float]
    offsets: tuple[float, float]

    @property
    def mean_sir_db(self) -> float:
        return 0.5 * (self.sir_db[0] + self.sir_db[1])


@dataclass(frozen=True)
class TrainReport:
    """Trajectory and outcome of a training run

    The trajectories hold one entry per epoch, taken at the parameters the
    epoch's gradient was evaluated at.
    """
    final_params: MixingParams
    epochs_run: int
    status: TrainStatus
    params_trajectory: tuple = ()
    likelihood_trajectory: tuple = ()
    gradient_norm_trajectory: tuple = ()
    excluded_trajectory: tuple = ()
    metrics: Optional[SeparationMetrics] = None


# ============================================================================
# Finite-Difference Oracle
# ============================================================================

@dataclass(frozen=True)
class FdConfig:
    """Central-difference settings"""
    step: float = FD_STEP
    relative_tolerance: float = FD_RELATIVE_TOLERANCE

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if self.relative_tolerance <= 0:
            raise ValueError("relative_tolerance must be > 0")


@dataclass(frozen=True, eq=False)
class DerivativeReport:
    """Analytic derivative compared against its finite-difference estimate"""
    analytic: np.ndarray
    numeric: np.ndarray
    max_relative_error: float
    max_absolute_error: float
    passed: bool


@dataclass(frozen=True)
class VariantComparison:
    """The corrected and legacy formulas checked against the same numeric derivative"""
    corrected: DerivativeReport
    legacy: DerivativeReport


@dataclass(frozen=True)
class GradcheckCase:
    """One random configuration of a gradient-check campaign

    Errors are normwise relative errors against central differences. A case
    whose oracle raised carries the message in error and counts as failed.
    """
    index: int
    params: MixingParams
    min_abs_jacobian: float
    dsdw_error: float = float('nan')
    djdw_error: float = float('nan')
    djdw_legacy_error: float = float('nan')
    gradient_error: float = float('nan')
    gradient_legacy_error: float = float('nan')
    passed: bool = False
    legacy_expected: bool = False
    error: Optional[str] = None

    @property
    def legacy_ratio(self) -> float:
        if self.gradient_error == 0.0:
            return float('inf')
        return self.gradient_legacy_error / self.gradient_error


@dataclass(frozen=True)
class GradcheckSummary:
    """Outcome of a campaign plus the worked-example check"""
    cases: tuple
    worked_example: VariantComparison
    corrected_passed: bool
    legacy_subset_size: int
    legacy_share: float
    legacy_demonstrated: bool
    legacy_waived: bool

    @property
    def passed(self) -> bool:
        return self.corrected_passed and (self.legacy_waived or self.legacy_demonstrated)
