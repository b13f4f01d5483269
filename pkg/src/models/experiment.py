"""Experiment configuration types used by the command-line harness"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from src.config import (
    SAMPLE_COUNT, SEED, OUTPUT_DIR, GRADCHECK_CONFIGS, GRADCHECK_SAMPLES,
    FD_STEP, FD_RELATIVE_TOLERANCE,
)
from src.exceptions import InvalidParameterError
from src.models.mixing import MixingParams
from src.models.separation import OptimizerConfig, RecurrenceConfig


class DistributionKind(Enum):
    UNIFORM = 'uniform'
    GAUSSIAN = 'gaussian'
    LAPLACE = 'laplace'


@dataclass(frozen=True)
class SourceDistribution:
    """i.i.d. source law of one channel

    uniform uses low/high, gaussian uses mean/std, laplace uses mean/scale.
    """
    kind: DistributionKind = DistributionKind.UNIFORM
    low: float = -0.5
    high: float = 0.5
    mean: float = 0.0
    std: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind is DistributionKind.UNIFORM and not self.low < self.high:
            raise InvalidParameterError(f"uniform source needs low < high, got [{self.low}, {self.high}]")
        if self.kind is DistributionKind.GAUSSIAN and not self.std > 0:
            raise InvalidParameterError(f"gaussian source needs std > 0, got {self.std}")
        if self.kind is DistributionKind.LAPLACE and not self.scale > 0:
            raise InvalidParameterError(f"laplace source needs scale > 0, got {self.scale}")


@dataclass(frozen=True)
class GradcheckSettings:
    """Randomized finite-difference campaign"""
    n_configs: int = GRADCHECK_CONFIGS
    n_samples: int = GRADCHECK_SAMPLES
    step: float = FD_STEP
    tolerance: float = FD_RELATIVE_TOLERANCE
    linear_only: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a CLI command needs, after defaults, file and flags are merged"""
    source1: SourceDistribution = field(default_factory=SourceDistribution)
    source2: SourceDistribution = field(default_factory=SourceDistribution)
    n_samples: int = SAMPLE_COUNT
    w_true: MixingParams = MixingParams(-0.2, 0.2, -0.8, 0.8)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    recurrence: RecurrenceConfig = field(default_factory=RecurrenceConfig)
    gradcheck: GradcheckSettings = field(default_factory=GradcheckSettings)
    output_dir: Path = Path(OUTPUT_DIR)
    seed: int = SEED

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidParameterError(f"n_samples must be >= 1, got {self.n_samples}")
