"""Error hierarchy for the separation toolkit"""


class SeparationError(Exception):
    """Base class for every error raised by this package"""


class ConfigError(SeparationError):
    """Invalid experiment configuration (file, key or value)"""


class DataFileError(SeparationError):
    """Unreadable or malformed signal file"""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class InvalidParameterError(SeparationError, ValueError):
    """Distribution or estimator parameter outside its domain"""


class ShapeMismatchError(SeparationError, ValueError):
    """Arrays whose shapes cannot be paired"""


class DegenerateCoefficientsError(SeparationError, ValueError):
    """Raw mixture with a11 = 0 or a22 = 0"""


class DegenerateModelError(SeparationError):
    """Mixing parameters for which a closed-form expression has a zero denominator"""


class MixedSignError(SeparationError):
    """Direct separation requested where the Jacobian changes sign"""


class DegenerateSignalError(SeparationError, ValueError):
    """Channel with zero variance where a spread is required"""


class ScoreFitError(SeparationError):
    """Kernel score model cannot be fitted on the given samples"""


class LogDensityError(SeparationError):
    """Log-density is not finite on a source sample"""


class NumericalError(SeparationError):
    """Failure of a numerical procedure (root finding, inversion, iteration)"""


class NegativeDiscriminantError(NumericalError):
    """Observation outside the image of the mixing model"""


class SingularJacobianError(NumericalError):
    """|J| below the configured floor"""


class ReconstructionError(NumericalError):
    """No sample of a batch could be reconstructed"""


class BranchCrossingError(NumericalError):
    """Finite-difference evaluation jumped to the other inverse branch"""
