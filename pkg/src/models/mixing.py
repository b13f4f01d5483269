"""Value types of the linear-quadratic mixing model"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from src.exceptions import DegenerateCoefficientsError, ShapeMismatchError

PARAM_NAMES = ('l1', 'l2', 'q1', 'q2')


@dataclass(frozen=True)
class MixingParams:
    """Normalized mixture coefficients w = [l1, l2, q1, q2]

    x1 = s1 - l1*s2 - q1*s1*s2
    x2 = s2 - l2*s1 - q2*s1*s2
    """
    l1: float = 0.0
    l2: float = 0.0
    q1: float = 0.0
    q2: float = 0.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"MixingParams.{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values) -> 'MixingParams':
        """Build from a length-4 sequence in canonical order"""
        arr = np.asarray(values, dtype=float)
        if arr.shape != (4,):
            raise ShapeMismatchError(f"expected 4 parameters, got shape {arr.shape}")
        return cls(*arr.tolist())

    def as_array(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.q1, self.q2])

    @property
    def a1(self) -> float:
        """q2 + l2*q1: slope of -J along s1, leading coefficient of the s1 quadratic"""
        return self.q2 + self.l2 * self.q1

    @property
    def a2(self) -> float:
        """q1 + l1*q2: slope of -J along s2, leading coefficient of the s2 quadratic"""
        return self.q1 + self.l1 * self.q2

    @property
    def is_linear(self) -> bool:
        return self.q1 == 0.0 and self.q2 == 0.0

    def __str__(self) -> str:
        return f"[l1={self.l1:.6g}, l2={self.l2:.6g}, q1={self.q1:.6g}, q2={self.q2:.6g}]"


@dataclass(frozen=True)
class RawCoefficients:
    """Unnormalized model x_i = a_i1*u1 + a_i2*u2 + b_i*u1*u2"""
    a11: float
    a12: float
    a21: float
    a22: float
    b1: float
    b2: float

    def __post_init__(self):
        if self.a11 == 0 or self.a22 == 0:
            raise DegenerateCoefficientsError(
                f"a11 and a22 must be nonzero (a11={self.a11}, a22={self.a22})"
            )


class SamplePair(NamedTuple):
    """One 2-channel sample: sources, observations or outputs"""
    first: float
    second: float


@dataclass(frozen=True, eq=False)
class SignalBatch:
    """N paired samples stored as a read-only (N, 2) float64 array"""
    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ShapeMismatchError(f"signal batch must have shape (N, 2), got {arr.shape}")
        if arr.shape[0] == 0:
            raise ValueError("signal batch must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal batch contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, 'samples', arr)

    @classmethod
    def from_columns(cls, first, second) -> 'SignalBatch':
        return cls(np.column_stack([np.asarray(first, dtype=float), np.asarray(second, dtype=float)]))

    @property
    def first(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def second(self) -> np.ndarray:
        return self.samples[:, 1]

    def subset(self, mask) -> 'SignalBatch':
        return SignalBatch(self.samples[mask])

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class InverseCandidates:
    """Both root pairs of the direct separating structures

    root_plus uses +sqrt(discriminant), root_minus uses -sqrt(discriminant).
    Arrays have the shape of the observations passed in: (2,) or (N, 2).
    """
    root_plus: np.ndarray
    root_minus: np.ndarray
    discriminants: np.ndarray


class JacobianSignClass(Enum):
    """Sign of J over a source domain"""
    ALWAYS_NEGATIVE = 'AlwaysNegative'
    ALWAYS_POSITIVE = 'AlwaysPositive'
    MIXED_SIGN = 'MixedSign'

    @property
    def is_constant(self) -> bool:
        return self is not JacobianSignClass.MIXED_SIGN
