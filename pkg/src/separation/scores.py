"""
Score functions psi(u) = -d log f(u) / du
Analytic evaluators for known source laws and a cubic B-spline kernel estimator
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np
from scipy import stats
from scipy.signal import convolve

from src.config import DENSITY_FLOOR_RATIO, KERNEL_GRID_SIZE, KERNEL_MIN_SAMPLES
from src.exceptions import InvalidParameterError, ScoreFitError
from src.models import DistributionKind, SourceDistribution

logger = logging.getLogger(__name__)

class ScoreEvaluator(Protocol):
    """Score and log-density of one source

    log_pdf is needed by the likelihood itself; the score alone fixes the
    density only up to a constant.
    """

    def score(self, u) -> np.ndarray: ...

    def log_pdf(self, u) -> np.ndarray: ...


# ============================================================================
# Analytic Evaluators
# ============================================================================

@dataclass(frozen=True)
class GaussianScore:
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if not self.std > 0:
            raise InvalidParameterError(f"std must be > 0, got {self.std}")

    def score(self, u):
        return (np.asarray(u, dtype=float) - self.mean) / self.std ** 2

    def log_pdf(self, u):
        return stats.norm.logpdf(u, loc=self.mean, scale=self.std)


@dataclass(frozen=True)
class LaplaceScore:
    mean: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidParameterError(f"scale must be > 0, got {self.scale}")

    def score(self, u):
        return np.sign(np.asarray(u, dtype=float) - self.mean) / self.scale

    def log_pdf(self, u):
        return stats.laplace.logpdf(u, loc=self.mean, scale=self.scale)


@dataclass(frozen=True)
class UniformScore:
    """Zero score inside [low, high]; log_pdf is -inf outside"""
    low: float = -0.5
    high: float = 0.5

    def __post_init__(self):
        if not self.low < self.high:
            raise InvalidParameterError(f"uniform needs low < high, got [{self.low}, {self.high}]")

    def score(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def log_pdf(self, u):
        return stats.uniform.logpdf(u, loc=self.low, scale=self.high - self.low)


def gaussian_score(mean: float, std: float) -> GaussianScore:
    return GaussianScore(mean=mean, std=std)


def laplace_score(mean: float, scale: float) -> LaplaceScore:
    return LaplaceScore(mean=mean, scale=scale)


def uniform_score(low: float, high: float) -> UniformScore:
    return UniformScore(low=low, high=high)


def analytic_score_for(dist: SourceDistribution) -> ScoreEvaluator:
    """Exact evaluator for a configured source law"""
    if dist.kind is DistributionKind.GAUSSIAN:
        return gaussian_score(dist.mean, dist.std)
    if dist.kind is DistributionKind.LAPLACE:
        return laplace_score(dist.mean, dist.scale)
    return uniform_score(dist.low, dist.high)


# ============================================================================
# Cubic Cardinal B-spline Kernel
# ============================================================================

def cubic_bspline(t) -> np.ndarray:
    """Centered cubic cardinal B-spline on [-2, 2], unit integral"""
    a = np.abs(np.asarray(t, dtype=float))
    inner = 2.0 / 3.0 - a * a + 0.5 * a ** 3
    outer = (2.0 - a) ** 3 / 6.0
    return np.where(a < 1.0, inner, np.where(a < 2.0, outer, 0.0))


def cubic_bspline_derivative(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    inner = -2.0 * t + 1.5 * t * a
    outer = -0.5 * np.sign(t) * (2.0 - a) ** 2
    return np.where(a < 1.0, inner, np.where(a < 2.0, outer, 0.0))


def default_bandwidth(samples: np.ndarray) -> float:
    """Spline scale whose kernel standard deviation follows 1.06 * sigma * N^(-1/5)

    The cubic B-spline has variance 1/3, hence the sqrt(3) factor.
    """
    sigma = float(np.std(samples, ddof=1))
    return math.sqrt(3.0) * 1.06 * sigma * len(samples) ** (-0.2)


@dataclass(frozen=True, eq=False)
class KernelScoreModel:
    """Kernel score tabulated on a uniform grid spanning its support

    coefficients[k] is psi at sample_grid[k], computed from the exact spline
    density and its analytic derivative; between knots the score is linear,
    outside the support it is clamped to the endpoint values.
    """
    sample_grid: np.ndarray
    coefficients: np.ndarray
    log_density: np.ndarray
    bandwidth: float
    support: tuple[float, float]

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidParameterError(f"bandwidth must be > 0, got {self.bandwidth}")
        if np.any(np.diff(self.sample_grid) <= 0):
            raise InvalidParameterError("sample_grid must be strictly ascending")

    def score(self, u):
        return np.interp(u, self.sample_grid, self.coefficients)

    def log_pdf(self, u):
        return np.interp(u, self.sample_grid, self.log_density)


def _kernel_sums(grid: np.ndarray, samples: np.ndarray, bandwidth: float):
    """Spline KDE and its derivative at the grid points

    Samples are linearly binned onto the grid, then convolved with the kernel
    sampled at grid offsets.
    """
    size = grid.size
    spacing = (grid[-1] - grid[0]) / (size - 1)
    position = (samples - grid[0]) / spacing
    left = np.clip(np.floor(position).astype(int), 0, size - 2)
    frac = position - left
    counts = (
        np.bincount(left, weights=1.0 - frac, minlength=size)
        + np.bincount(left + 1, weights=frac, minlength=size)
    )[:size]

    reach = int(math.ceil(2.0 * bandwidth / spacing))
    t = np.arange(-reach, reach + 1) * spacing / bandwidth
    norm = 1.0 / (len(samples) * bandwidth)
    density = norm * convolve(counts, cubic_bspline(t), mode='same', method='direct')
    slope = norm / bandwidth * convolve(counts, cubic_bspline_derivative(t), mode='same', method='direct')
    return density, slope


def fit_kernel_score(
    samples,
    bandwidth: Optional[float] = None,
    grid_size: int = KERNEL_GRID_SIZE,
) -> KernelScoreModel:
    """Score of a cubic B-spline kernel density estimate

    The density is floored at DENSITY_FLOOR_RATIO times its maximum before
    dividing. Support is [min - 2h, max + 2h].
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < KERNEL_MIN_SAMPLES:
        raise ScoreFitError(f"kernel score needs at least {KERNEL_MIN_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ScoreFitError("kernel score samples must be finite")
    if np.ptp(x) == 0.0:
        raise ScoreFitError("kernel score samples have zero variance")

    h = default_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise InvalidParameterError(f"bandwidth must be > 0, got {h}")

    lo, hi = float(x.min()) - 2.0 * h, float(x.max()) + 2.0 * h
    grid = np.linspace(lo, hi, grid_size)
    density, slope = _kernel_sums(grid, x, h)
    floored = np.maximum(density, DENSITY_FLOOR_RATIO * density.max())
    psi = -slope / floored

    logger.debug(f"Kernel score fitted: n={x.size}, bandwidth={h:.4g}, support=[{lo:.4g}, {hi:.4g}]")
    return KernelScoreModel(
        sample_grid=grid,
        coefficients=psi,
        log_density=np.log(floored),
        bandwidth=h,
        support=(lo, hi),
    )


def eval_score(model: ScoreEvaluator, u):
    return model.score(u)
