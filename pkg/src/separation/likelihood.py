"""
Maximum-likelihood objective and its gradient

    L(w) = E_t[log f1(s1)] + E_t[log f2(s2)] - E_t[log|J(s)|]

The sources depend on w through the fixed observations x = f(s, w), so the
Jacobian term must be differentiated through s(w; x) as well. The corrected
gradient does this; the legacy gradient keeps only the s-held-constant partial,
which is exact only for linear mixtures.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.config import JACOBIAN_FLOOR
from src.exceptions import LogDensityError, SingularJacobianError
from src.models import GradientVariant, MixingParams, SignalBatch
from src.separation.mixing import as_pairs, jacobian
from src.separation.scores import ScoreEvaluator

logger = logging.getLogger(__name__)

LogDensity = Callable[[np.ndarray], np.ndarray]


def _check_jacobian(j, floor: float) -> None:
    small = np.abs(j) < floor
    if np.any(small):
        raise SingularJacobianError(
            f"{int(np.count_nonzero(small))} sample(s) with |J| < {floor:g} (min |J| = {np.abs(j).min():.3g})"
        )


@dataclass(frozen=True, eq=False)
class LikelihoodContext:
    """Parameters, source samples and score models one gradient is evaluated on

    Every sample must satisfy |J(params, s)| >= jacobian_floor.
    """
    params: MixingParams
    sources: SignalBatch
    score1: ScoreEvaluator
    score2: ScoreEvaluator
    jacobian_floor: float = JACOBIAN_FLOOR

    def __post_init__(self):
        if not self.jacobian_floor > 0:
            raise ValueError(f"jacobian_floor must be > 0, got {self.jacobian_floor}")
        _check_jacobian(self.jacobians, self.jacobian_floor)

    @property
    def jacobians(self) -> np.ndarray:
        return jacobian(self.params, self.sources.samples)


# ============================================================================
# Objective
# ============================================================================

def observation_log_density(
    ctx: LikelihoodContext,
    log_density1: Optional[LogDensity] = None,
    log_density2: Optional[LogDensity] = None,
) -> np.ndarray:
    """Per-sample log f_X(x) = log f1(s1) + log f2(s2) - log|J(s)|

    Log-densities default to the score evaluators' own log_pdf.
    """
    ld1 = log_density1 or ctx.score1.log_pdf
    ld2 = log_density2 or ctx.score2.log_pdf
    s = ctx.sources.samples
    with np.errstate(divide='ignore'):
        terms = np.asarray(ld1(s[:, 0]), dtype=float) + np.asarray(ld2(s[:, 1]), dtype=float)
    bad = ~np.isfinite(terms)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise LogDensityError(
            f"log-density not finite on {int(bad.sum())} sample(s); first at index {first}: {tuple(s[first])}"
        )
    return terms - np.log(np.abs(ctx.jacobians))


def log_likelihood(
    ctx: LikelihoodContext,
    log_density1: Optional[LogDensity] = None,
    log_density2: Optional[LogDensity] = None,
) -> float:
    return float(np.mean(observation_log_density(ctx, log_density1, log_density2)))


# ============================================================================
# Derivatives
# ============================================================================

def dsdw(w: MixingParams, s, jacobian_floor: float = JACOBIAN_FLOOR) -> np.ndarray:
    """Sensitivity of the sources to the parameters at fixed observations, shape (..., 2, 4)

    Implicit differentiation of x = f(s, w): ds/dw = -(df/ds)^-1 df/dw.
    """
    s = as_pairs(s)
    s1, s2 = s[..., 0], s[..., 1]
    j = jacobian(w, s)
    _check_jacobian(j, jacobian_floor)

    u1 = 1.0 - w.q2 * s1
    v1 = w.l1 + w.q1 * s1
    u2 = w.l2 + w.q2 * s2
    v2 = 1.0 - w.q1 * s2
    cross = s1 * s2
    out = np.empty(s.shape[:-1] + (2, 4))
    out[..., 0, :] = np.stack([u1 * s2, v1 * s1, u1 * cross, v1 * cross], axis=-1)
    out[..., 1, :] = np.stack([u2 * s2, v2 * s1, u2 * cross, v2 * cross], axis=-1)
    return out / j[..., None, None]


def djdw_explicit(w: MixingParams, s) -> np.ndarray:
    """dJ/dw with s held fixed, shape (..., 4)"""
    s = as_pairs(s)
    s1, s2 = s[..., 0], s[..., 1]
    return -np.stack([
        w.l2 + w.q2 * s2,
        w.l1 + w.q1 * s1,
        w.l2 * s1 + s2,
        s1 + w.l1 * s2,
    ], axis=-1)


def djds(w: MixingParams) -> np.ndarray:
    return -np.array([w.a1, w.a2])


def djdw_total(w: MixingParams, s, jacobian_floor: float = JACOBIAN_FLOOR) -> np.ndarray:
    """dJ/dw along s(w; x): explicit partial plus dJ/ds . ds/dw, shape (..., 4)"""
    return djdw_explicit(w, s) + np.einsum('i,...ij->...j', djds(w), dsdw(w, s, jacobian_floor))


def _gradient(ctx: LikelihoodContext, djdw: np.ndarray) -> np.ndarray:
    s = ctx.sources.samples
    sens = dsdw(ctx.params, s, ctx.jacobian_floor)
    psi1 = np.asarray(ctx.score1.score(s[:, 0]), dtype=float)
    psi2 = np.asarray(ctx.score2.score(s[:, 1]), dtype=float)
    terms = psi1[:, None] * sens[:, 0, :] + psi2[:, None] * sens[:, 1, :] + djdw / ctx.jacobians[:, None]
    return -np.mean(terms, axis=0)


def gradient_corrected(ctx: LikelihoodContext) -> np.ndarray:
    """dL/dw in [l1, l2, q1, q2] order"""
    return _gradient(ctx, djdw_total(ctx.params, ctx.sources.samples, ctx.jacobian_floor))


def gradient_legacy(ctx: LikelihoodContext) -> np.ndarray:
    """dL/dw with the s-held-constant dJ/dw; exact only when q1 = q2 = 0"""
    return _gradient(ctx, djdw_explicit(ctx.params, ctx.sources.samples))


def gradient(ctx: LikelihoodContext, variant: GradientVariant) -> np.ndarray:
    if variant is GradientVariant.LEGACY:
        return gradient_legacy(ctx)
    return gradient_corrected(ctx)
