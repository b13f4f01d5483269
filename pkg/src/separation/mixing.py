"""
Linear-quadratic mixing model
Forward mixing, Jacobian, closed-form inversion, permuted solution, sign classes

Pair-valued arguments accept any array-like whose last axis has length 2,
so every function works on a single sample or on a whole (N, 2) batch.
"""

import logging

import numpy as np

from src.config import DISCRIMINANT_EPS
from src.exceptions import (
    DegenerateModelError, MixedSignError, NegativeDiscriminantError, ShapeMismatchError,
)
from src.models import (
    MixingParams, RawCoefficients, SignalBatch, InverseCandidates, JacobianSignClass,
)

logger = logging.getLogger(__name__)


def as_pairs(values) -> np.ndarray:
    """Float array with a trailing axis of length 2"""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ShapeMismatchError(f"expected pairs with last axis of length 2, got shape {arr.shape}")
    return arr


def _check_range(rng, name: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in rng)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise ValueError(f"{name} must be a finite interval with lo <= hi, got [{lo}, {hi}]")
    return lo, hi


# ============================================================================
# Model
# ============================================================================

def normalize_raw(raw: RawCoefficients) -> MixingParams:
    """Coefficients of the normalized model whose sources are s1=a11*u1, s2=a22*u2"""
    return MixingParams(
        l1=-raw.a12 / raw.a22,
        l2=-raw.a21 / raw.a11,
        q1=-raw.b1 / (raw.a11 * raw.a22),
        q2=-raw.b2 / (raw.a11 * raw.a22),
    )


def sources_from_raw(raw: RawCoefficients, u) -> np.ndarray:
    u = as_pairs(u)
    return np.stack([raw.a11 * u[..., 0], raw.a22 * u[..., 1]], axis=-1)


def mix_raw(raw: RawCoefficients, u) -> np.ndarray:
    """x_i = a_i1*u1 + a_i2*u2 + b_i*u1*u2"""
    u = as_pairs(u)
    u1, u2 = u[..., 0], u[..., 1]
    x1 = raw.a11 * u1 + raw.a12 * u2 + raw.b1 * u1 * u2
    x2 = raw.a21 * u1 + raw.a22 * u2 + raw.b2 * u1 * u2
    return np.stack([x1, x2], axis=-1)


def mix(w: MixingParams, s) -> np.ndarray:
    s = as_pairs(s)
    s1, s2 = s[..., 0], s[..., 1]
    x1 = s1 - w.l1 * s2 - w.q1 * s1 * s2
    x2 = s2 - w.l2 * s1 - w.q2 * s1 * s2
    return np.stack([x1, x2], axis=-1)


def mix_batch(w: MixingParams, sources: SignalBatch) -> SignalBatch:
    return SignalBatch(mix(w, sources.samples))


def jacobian(w: MixingParams, s):
    """J = 1 - l1*l2 - (q2 + l2*q1)*s1 - (q1 + l1*q2)*s2 (affine in s)"""
    s = as_pairs(s)
    return 1.0 - w.l1 * w.l2 - w.a1 * s[..., 0] - w.a2 * s[..., 1]


def mixing_jacobian_matrix(w: MixingParams, s) -> np.ndarray:
    """df/ds, shape (..., 2, 2); its determinant is jacobian(w, s)"""
    s = as_pairs(s)
    s1, s2 = s[..., 0], s[..., 1]
    out = np.empty(s.shape[:-1] + (2, 2))
    out[..., 0, 0] = 1.0 - w.q1 * s2
    out[..., 0, 1] = -w.l1 - w.q1 * s1
    out[..., 1, 0] = -w.l2 - w.q2 * s2
    out[..., 1, 1] = 1.0 - w.q2 * s1
    return out


def mixing_parameter_derivative(s) -> np.ndarray:
    """df/dw, shape (..., 2, 4), columns in [l1, l2, q1, q2] order"""
    s = as_pairs(s)
    s1, s2 = s[..., 0], s[..., 1]
    out = np.zeros(s.shape[:-1] + (2, 4))
    out[..., 0, 0] = -s2
    out[..., 0, 2] = -s1 * s2
    out[..., 1, 1] = -s1
    out[..., 1, 3] = -s1 * s2
    return out


# ============================================================================
# Direct Separating Structures
# ============================================================================

def _solve_quadratic(a: float, b: np.ndarray, c: np.ndarray):
    """Roots of a*s^2 + b*s + c = 0 as (plus, minus, discriminant)

    plus/minus follow the sign in front of sqrt(discriminant); the roots are
    formed without cancellation. a == 0 solves b*s + c = 0 and puts the
    single root in both slots.
    """
    if a == 0.0:
        if np.any(b == 0.0):
            raise DegenerateModelError("linear structure with a zero coefficient has no unique root")
        root = np.asarray(-c / b)
        return root, root.copy(), np.asarray(b * b)

    disc = b * b - 4.0 * a * c
    disc = np.where((disc < 0.0) & (disc > -DISCRIMINANT_EPS), 0.0, disc)
    if np.any(disc < 0.0):
        bad = int(np.count_nonzero(disc < 0.0))
        raise NegativeDiscriminantError(
            f"{bad} observation(s) outside the image of the mixing model (min discriminant {disc.min():.3g})"
        )
    sqrt_disc = np.sqrt(disc)
    negative_b = np.signbit(b)
    q = -0.5 * (b + np.where(negative_b, -sqrt_disc, sqrt_disc))
    from_q = q / a
    from_c = np.divide(c, q, out=np.zeros_like(q), where=q != 0.0)
    # q == 0 only for the double root at 0
    from_c = np.where(q == 0.0, from_q, from_c)
    plus = np.where(negative_b, from_q, from_c)
    minus = np.where(negative_b, from_c, from_q)
    return plus, minus, disc


def direct_inverse(w: MixingParams, x) -> InverseCandidates:
    """Both solutions of the mixture equations for the observations x

    Each source solves a_i*s_i^2 + b_i*s_i + c_i = 0 with
    a1 = q2 + l2*q1, b1 = q1*x2 - q2*x1 + l1*l2 - 1, c1 = x1 + l1*x2 and
    a2 = q1 + l1*q2, b2 = q2*x1 - q1*x2 + l1*l2 - 1, c2 = x2 + l2*x1.
    Both discriminants equal J^2 at the true sources.
    """
    x = as_pairs(x)
    x1, x2 = x[..., 0], x[..., 1]
    offset = w.l1 * w.l2 - 1.0
    b1 = w.q1 * x2 - w.q2 * x1 + offset
    b2 = w.q2 * x1 - w.q1 * x2 + offset
    c1 = x1 + w.l1 * x2
    c2 = x2 + w.l2 * x1

    plus1, minus1, disc1 = _solve_quadratic(w.a1, b1, c1)
    plus2, minus2, disc2 = _solve_quadratic(w.a2, b2, c2)
    return InverseCandidates(
        root_plus=np.stack([plus1, plus2], axis=-1),
        root_minus=np.stack([minus1, minus2], axis=-1),
        discriminants=np.stack([disc1, disc2], axis=-1),
    )


def select_root(cands: InverseCandidates, sign_class: JacobianSignClass) -> np.ndarray:
    """The candidate equal to the true sources for a constant-sign Jacobian

    J < 0 everywhere: the +sqrt structure gives the sources.
    J > 0 everywhere: the -sqrt structure gives the sources.
    At a double root both slots coincide, so either class returns it.
    """
    if sign_class is JacobianSignClass.ALWAYS_NEGATIVE:
        return cands.root_plus
    if sign_class is JacobianSignClass.ALWAYS_POSITIVE:
        return cands.root_minus
    raise MixedSignError("direct structures cannot separate a mixture whose Jacobian changes sign")


def permuted_solution(w: MixingParams, s) -> np.ndarray:
    """The other pair producing the same observations (swap, scale, offset of s)"""
    a1, a2 = w.a1, w.a2
    if a1 == 0.0 or a2 == 0.0:
        raise DegenerateModelError(
            f"permuted solution undefined: q2+l2*q1={a1}, q1+l1*q2={a2}"
        )
    s = as_pairs(s)
    offset = w.l1 * w.l2 - 1.0
    first = -(a2 / a1) * s[..., 1] - offset / a1
    second = -(a1 / a2) * s[..., 0] - offset / a2
    return np.stack([first, second], axis=-1)


# ============================================================================
# Sign Classification
# ============================================================================

def classify_jacobian_sign(w: MixingParams, s1_range, s2_range) -> JacobianSignClass:
    """Sign of J over a rectangle, from its four corners (J is affine in s)"""
    lo1, hi1 = _check_range(s1_range, 's1_range')
    lo2, hi2 = _check_range(s2_range, 's2_range')
    corners = np.array([[lo1, lo2], [lo1, hi2], [hi1, lo2], [hi1, hi2]])
    values = jacobian(w, corners)
    if np.all(values > 0.0):
        return JacobianSignClass.ALWAYS_POSITIVE
    if np.all(values < 0.0):
        return JacobianSignClass.ALWAYS_NEGATIVE
    return JacobianSignClass.MIXED_SIGN


def source_bounds(batch: SignalBatch) -> tuple[tuple[float, float], tuple[float, float]]:
    """Empirical bounding box of a batch, per channel"""
    lo = batch.samples.min(axis=0)
    hi = batch.samples.max(axis=0)
    return (float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1]))


def jacobian_zero_locus(w: MixingParams, s1_range, s2_range, n_points: int) -> np.ndarray:
    """Points of the line J = 0 inside the source rectangle, shape (M, 2)

    The line is parametrized along the coordinate with the smaller slope
    coefficient so the other coordinate is a well-conditioned function of it.
    """
    lo1, hi1 = _check_range(s1_range, 's1_range')
    lo2, hi2 = _check_range(s2_range, 's2_range')
    a1, a2 = w.a1, w.a2
    constant = 1.0 - w.l1 * w.l2
    if a1 == 0.0 and a2 == 0.0:
        raise DegenerateModelError("J is constant; there is no zero locus")

    if abs(a2) >= abs(a1):
        s1 = np.linspace(lo1, hi1, n_points)
        s2 = (constant - a1 * s1) / a2
    else:
        s2 = np.linspace(lo2, hi2, n_points)
        s1 = (constant - a2 * s2) / a1
    inside = (s1 >= lo1) & (s1 <= hi1) & (s2 >= lo2) & (s2 <= hi2)
    locus = np.column_stack([s1, s2])[inside]
    logger.debug(f"J=0 locus: {len(locus)} of {n_points} points inside the source rectangle")
    return locus
