"""
Finite-difference oracle for the analytic derivatives

Differentiation through s(w; x) follows the closed-form inverse branch nearest
to a hint, with the observations x held fixed. Each perturbed evaluation is
tracked from the unperturbed root; a jump larger than FD_BRANCH_JUMP_FACTOR
steps means the branch was lost.
"""

import logging
from typing import Callable, Optional

import numpy as np

from src.config import (
    CONTINUE_ON_ERROR, FD_NEAR_ZERO, FD_ABSOLUTE_FALLBACK, FD_BRANCH_JUMP_FACTOR,
    GRADCHECK_MIN_JACOBIAN, GRADCHECK_LEGACY_MIN_Q, GRADCHECK_LEGACY_MIN_ABS_SOURCE,
    GRADCHECK_LEGACY_RATIO, GRADCHECK_LEGACY_SHARE, SEED,
)
from src.exceptions import BranchCrossingError, SeparationError
from src.models import (
    MixingParams, SignalBatch, FdConfig, DerivativeReport, VariantComparison,
    GradcheckSettings, GradcheckCase, GradcheckSummary,
)
from src.separation.likelihood import (
    LikelihoodContext, log_likelihood, dsdw, djdw_explicit, djdw_total,
    gradient_corrected, gradient_legacy,
)
from src.separation.mixing import (
    as_pairs, classify_jacobian_sign, direct_inverse, jacobian, mix, source_bounds,
)
from src.separation.scores import ScoreEvaluator, gaussian_score

logger = logging.getLogger(__name__)

WORKED_PARAMS = MixingParams(-0.2, 0.2, -0.8, 0.8)
WORKED_OBSERVATION = (0.8, 0.2)
WORKED_HINT = (0.4, 0.4)

# Smooth source law used by the campaign's likelihood checks
_CAMPAIGN_STD = 0.3


# ============================================================================
# Generic Central Differences
# ============================================================================

def central_difference(func: Callable[[np.ndarray], np.ndarray], x0, step: float) -> np.ndarray:
    """Centered-difference derivative of func at x0

    The derivative along x0[j] is stacked on a new last axis, so a scalar
    function yields its gradient and an (m,)-valued one its (m, n) Jacobian.
    """
    x0 = np.asarray(x0, dtype=float)
    columns = []
    for j in range(x0.size):
        x = x0.copy()
        x[j] = x0[j] + step
        f_plus = np.asarray(func(x), dtype=float)
        x[j] = x0[j] - step
        f_minus = np.asarray(func(x), dtype=float)
        columns.append((f_plus - f_minus) / (2.0 * step))
    return np.stack(columns, axis=-1)


def fd_jacobian(func: Callable[[np.ndarray], np.ndarray], point, step: float) -> np.ndarray:
    """(m, n) Jacobian of a vector function of a vector argument"""
    return np.atleast_2d(central_difference(func, point, step))


def compare_derivatives(analytic, numeric, tolerance: float, sample_axes: int = 0) -> DerivativeReport:
    """Normwise relative error of analytic against numeric

    The leading sample_axes axes index independent samples; each sample is
    scaled by its own largest numeric entry. A sample whose numeric entries
    are all below FD_NEAR_ZERO passes on absolute error FD_ABSOLUTE_FALLBACK.
    """
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if analytic.shape != numeric.shape:
        raise ValueError(f"shape mismatch: analytic {analytic.shape} vs numeric {numeric.shape}")

    reduce_axes = tuple(range(sample_axes, analytic.ndim))
    diff = np.abs(analytic - numeric)
    abs_err = np.max(diff, axis=reduce_axes) if reduce_axes else diff
    scale = np.max(np.abs(numeric), axis=reduce_axes) if reduce_axes else np.abs(numeric)
    near_zero = scale < FD_NEAR_ZERO
    rel_err = abs_err / np.where(near_zero, FD_NEAR_ZERO, scale)
    ok = np.where(near_zero, abs_err <= FD_ABSOLUTE_FALLBACK, rel_err <= tolerance)

    return DerivativeReport(
        analytic=analytic,
        numeric=numeric,
        max_relative_error=float(np.max(rel_err)),
        max_absolute_error=float(np.max(abs_err)),
        passed=bool(np.all(ok)),
    )


# ============================================================================
# Branch-Tracked Inversion
# ============================================================================

def invert_for_sources(w: MixingParams, x, hint) -> np.ndarray:
    """The direct-inverse root pair closest to hint, per sample"""
    cands = direct_inverse(w, x)
    hint = np.broadcast_to(as_pairs(hint), cands.root_plus.shape)
    d_plus = np.sum((cands.root_plus - hint) ** 2, axis=-1)
    d_minus = np.sum((cands.root_minus - hint) ** 2, axis=-1)
    return np.where((d_plus < d_minus)[..., None], cands.root_plus, cands.root_minus)


def _tracked_inverse(params, x, anchor: np.ndarray, step: float) -> np.ndarray:
    s = invert_for_sources(MixingParams.from_array(params), x, anchor)
    jump = float(np.max(np.abs(s - anchor)))
    if jump > FD_BRANCH_JUMP_FACTOR * step:
        raise BranchCrossingError(
            f"inverse jumped by {jump:.3g} for a parameter step of {step:g} at w={params.tolist()}"
        )
    return s


# ============================================================================
# Derivative Checks
# ============================================================================

def fd_dsdw(w: MixingParams, x, hint, cfg: Optional[FdConfig] = None) -> DerivativeReport:
    """ds/dw from central differences of the tracked inverse, against dsdw"""
    cfg = cfg or FdConfig()
    x = as_pairs(x)
    s0 = invert_for_sources(w, x, hint)
    numeric = central_difference(lambda p: _tracked_inverse(p, x, s0, cfg.step), w.as_array(), cfg.step)
    return compare_derivatives(dsdw(w, s0), numeric, cfg.relative_tolerance, sample_axes=x.ndim - 1)


def fd_djdw(w: MixingParams, x, hint, cfg: Optional[FdConfig] = None) -> VariantComparison:
    """Derivative of w -> J(w, s(w; x)) against the total and the s-fixed formulas"""
    cfg = cfg or FdConfig()
    x = as_pairs(x)
    s0 = invert_for_sources(w, x, hint)

    def along_branch(p):
        return jacobian(MixingParams.from_array(p), _tracked_inverse(p, x, s0, cfg.step))

    numeric = central_difference(along_branch, w.as_array(), cfg.step)
    axes = x.ndim - 1
    return VariantComparison(
        corrected=compare_derivatives(djdw_total(w, s0), numeric, cfg.relative_tolerance, axes),
        legacy=compare_derivatives(djdw_explicit(w, s0), numeric, cfg.relative_tolerance, axes),
    )


def fd_gradient(
    w: MixingParams,
    x_batch: SignalBatch,
    densities: tuple[ScoreEvaluator, ScoreEvaluator],
    cfg: Optional[FdConfig] = None,
    hints=None,
) -> VariantComparison:
    """Central differences of the likelihood at fixed observations, against both gradients

    densities must provide log_pdf as well as score. hints default to x.
    """
    cfg = cfg or FdConfig()
    d1, d2 = densities
    x = x_batch.samples
    s0 = invert_for_sources(w, x, x if hints is None else hints)

    def objective(p):
        s = _tracked_inverse(p, x, s0, cfg.step)
        return log_likelihood(LikelihoodContext(MixingParams.from_array(p), SignalBatch(s), d1, d2))

    numeric = central_difference(objective, w.as_array(), cfg.step)
    ctx = LikelihoodContext(w, SignalBatch(s0), d1, d2)
    return VariantComparison(
        corrected=compare_derivatives(gradient_corrected(ctx), numeric, cfg.relative_tolerance),
        legacy=compare_derivatives(gradient_legacy(ctx), numeric, cfg.relative_tolerance),
    )


def djdw_total_expanded(w: MixingParams, s) -> np.ndarray:
    """Four-component closed form of the total dJ/dw, written out term by term"""
    s = as_pairs(s)
    s1, s2 = s[..., 0], s[..., 1]
    l1, l2, q1, q2 = w.l1, w.l2, w.q1, w.q2
    j = 1.0 - l1 * l2 - (q2 + l2 * q1) * s1 - (q1 + l1 * q2) * s2

    d_l1 = -(l2 + q2 * s2) - s2 * ((q2 + l2 * q1) * (1.0 - q2 * s1) + (q1 + l1 * q2) * (l2 + q2 * s2)) / j
    d_l2 = -(l1 + q1 * s1) - s1 * ((q2 + l2 * q1) * (l1 + q1 * s1) + (q1 + l1 * q2) * (1.0 - q1 * s2)) / j
    d_q1 = -(l2 * s1 + s2) - s1 * s2 * ((q2 + l2 * q1) * (1.0 - q2 * s1) + (q1 + l1 * q2) * (l2 + q2 * s2)) / j
    d_q2 = -(s1 + l1 * s2) - s1 * s2 * ((q2 + l2 * q1) * (l1 + q1 * s1) + (q1 + l1 * q2) * (1.0 - q1 * s2)) / j
    return np.stack([d_l1, d_l2, d_q1, d_q2], axis=-1)


def step_sweep(
    w: MixingParams,
    x_batch: SignalBatch,
    densities: tuple[ScoreEvaluator, ScoreEvaluator],
    steps=(1e-4, 1e-5, 1e-6, 1e-7),
    hints=None,
) -> list[tuple[float, float]]:
    """Corrected-gradient FD error for each step size, as (step, max_relative_error)"""
    rows = []
    for h in steps:
        report = fd_gradient(w, x_batch, densities, FdConfig(step=h), hints).corrected
        rows.append((float(h), report.max_relative_error))
        logger.debug(f"step {h:g}: corrected relative error {report.max_relative_error:.3e}")
    return rows


# ============================================================================
# Randomized Campaign
# ============================================================================

def _draw_config(rng: np.random.Generator, settings: GradcheckSettings):
    if settings.linear_only:
        l1, l2 = rng.uniform(-0.5, 0.5, size=2)
        w = MixingParams(l1, l2, 0.0, 0.0)
    else:
        w = MixingParams.from_array(rng.uniform(-0.5, 0.5, size=4))
    s = rng.uniform(-0.5, 0.5, size=(settings.n_samples, 2))
    return w, s


def _admissible(w: MixingParams, s: np.ndarray) -> bool:
    s1_range, s2_range = source_bounds(SignalBatch(s))
    if not classify_jacobian_sign(w, s1_range, s2_range).is_constant:
        return False
    return float(np.min(np.abs(jacobian(w, s)))) >= GRADCHECK_MIN_JACOBIAN


def _check_case(index: int, w: MixingParams, s: np.ndarray, cfg: FdConfig) -> GradcheckCase:
    x = mix(w, s)
    min_j = float(np.min(np.abs(jacobian(w, s))))
    legacy_expected = (
        max(abs(w.q1), abs(w.q2)) >= GRADCHECK_LEGACY_MIN_Q
        and float(np.mean(np.abs(s))) >= GRADCHECK_LEGACY_MIN_ABS_SOURCE
    )
    sens = fd_dsdw(w, x, s, cfg)
    jac = fd_djdw(w, x, s, cfg)
    densities = (gaussian_score(0.0, _CAMPAIGN_STD), gaussian_score(0.0, _CAMPAIGN_STD))
    grad = fd_gradient(w, SignalBatch(x), densities, cfg, hints=s)
    return GradcheckCase(
        index=index,
        params=w,
        min_abs_jacobian=min_j,
        dsdw_error=sens.max_relative_error,
        djdw_error=jac.corrected.max_relative_error,
        djdw_legacy_error=jac.legacy.max_relative_error,
        gradient_error=grad.corrected.max_relative_error,
        gradient_legacy_error=grad.legacy.max_relative_error,
        passed=sens.passed and jac.corrected.passed and grad.corrected.passed,
        legacy_expected=legacy_expected,
    )


def run_gradcheck_campaign(
    settings: Optional[GradcheckSettings] = None,
    seed: int = SEED,
    continue_on_error: bool = CONTINUE_ON_ERROR,
) -> GradcheckSummary:
    """Check dsdw, total dJ/dw and the corrected gradient on seeded random configurations

    Parameters are uniform in [-0.5, 0.5]^4 and sources uniform in
    [-0.5, 0.5]^2; configurations with min |J| < GRADCHECK_MIN_JACOBIAN or a
    sign change over the sample box are redrawn. The legacy gradient must be
    off by more than GRADCHECK_LEGACY_RATIO times the corrected error on at
    least GRADCHECK_LEGACY_SHARE of the strongly quadratic configurations.
    """
    settings = settings or GradcheckSettings()
    cfg = FdConfig(step=settings.step, relative_tolerance=settings.tolerance)
    rng = np.random.Generator(np.random.PCG64(seed))

    cases = []
    attempts = 0
    max_attempts = 50 * settings.n_configs
    while len(cases) < settings.n_configs and attempts < max_attempts:
        attempts += 1
        w, s = _draw_config(rng, settings)
        if not _admissible(w, s):
            continue
        index = len(cases)
        try:
            case = _check_case(index, w, s, cfg)
        except SeparationError as e:
            if not continue_on_error:
                raise
            logger.warning(f"✗ Case {index} {w}: {e}")
            case = GradcheckCase(
                index=index, params=w, min_abs_jacobian=float(np.min(np.abs(jacobian(w, s)))), error=str(e),
            )
        cases.append(case)
        logger.debug(
            f"Case {index}: corrected {case.gradient_error:.2e}, legacy {case.gradient_legacy_error:.2e}"
        )

    if len(cases) < settings.n_configs:
        logger.warning(f"Only {len(cases)} admissible configurations in {attempts} draws")

    worked = fd_djdw(WORKED_PARAMS, WORKED_OBSERVATION, WORKED_HINT, cfg)

    subset = [c for c in cases if c.legacy_expected and c.error is None]
    waived = settings.linear_only or not subset
    share = (
        sum(c.legacy_ratio > GRADCHECK_LEGACY_RATIO for c in subset) / len(subset) if subset else float('nan')
    )
    corrected_passed = bool(cases) and all(c.passed for c in cases) and worked.corrected.passed
    demonstrated = waived or (share >= GRADCHECK_LEGACY_SHARE and not worked.legacy.passed)

    logger.info(
        f"Gradcheck: {sum(c.passed for c in cases)}/{len(cases)} corrected cases passed, "
        f"legacy subset {len(subset)} (share above ratio: {share:.3f})"
    )
    return GradcheckSummary(
        cases=tuple(cases),
        worked_example=worked,
        corrected_passed=corrected_passed,
        legacy_subset_size=len(subset),
        legacy_share=share,
        legacy_demonstrated=demonstrated,
        legacy_waived=waived,
    )
