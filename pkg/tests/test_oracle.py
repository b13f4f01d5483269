"""Finite-difference oracle and the gradient-check campaign"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_admissible
from src.exceptions import BranchCrossingError
from src.models import FdConfig, GradcheckSettings, MixingParams, SignalBatch
from src.separation.mixing import mix
from src.separation.oracle import (
    WORKED_HINT, WORKED_OBSERVATION, WORKED_PARAMS, _tracked_inverse, central_difference,
    compare_derivatives, fd_djdw, fd_dsdw, fd_gradient, invert_for_sources, run_gradcheck_campaign,
    step_sweep,
)
from src.separation.scores import gaussian_score

DENSITIES = (gaussian_score(0.0, 0.3), gaussian_score(0.0, 0.3))


# ============================================================================
# Generic Helpers
# ============================================================================

def test_central_difference_is_exact_for_quadratics():
    grad = central_difference(lambda v: v[0] ** 2 + 3.0 * v[0] * v[1], [1.0, 2.0], 1e-3)
    assert_allclose(grad, [8.0, 3.0], rtol=1e-9)


def test_central_difference_stacks_on_last_axis():
    jac = central_difference(lambda v: np.array([v[0] * v[1], v[1]]), [2.0, 3.0], 1e-6)
    assert jac.shape == (2, 2)
    assert_allclose(jac, [[3.0, 2.0], [0.0, 1.0]], atol=1e-8)


def test_compare_derivatives_is_normwise():
    # the tiny component carries a large relative error but a small normwise one
    report = compare_derivatives([1.0, 2e-6], [1.0, 1e-6], 1e-5)
    assert report.passed
    assert report.max_relative_error == pytest.approx(1e-6)


def test_compare_derivatives_per_sample():
    analytic = [[1.0, 0.0], [1.0, 1.0]]
    numeric = [[1.0, 0.0], [1.1, 1.0]]
    report = compare_derivatives(analytic, numeric, 1e-3, sample_axes=1)
    assert not report.passed
    assert report.max_absolute_error == pytest.approx(0.1)


def test_compare_derivatives_near_zero_uses_absolute_error():
    assert compare_derivatives([1e-10, 0.0], [0.0, 0.0], 1e-5).passed
    assert not compare_derivatives([1e-8, 0.0], [0.0, 0.0], 1e-5).passed


def test_compare_derivatives_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        compare_derivatives([1.0, 2.0], [1.0], 1e-5)


# ============================================================================
# Branch Tracking
# ============================================================================

def test_inversion_follows_the_hint(w_star):
    assert_allclose(invert_for_sources(w_star, (0.8, 0.2), (0.4, 0.4)), [0.5, 0.5], atol=1e-12)
    assert_allclose(invert_for_sources(w_star, (0.8, 0.2), (2.0, -0.5)), [2.375, -0.75], atol=1e-12)


def test_lost_branch_is_reported(w_star):
    with pytest.raises(BranchCrossingError):
        _tracked_inverse(w_star.as_array(), np.array([0.8, 0.2]), np.array([10.0, 10.0]), 1e-6)


# ============================================================================
# Worked Example
# ============================================================================

def test_worked_dsdw_matches_finite_differences():
    report = fd_dsdw(WORKED_PARAMS, WORKED_OBSERVATION, WORKED_HINT)
    assert report.passed, report.max_relative_error
    assert_allclose(report.analytic, [[0.25, -0.25, 0.125, -0.125], [0.25, 7.0 / 12.0, 0.125, 3.5 / 12.0]])


def test_worked_djdw_separates_the_variants():
    comparison = fd_djdw(WORKED_PARAMS, WORKED_OBSERVATION, WORKED_HINT)
    assert_allclose(comparison.corrected.numeric, [-0.52, 1.32, -0.56, -0.04], atol=1e-6)
    assert comparison.corrected.passed
    assert not comparison.legacy.passed
    assert comparison.legacy.max_relative_error > 0.5


# ============================================================================
# Random Configurations
# ============================================================================

def test_dsdw_and_djdw_match_on_random_configs(rng):
    for w, s in random_admissible(rng, 50):
        x = mix(w, s)
        assert fd_dsdw(w, x, s).passed
        assert fd_djdw(w, x, s).corrected.passed


def test_corrected_gradient_matches_finite_differences(rng):
    for w, s in random_admissible(rng, 10, min_abs_j=0.2):
        s_batch = s + rng.uniform(-0.01, 0.01, size=(20, 2))
        x = SignalBatch(mix(w, s_batch))
        comparison = fd_gradient(w, x, DENSITIES, hints=s_batch)
        assert comparison.corrected.passed, (w, comparison.corrected.max_relative_error)


def test_linear_model_legacy_gradient_is_exact(rng):
    w = MixingParams(0.3, -0.2, 0.0, 0.0)
    s = rng.uniform(-0.5, 0.5, size=(20, 2))
    comparison = fd_gradient(w, SignalBatch(mix(w, s)), DENSITIES, hints=s)
    assert comparison.corrected.passed
    assert comparison.legacy.passed


def test_step_sweep_reports_each_step(w_star, rng):
    s = rng.uniform(-0.5, 0.5, size=(20, 2))
    rows = step_sweep(w_star, SignalBatch(mix(w_star, s)), DENSITIES, hints=s)
    assert [h for h, _ in rows] == [1e-4, 1e-5, 1e-6, 1e-7]
    assert min(err for _, err in rows) < 1e-6


def test_fd_config_validation():
    with pytest.raises(ValueError):
        FdConfig(step=0.0)
    with pytest.raises(ValueError):
        FdConfig(relative_tolerance=-1.0)


# ============================================================================
# Campaign
# ============================================================================

def test_default_campaign_passes():
    summary = run_gradcheck_campaign()
    assert len(summary.cases) == 100
    assert summary.corrected_passed
    assert summary.legacy_subset_size > 0
    assert summary.legacy_share >= 0.95
    assert summary.passed
    assert all(case.min_abs_jacobian >= 0.1 for case in summary.cases)


def test_campaign_is_reproducible():
    settings = GradcheckSettings(n_configs=5, n_samples=5)
    first = run_gradcheck_campaign(settings, seed=3)
    second = run_gradcheck_campaign(settings, seed=3)
    assert [c.params for c in first.cases] == [c.params for c in second.cases]
    assert [c.gradient_error for c in first.cases] == [c.gradient_error for c in second.cases]


def test_linear_campaign_waives_legacy_check():
    summary = run_gradcheck_campaign(GradcheckSettings(n_configs=10, n_samples=10, linear_only=True))
    assert summary.legacy_waived
    assert summary.legacy_subset_size == 0
    assert summary.passed
    assert all(c.params.q1 == 0.0 and c.params.q2 == 0.0 for c in summary.cases)
