"""Mixing model, closed-form inversion and sign classes"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.exceptions import (
    DegenerateCoefficientsError, DegenerateModelError, MixedSignError, ShapeMismatchError,
)
from src.models import JacobianSignClass, MixingParams, RawCoefficients, SignalBatch
from src.separation.mixing import (
    classify_jacobian_sign, direct_inverse, jacobian, jacobian_zero_locus, mix, mix_batch, mix_raw,
    mixing_jacobian_matrix, mixing_parameter_derivative, normalize_raw, permuted_solution,
    select_root, source_bounds, sources_from_raw,
)
from src.separation.oracle import fd_jacobian


# ============================================================================
# Value Types
# ============================================================================

def test_params_reject_non_finite():
    with pytest.raises(ValueError):
        MixingParams(0.0, float('nan'), 0.0, 0.0)


def test_params_array_order(w_star):
    assert_allclose(w_star.as_array(), [-0.2, 0.2, -0.8, 0.8])
    assert MixingParams.from_array(w_star.as_array()) == w_star
    with pytest.raises(ShapeMismatchError):
        MixingParams.from_array([1.0, 2.0])


def test_raw_coefficients_need_nonzero_diagonal():
    with pytest.raises(DegenerateCoefficientsError):
        RawCoefficients(a11=0.0, a12=0.1, a21=0.1, a22=1.0, b1=0.0, b2=0.0)


def test_signal_batch_is_read_only_pairs():
    batch = SignalBatch([[1.0, 2.0], [3.0, 4.0]])
    assert len(batch) == 2
    assert_allclose(batch.second, [2.0, 4.0])
    with pytest.raises(ValueError):
        batch.samples[0, 0] = 5.0
    with pytest.raises(ShapeMismatchError):
        SignalBatch(np.zeros((3, 3)))


# ============================================================================
# Forward Model
# ============================================================================

def test_mix_worked_example(w_star):
    assert_allclose(mix(w_star, (0.5, 0.5)), [0.8, 0.2], atol=1e-15)
    assert jacobian(w_star, (0.5, 0.5)) == pytest.approx(1.2, abs=1e-12)


def test_identity_mix_returns_sources(identity):
    s = np.array([[0.3, -0.1], [0.0, 0.4]])
    assert_allclose(mix(identity, s), s)
    assert_allclose(jacobian(identity, s), [1.0, 1.0])


def test_mix_batch_matches_mix(w_star, rng):
    batch = SignalBatch(rng.uniform(-0.5, 0.5, size=(20, 2)))
    assert_allclose(mix_batch(w_star, batch).samples, mix(w_star, batch.samples))


def test_raw_model_factors_through_normalized(rng):
    raw = RawCoefficients(a11=1.5, a12=0.4, a21=-0.3, a22=0.8, b1=0.6, b2=-0.2)
    u = rng.uniform(-1.0, 1.0, size=(50, 2))
    assert_allclose(mix_raw(raw, u), mix(normalize_raw(raw), sources_from_raw(raw, u)), atol=1e-14)


def test_jacobian_is_determinant_of_mixing_derivative(w_star):
    matrix = mixing_jacobian_matrix(w_star, (0.5, 0.5))
    assert_allclose(matrix, [[1.4, 0.6], [-0.6, 0.6]], atol=1e-15)
    assert np.linalg.det(matrix) == pytest.approx(1.2, abs=1e-12)


def test_mixing_derivatives_match_finite_differences(rng):
    for _ in range(20):
        w = MixingParams.from_array(rng.uniform(-0.5, 0.5, size=4))
        s = rng.uniform(-0.5, 0.5, size=2)
        assert_allclose(mixing_jacobian_matrix(w, s), fd_jacobian(lambda v: mix(w, v), s, 1e-6), atol=1e-8)
        numeric = fd_jacobian(lambda p: mix(MixingParams.from_array(p), s), w.as_array(), 1e-6)
        assert_allclose(mixing_parameter_derivative(s), numeric, atol=1e-8)


# ============================================================================
# Direct Separating Structures
# ============================================================================

def test_direct_inverse_worked_example(w_star):
    cands = direct_inverse(w_star, (0.8, 0.2))
    assert_allclose(cands.root_minus, [0.5, 0.5], atol=1e-12)
    assert_allclose(cands.root_plus, [2.375, -0.75], atol=1e-12)
    assert_allclose(cands.discriminants, [1.44, 1.44], atol=1e-12)


def test_quadratic_identity_ties_roots_to_jacobian(w_star):
    # 2*a_i*s_i + b_i = -J at the true sources
    x1, x2 = 0.8, 0.2
    offset = w_star.l1 * w_star.l2 - 1.0
    b1 = w_star.q1 * x2 - w_star.q2 * x1 + offset
    b2 = w_star.q2 * x1 - w_star.q1 * x2 + offset
    assert 2 * w_star.a1 * 0.5 + b1 == pytest.approx(-1.2, abs=1e-12)
    assert 2 * w_star.a2 * 0.5 + b2 == pytest.approx(-1.2, abs=1e-12)


def test_identity_inverse_is_observation(identity):
    cands = direct_inverse(identity, (0.3, -0.7))
    assert_allclose(cands.root_plus, [0.3, -0.7])
    assert_allclose(cands.root_minus, [0.3, -0.7])


def test_roundtrip_on_random_admissible_inputs(rng):
    for _ in range(100):
        w = MixingParams.from_array(rng.uniform(-0.3, 0.3, size=4))
        s = rng.uniform(-0.5, 0.5, size=(10, 2))
        assert classify_jacobian_sign(w, (-0.5, 0.5), (-0.5, 0.5)) is JacobianSignClass.ALWAYS_POSITIVE
        cands = direct_inverse(w, mix(w, s))
        assert_allclose(select_root(cands, JacobianSignClass.ALWAYS_POSITIVE), s, atol=1e-10)
        j_squared = jacobian(w, s) ** 2
        assert_allclose(cands.discriminants, np.column_stack([j_squared, j_squared]), rtol=1e-10)


def test_negative_jacobian_selects_plus_root():
    # J = 1 - 2*s1 < 0 for s1 in [0.6, 0.9]
    w = MixingParams(0.0, 0.0, 0.0, 2.0)
    s = np.array([[0.7, 0.2], [0.85, -0.3]])
    assert classify_jacobian_sign(w, (0.6, 0.9), (-0.5, 0.5)) is JacobianSignClass.ALWAYS_NEGATIVE
    recovered = select_root(direct_inverse(w, mix(w, s)), JacobianSignClass.ALWAYS_NEGATIVE)
    assert_allclose(recovered, s, atol=1e-12)


def test_select_root_rejects_mixed_sign(w_star):
    with pytest.raises(MixedSignError):
        select_root(direct_inverse(w_star, (0.8, 0.2)), JacobianSignClass.MIXED_SIGN)


def test_permuted_solution_reproduces_observations(w_star, rng):
    assert_allclose(permuted_solution(w_star, (0.5, 0.5)), [2.375, -0.75], atol=1e-12)
    s = rng.uniform(-0.5, 0.5, size=(200, 2))
    assert_allclose(mix(w_star, permuted_solution(w_star, s)), mix(w_star, s), atol=1e-10)


def test_permuted_solution_needs_quadratic_terms(identity):
    with pytest.raises(DegenerateModelError):
        permuted_solution(identity, (0.1, 0.2))


# ============================================================================
# Sign Classification
# ============================================================================

def test_sign_class_depends_on_source_range(w_star):
    assert classify_jacobian_sign(w_star, (-0.5, 0.5), (-0.5, 0.5)) is JacobianSignClass.ALWAYS_POSITIVE
    assert classify_jacobian_sign(w_star, (-2.0, 2.0), (-2.0, 2.0)) is JacobianSignClass.MIXED_SIGN


def test_sign_class_rejects_reversed_range(w_star):
    with pytest.raises(ValueError):
        classify_jacobian_sign(w_star, (0.5, -0.5), (-0.5, 0.5))


def test_source_bounds():
    batch = SignalBatch([[0.1, -0.4], [-0.3, 0.2], [0.25, 0.0]])
    assert source_bounds(batch) == ((-0.3, 0.25), (-0.4, 0.2))


def test_zero_locus_lies_on_singular_line(w_star):
    locus = jacobian_zero_locus(w_star, (-2.0, 2.0), (-2.0, 2.0), 200)
    assert len(locus) > 100
    assert np.all(np.abs(jacobian(w_star, locus)) <= 1e-9)
    assert np.all((locus >= -2.0) & (locus <= 2.0))


def test_zero_locus_outside_bounded_range_is_empty(w_star):
    assert jacobian_zero_locus(w_star, (-0.5, 0.5), (-0.5, 0.5), 200).shape == (0, 2)


def test_zero_locus_undefined_for_linear_model(identity):
    with pytest.raises(DegenerateModelError):
        jacobian_zero_locus(identity, (-1.0, 1.0), (-1.0, 1.0), 10)
