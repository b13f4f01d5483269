"""Numerical core: mixing model, separating structures, scores, likelihood, oracle, metrics"""

from src.separation.mixing import (
    normalize_raw, sources_from_raw, mix_raw, mix, mix_batch, jacobian,
    mixing_jacobian_matrix, mixing_parameter_derivative, direct_inverse, select_root,
    permuted_solution, classify_jacobian_sign, source_bounds, jacobian_zero_locus,
)
from src.separation.recurrent import (
    iterate_once, run_recurrence, run_recurrence_batch, recurrence_jacobian,
    eigenvalue_magnitudes, stability_at, stability_grid,
)
from src.separation.scores import (
    ScoreEvaluator, KernelScoreModel, gaussian_score, laplace_score, uniform_score,
    analytic_score_for, fit_kernel_score, eval_score,
)
from src.separation.likelihood import (
    LikelihoodContext, observation_log_density, log_likelihood, dsdw, djdw_explicit,
    djds, djdw_total, gradient_corrected, gradient_legacy, gradient,
)
from src.separation.oracle import (
    central_difference, fd_jacobian, compare_derivatives, invert_for_sources, fd_dsdw,
    fd_djdw, fd_gradient, djdw_total_expanded, step_sweep, run_gradcheck_campaign,
)
from src.separation.metrics import align_and_score

__all__ = [
    'normalize_raw', 'sources_from_raw', 'mix_raw', 'mix', 'mix_batch', 'jacobian',
    'mixing_jacobian_matrix', 'mixing_parameter_derivative', 'direct_inverse', 'select_root',
    'permuted_solution', 'classify_jacobian_sign', 'source_bounds', 'jacobian_zero_locus',
    'iterate_once', 'run_recurrence', 'run_recurrence_batch', 'recurrence_jacobian',
    'eigenvalue_magnitudes', 'stability_at', 'stability_grid',
    'ScoreEvaluator', 'KernelScoreModel', 'gaussian_score', 'laplace_score', 'uniform_score',
    'analytic_score_for', 'fit_kernel_score', 'eval_score',
    'LikelihoodContext', 'observation_log_density', 'log_likelihood', 'dsdw', 'djdw_explicit',
    'djds', 'djdw_total', 'gradient_corrected', 'gradient_legacy', 'gradient',
    'central_difference', 'fd_jacobian', 'compare_derivatives', 'invert_for_sources', 'fd_dsdw',
    'fd_djdw', 'fd_gradient', 'djdw_total_expanded', 'step_sweep', 'run_gradcheck_campaign',
    'align_and_score',
]
