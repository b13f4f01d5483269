"""
Maximum-likelihood training loop using LangGraph
Each epoch reconstructs the sources, fits the scores, computes the gradient
and ascends it: w(n+1) = w(n) + mu * dL/dw
"""

import logging
from typing import TypedDict, Optional

import numpy as np
from langgraph.graph import StateGraph, END

from src.config import JACOBIAN_FLOOR, PROGRESS_EVERY
from src.exceptions import (
    LogDensityError, MixedSignError, NumericalError, ReconstructionError, SeparationError,
)
from src.models import (
    MixingParams, SignalBatch, RecurrenceConfig, ReconstructionResult, OptimizerConfig,
    ScoreMode, TrainStatus, TrainReport,
)
from src.separation.likelihood import LikelihoodContext, gradient, log_likelihood
from src.separation.metrics import align_and_score
from src.separation.mixing import (
    classify_jacobian_sign, direct_inverse, jacobian, select_root, source_bounds,
)
from src.separation.recurrent import run_recurrence_batch
from src.separation.scores import fit_kernel_score

logger = logging.getLogger(__name__)


# ============================================================================
# Reconstruction
# ============================================================================

def _direct_fallback(w: MixingParams, x: np.ndarray, outputs: np.ndarray, ok: np.ndarray, bad: np.ndarray):
    """Direct-inverse roots for failed rows, when the sign class of the converged rows allows it

    Returns one flag per failed row.
    """
    recovered = np.zeros(int(np.count_nonzero(bad)), dtype=bool)
    if not np.any(ok):
        return recovered
    s1_range, s2_range = source_bounds(SignalBatch(outputs[ok]))
    sign_class = classify_jacobian_sign(w, s1_range, s2_range)
    if not sign_class.is_constant:
        logger.debug("Direct fallback unavailable: Jacobian changes sign over the reconstructed sources")
        return recovered

    for k, row in enumerate(np.flatnonzero(bad)):
        try:
            root = select_root(direct_inverse(w, x[row]), sign_class)
        except (NumericalError, MixedSignError):
            continue
        if np.all(np.isfinite(root)):
            outputs[row] = root
            recovered[k] = True
    return recovered


def reconstruct(
    w: MixingParams,
    x_batch: SignalBatch,
    cfg: Optional[RecurrenceConfig] = None,
) -> ReconstructionResult:
    """Run the recurrent structure on every sample, falling back to the direct inverse

    Samples that diverge or run out of iterations without a usable fallback
    are dropped.
    """
    cfg = cfg or RecurrenceConfig()
    x = x_batch.samples
    result = run_recurrence_batch(w, x, cfg=cfg)
    outputs = result.outputs.copy()
    ok = result.converged.copy()
    bad = ~result.converged
    fallback_count = 0

    if np.any(bad):
        recovered = _direct_fallback(w, x, outputs, ok, bad)
        fallback_count = int(np.count_nonzero(recovered))
        ok[np.flatnonzero(bad)[recovered]] = True
        logger.debug(
            f"{int(bad.sum())} unconverged sample(s): {fallback_count} recovered by direct inversion"
        )

    if not np.any(ok):
        raise ReconstructionError(f"all {len(x_batch)} samples failed to reconstruct at w={w}")
    return ReconstructionResult(sources=SignalBatch(outputs[ok]), kept=ok, fallback_count=fallback_count)


def reconstruct_batch(
    w: MixingParams,
    x_batch: SignalBatch,
    cfg: Optional[RecurrenceConfig] = None,
) -> SignalBatch:
    return reconstruct(w, x_batch, cfg).sources


# ============================================================================
# State Definition
# ============================================================================

class TrainingState(TypedDict):
    """LangGraph execution state

    accepted holds (params, gradient, likelihood) of the last accepted epoch
    when the step guard is on; retry marks an epoch that failed and is taken
    again from there.
    """
    x_batch: SignalBatch
    optimizer: OptimizerConfig
    recurrence: RecurrenceConfig
    params: MixingParams
    learning_rate: float
    epoch: int
    sources: Optional[SignalBatch]
    excluded: int
    scores: Optional[tuple]
    gradient: Optional[np.ndarray]
    accepted: Optional[tuple]
    retry: bool
    params_history: list
    likelihood_history: list
    gradient_norm_history: list
    excluded_history: list
    status: Optional[TrainStatus]
    error: Optional[str]


# ============================================================================
# Node Functions
# ============================================================================

def _record(state: TrainingState, likelihood: float, norm: float):
    state['epoch'] += 1
    state['params_history'].append(state['params'])
    state['likelihood_history'].append(likelihood)
    state['gradient_norm_history'].append(norm)
    state['excluded_history'].append(state['excluded'])


def _diverge(state: TrainingState, step: str, e: Exception) -> TrainingState:
    logger.error(f"✗ Epoch {state['epoch'] + 1} {step} failed: {e}")
    state['status'] = TrainStatus.DIVERGED
    state['error'] = f"{step}: {e}"
    return state


def _fail(state: TrainingState, step: str, e: Exception, recorded: bool = False) -> TrainingState:
    """Diverge, or with the step guard retry from the last accepted epoch"""
    if not state['optimizer'].halve_on_decrease or state['accepted'] is None:
        return _diverge(state, step, e)

    if not recorded:
        _record(state, float('nan'), float('nan'))
    logger.warning(f"Epoch {state['epoch']} {step} failed at w={state['params']}: {e}; retrying")
    state['retry'] = True
    return state


def reconstruct_sources(state: TrainingState) -> TrainingState:
    """Recover the sources at the current parameters, excluding near-singular samples"""
    try:
        rec = reconstruct(state['params'], state['x_batch'], state['recurrence'])
    except SeparationError as e:
        return _fail(state, 'reconstruct', e)

    y = rec.sources.samples
    regular = np.abs(jacobian(state['params'], y)) >= JACOBIAN_FLOOR
    if not np.any(regular):
        return _fail(state, 'reconstruct', ReconstructionError("every sample has |J| below the floor"))

    state['sources'] = SignalBatch(y[regular]) if not np.all(regular) else rec.sources
    state['excluded'] = rec.dropped_count + int(np.count_nonzero(~regular))
    return state


def fit_scores(state: TrainingState) -> TrainingState:
    """Use the configured analytic scores, or refit the kernel scores on schedule"""
    cfg = state['optimizer']
    if cfg.score_mode is ScoreMode.ANALYTIC:
        state['scores'] = tuple(cfg.analytic_scores)
        return state

    if state['scores'] is None or state['epoch'] % cfg.refit_every == 0:
        try:
            sources = state['sources']
            state['scores'] = (
                fit_kernel_score(sources.first, bandwidth=cfg.bandwidth),
                fit_kernel_score(sources.second, bandwidth=cfg.bandwidth),
            )
        except SeparationError as e:
            return _fail(state, 'fit_scores', e)
    return state


def compute_gradient(state: TrainingState) -> TrainingState:
    """Evaluate the gradient and likelihood, record the epoch and test convergence"""
    cfg = state['optimizer']
    score1, score2 = state['scores']
    try:
        ctx = LikelihoodContext(state['params'], state['sources'], score1, score2)
        grad = gradient(ctx, cfg.gradient_variant)
    except SeparationError as e:
        return _fail(state, 'compute_gradient', e)

    try:
        likelihood = log_likelihood(ctx)
    except LogDensityError as e:
        logger.debug(f"Likelihood not finite at epoch {state['epoch'] + 1}: {e}")
        likelihood = float('nan')

    norm = float(np.max(np.abs(grad)))
    state['gradient'] = grad
    _record(state, likelihood, norm)

    epoch = state['epoch']
    message = (
        f"Epoch {epoch}: L={likelihood:.6f}, |grad|={norm:.3e}, "
        f"w={state['params']}, excluded={state['excluded']}"
    )
    if epoch % PROGRESS_EVERY == 0:
        logger.info(message)
    else:
        logger.debug(message)

    if not np.all(np.isfinite(grad)):
        return _fail(state, 'compute_gradient', NumericalError("gradient is not finite"), recorded=True)
    if norm < cfg.gradient_norm_tolerance:
        state['status'] = TrainStatus.CONVERGED
    return state


def _improves(likelihood: float, accepted: Optional[tuple]) -> bool:
    if accepted is None or not np.isfinite(accepted[2]):
        return True
    return bool(np.isfinite(likelihood) and likelihood >= accepted[2])


def _guarded_origin(state: TrainingState) -> tuple[MixingParams, np.ndarray]:
    """Accept the epoch or reject it; returns the point and gradient to step from"""
    cfg = state['optimizer']
    likelihood = state['likelihood_history'][-1]
    accepted = state['accepted']

    if not state['retry'] and _improves(likelihood, accepted):
        if accepted is not None:
            state['learning_rate'] = min(2.0 * state['learning_rate'], cfg.learning_rate)
        state['accepted'] = (state['params'], state['gradient'], likelihood)
    else:
        state['learning_rate'] *= 0.5
        logger.info(
            f"Epoch {state['epoch']} rejected (L={likelihood:.6f}, accepted L={accepted[2]:.6f}); "
            f"learning rate -> {state['learning_rate']:g}"
        )
    state['retry'] = False
    params, grad, _ = state['accepted']
    return params, grad


def update_params(state: TrainingState) -> TrainingState:
    """Ascend the gradient, capping the step and applying the guard when configured"""
    cfg = state['optimizer']
    if cfg.halve_on_decrease:
        origin, grad = _guarded_origin(state)
    else:
        origin, grad = state['params'], state['gradient']

    delta = state['learning_rate'] * grad
    if cfg.max_step is not None:
        largest = float(np.max(np.abs(delta)))
        if largest > cfg.max_step:
            delta = delta * (cfg.max_step / largest)

    step = origin.as_array() + delta
    if not np.all(np.isfinite(step)):
        return _diverge(state, 'update_params', NumericalError("parameter update is not finite"))
    state['params'] = MixingParams.from_array(step)

    if state['epoch'] >= cfg.max_epochs:
        state['status'] = TrainStatus.MAX_EPOCHS
    return state


def finalize(state: TrainingState) -> TrainingState:
    """Report the last accepted parameters when the guard ends the run away from a converged point"""
    accepted = state['accepted']
    if accepted is not None and state['status'] is not TrainStatus.CONVERGED:
        state['params'] = accepted[0]
    logger.debug(f"Training stopped after {state['epoch']} epoch(s): {state['status'].value}")
    return state


# ============================================================================
# Conditional Routers
# ============================================================================

def should_continue(state: TrainingState) -> str:
    """Stop as soon as a node has set a terminal status; a guarded failure goes back to the update"""
    if state['status'] is not None:
        return 'finalize'
    if state['retry']:
        return 'retry'
    return 'continue'


def should_start_next_epoch(state: TrainingState) -> str:
    if state['status'] is not None:
        return 'finalize'
    return 'next_epoch'


# ============================================================================
# Graph Builder
# ============================================================================

def build_training_graph():
    """Build LangGraph training loop"""
    graph = StateGraph(TrainingState)

    graph.add_node('reconstruct', reconstruct_sources)
    graph.add_node('fit_scores', fit_scores)
    graph.add_node('compute_gradient', compute_gradient)
    graph.add_node('update_params', update_params)
    graph.add_node('finalize', finalize)

    graph.add_conditional_edges(
        'reconstruct',
        should_continue,
        {'continue': 'fit_scores', 'retry': 'update_params', 'finalize': 'finalize'},
    )
    graph.add_conditional_edges(
        'fit_scores',
        should_continue,
        {'continue': 'compute_gradient', 'retry': 'update_params', 'finalize': 'finalize'},
    )
    graph.add_conditional_edges(
        'compute_gradient',
        should_continue,
        {'continue': 'update_params', 'retry': 'update_params', 'finalize': 'finalize'},
    )
    graph.add_conditional_edges(
        'update_params',
        should_start_next_epoch,
        {
            'next_epoch': 'reconstruct',
            'finalize': 'finalize'
        }
    )
    graph.add_edge('finalize', END)
    graph.set_entry_point('reconstruct')

    return graph.compile()


# ============================================================================
# Pipeline Executor
# ============================================================================

class TrainingPipeline:
    """Gradient-ascent separation of one observation batch"""

    def __init__(
        self,
        cfg: Optional[OptimizerConfig] = None,
        recurrence: Optional[RecurrenceConfig] = None,
    ):
        self.cfg = cfg or OptimizerConfig()
        self.recurrence = recurrence or RecurrenceConfig()
        self.graph = build_training_graph()

    def initial_state(self, x_batch: SignalBatch) -> TrainingState:
        return {
            'x_batch': x_batch,
            'optimizer': self.cfg,
            'recurrence': self.recurrence,
            'params': self.cfg.initial_params,
            'learning_rate': self.cfg.learning_rate,
            'epoch': 0,
            'sources': None,
            'excluded': 0,
            'scores': None,
            'gradient': None,
            'accepted': None,
            'retry': False,
            'params_history': [],
            'likelihood_history': [],
            'gradient_norm_history': [],
            'excluded_history': [],
            'status': None,
            'error': None,
        }

    def fit(self, x_batch: SignalBatch, truth: Optional[SignalBatch] = None) -> TrainReport:
        """Run the graph to completion and assemble the report"""
        # reconstruct, fit_scores, compute_gradient and update_params per epoch, plus finalize
        limit = 4 * self.cfg.max_epochs + 10
        state = self.graph.invoke(self.initial_state(x_batch), config={'recursion_limit': limit})

        metrics = None
        if truth is not None and state['status'] is not TrainStatus.DIVERGED:
            try:
                rec = reconstruct(state['params'], x_batch, self.recurrence)
                metrics = align_and_score(rec.sources, truth.subset(rec.kept))
            except SeparationError as e:
                logger.warning(f"Metrics unavailable: {e}")

        return TrainReport(
            final_params=state['params'],
            epochs_run=state['epoch'],
            status=state['status'],
            params_trajectory=tuple(state['params_history']),
            likelihood_trajectory=tuple(state['likelihood_history']),
            gradient_norm_trajectory=tuple(state['gradient_norm_history']),
            excluded_trajectory=tuple(state['excluded_history']),
            metrics=metrics,
        )

    def run(self, x_batch: SignalBatch, truth: Optional[SignalBatch] = None) -> dict:
        """Execute training, never raising"""
        logger.info("=" * 60)
        logger.info("Starting Linear-Quadratic Separation Training")
        logger.info(
            f"  N={len(x_batch)}, mu={self.cfg.learning_rate:g}, "
            f"scores={self.cfg.score_mode.value}, gradient={self.cfg.gradient_variant.value}"
        )
        logger.info("=" * 60)

        try:
            report = self.fit(x_batch, truth)
        except Exception as e:
            logger.error(f"✗ Training failed: {e}", exc_info=True)
            return {'success': False, 'error': str(e)}

        mark = '✗' if report.status is TrainStatus.DIVERGED else '✓'
        logger.info("=" * 60)
        logger.info(f"{mark} Training finished: {report.status.value} after {report.epochs_run} epoch(s)")
        logger.info(f"  Final parameters: {report.final_params}")
        if report.metrics is not None:
            logger.info(
                f"  SIR: {report.metrics.sir_db[0]:.1f} / {report.metrics.sir_db[1]:.1f} dB "
                f"(permuted: {report.metrics.permuted})"
            )
        logger.info("=" * 60)

        return {
            'success': report.status is not TrainStatus.DIVERGED,
            'report': report,
        }


# ============================================================================
# Entry Point
# ============================================================================

def train(
    x_batch: SignalBatch,
    cfg: Optional[OptimizerConfig] = None,
    recurrence: Optional[RecurrenceConfig] = None,
    truth: Optional[SignalBatch] = None,
) -> TrainReport:
    """Train on the observations; truth adds separation metrics to the report"""
    return TrainingPipeline(cfg, recurrence).fit(x_batch, truth)
