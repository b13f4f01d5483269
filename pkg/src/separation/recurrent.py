"""
Recurrent separating structure
Fixed-point iteration recovering the sources without explicit inversion

    y1(n+1) = x1 + l1*y2(n) + q1*y1(n)*y2(n)
    y2(n+1) = x2 + l2*y1(n) + q2*y1(n)*y2(n)

With q1 = q2 = 0 this is the linear Herault-Jutten network.
"""

import logging
from typing import Optional

import numpy as np

from src.models import (
    MixingParams, RecurrenceConfig, RecurrenceResult, BatchRecurrenceResult, StabilityReport,
)
from src.separation.mixing import as_pairs

logger = logging.getLogger(__name__)


def iterate_once(w: MixingParams, x, y) -> np.ndarray:
    x = as_pairs(x)
    y = as_pairs(y)
    y1, y2 = y[..., 0], y[..., 1]
    cross = y1 * y2
    return np.stack([
        x[..., 0] + w.l1 * y2 + w.q1 * cross,
        x[..., 1] + w.l2 * y1 + w.q2 * cross,
    ], axis=-1)


def run_recurrence_batch(
    w: MixingParams,
    x,
    y0=None,
    cfg: Optional[RecurrenceConfig] = None,
) -> BatchRecurrenceResult:
    """Iterate every sample of an (N, 2) batch until it converges, diverges or runs out of steps

    Samples stop independently; a finished sample is frozen at its last output.
    y0 defaults to x.
    """
    cfg = cfg or RecurrenceConfig()
    x = np.atleast_2d(as_pairs(x))
    y = x.copy() if y0 is None else np.array(np.broadcast_to(as_pairs(y0), x.shape), dtype=float)
    n = x.shape[0]

    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    diverged = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)

    for _ in range(cfg.max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        with np.errstate(over='ignore', invalid='ignore'):
            y_next = iterate_once(w, x[idx], y[idx])
            step = np.max(np.abs(y_next - y[idx]), axis=1)
            blown = ~np.all(np.isfinite(y_next), axis=1) | (
                np.max(np.abs(y_next), axis=1) > cfg.divergence_bound
            )
        iterations[idx] += 1
        y[idx] = y_next
        done = (step < cfg.tolerance) & ~blown
        diverged[idx[blown]] = True
        converged[idx[done]] = True
        active[idx[blown | done]] = False

    return BatchRecurrenceResult(outputs=y, iterations=iterations, converged=converged, diverged=diverged)


def run_recurrence(
    w: MixingParams,
    x,
    y0=None,
    cfg: Optional[RecurrenceConfig] = None,
) -> RecurrenceResult:
    """Iterate a single observation pair"""
    result = run_recurrence_batch(w, np.reshape(as_pairs(x), (1, 2)),
                                  None if y0 is None else np.reshape(as_pairs(y0), (1, 2)), cfg)
    y1, y2 = result.outputs[0]
    return RecurrenceResult(
        output=(float(y1), float(y2)),
        iterations_used=int(result.iterations[0]),
        status=result.status_of(0),
    )


def recurrence_jacobian(w: MixingParams, y) -> np.ndarray:
    """Derivative of iterate_once with respect to y, shape (..., 2, 2)"""
    y = as_pairs(y)
    y1, y2 = y[..., 0], y[..., 1]
    out = np.empty(y.shape[:-1] + (2, 2))
    out[..., 0, 0] = w.q1 * y2
    out[..., 0, 1] = w.l1 + w.q1 * y1
    out[..., 1, 0] = w.l2 + w.q2 * y2
    out[..., 1, 1] = w.q2 * y1
    return out


def eigenvalue_magnitudes(matrix) -> np.ndarray:
    """|eigenvalues| of 2x2 matrices from the characteristic polynomial, ascending, shape (..., 2)"""
    m = np.asarray(matrix, dtype=float)
    trace = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = trace * trace - 4.0 * det
    real_root = np.sqrt(np.maximum(disc, 0.0))
    real_pair = np.stack([np.abs(trace - real_root), np.abs(trace + real_root)], axis=-1) / 2.0
    # complex pair: both moduli equal sqrt(det)
    complex_pair = np.repeat(np.sqrt(np.maximum(det, 0.0))[..., None], 2, axis=-1)
    mags = np.where((disc >= 0.0)[..., None], real_pair, complex_pair)
    return np.sort(mags, axis=-1)


def stability_at(w: MixingParams, s) -> StabilityReport:
    """Local stability of the recurrence at the separating point y = s"""
    mags = eigenvalue_magnitudes(recurrence_jacobian(w, s))
    small, large = (float(v) for v in mags)
    return StabilityReport(eigenvalue_magnitudes=(small, large), locally_stable=large < 1.0)


def stability_grid(w: MixingParams, s1_range, s2_range, size: int) -> np.ndarray:
    """Stability over a size x size source grid

    Rows are (s1, s2, magnitude_small, magnitude_large, stable).
    """
    s1 = np.linspace(float(s1_range[0]), float(s1_range[1]), size)
    s2 = np.linspace(float(s2_range[0]), float(s2_range[1]), size)
    grid = np.stack(np.meshgrid(s1, s2, indexing='ij'), axis=-1).reshape(-1, 2)
    mags = eigenvalue_magnitudes(recurrence_jacobian(w, grid))
    stable = (mags[:, 1] < 1.0).astype(float)
    return np.column_stack([grid, mags, stable])
