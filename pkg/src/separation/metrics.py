"""
Separation quality modulo permutation, scale and offset
"""

import logging

import numpy as np

from src.config import SIR_CAP_DB
from src.exceptions import DegenerateSignalError, ShapeMismatchError
from src.models import SeparationMetrics, SignalBatch

logger = logging.getLogger(__name__)


def _affine_fit(y: np.ndarray, s: np.ndarray) -> tuple[float, float, float]:
    """Least-squares y ~ alpha*s + beta, returning (alpha, beta, sir_db)"""
    s_c = s - s.mean()
    y_c = y - y.mean()
    var_s = float(np.mean(s_c * s_c))
    alpha = float(np.mean(y_c * s_c)) / var_s
    beta = float(y.mean() - alpha * s.mean())
    residual = y_c - alpha * s_c
    signal_power = alpha * alpha * var_s
    noise_power = float(np.mean(residual * residual))
    if noise_power == 0.0:
        return alpha, beta, SIR_CAP_DB
    if signal_power == 0.0:
        return alpha, beta, -SIR_CAP_DB
    sir = 10.0 * np.log10(signal_power / noise_power)
    return alpha, beta, float(np.clip(sir, -SIR_CAP_DB, SIR_CAP_DB))


def align_and_score(y_batch: SignalBatch, s_batch: SignalBatch) -> SeparationMetrics:
    """Per-output SIR after the best of the identity and swapped affine alignments"""
    if len(y_batch) != len(s_batch):
        raise ShapeMismatchError(f"length mismatch: {len(y_batch)} outputs vs {len(s_batch)} sources")
    for name, batch in (('output', y_batch), ('source', s_batch)):
        flat = np.ptp(batch.samples, axis=0) == 0.0
        if np.any(flat):
            raise DegenerateSignalError(f"{name} channel {int(np.flatnonzero(flat)[0]) + 1} has zero variance")

    y, s = y_batch.samples, s_batch.samples
    fits = {}
    for permuted, order in ((False, (0, 1)), (True, (1, 0))):
        fits[permuted] = [_affine_fit(y[:, i], s[:, order[i]]) for i in range(2)]

    def mean_sir(permuted: bool) -> float:
        return 0.5 * (fits[permuted][0][2] + fits[permuted][1][2])

    permuted = mean_sir(True) > mean_sir(False)
    chosen = fits[permuted]
    metrics = SeparationMetrics(
        sir_db=(chosen[0][2], chosen[1][2]),
        permuted=permuted,
        scales=(chosen[0][0], chosen[1][0]),
        offsets=(chosen[0][1], chosen[1][1]),
    )
    logger.debug(f"Alignment: permuted={permuted}, SIR={metrics.sir_db[0]:.1f}/{metrics.sir_db[1]:.1f} dB")
    return metrics
