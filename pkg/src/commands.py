"""
Command implementations behind the CLI
Each returns a result dict with 'success' and 'exit_code'
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.config import FIGURE_SCENARIOS, FIGURE_LOCUS_POINTS, STABILITY_GRID_SIZE
from src.exceptions import DataFileError
from src.models import (
    DistributionKind, ExperimentConfig, JacobianSignClass, MixingParams, SignalBatch,
    SourceDistribution, TrainStatus,
)
from src.pipeline import TrainingPipeline, reconstruct
from src.separation.mixing import (
    classify_jacobian_sign, direct_inverse, jacobian_zero_locus, mix, source_bounds,
)
from src.separation.oracle import run_gradcheck_campaign
from src.separation.recurrent import stability_grid
from src.services import (
    read_signal_file, write_signal_file, write_train_report, write_gradcheck_report,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


def make_generator(seed: int) -> np.random.Generator:
    """Portable 64-bit PCG stream for a seed"""
    return np.random.Generator(np.random.PCG64(seed))


def sample_source(dist: SourceDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    if dist.kind is DistributionKind.GAUSSIAN:
        return rng.normal(dist.mean, dist.std, size=n)
    if dist.kind is DistributionKind.LAPLACE:
        return rng.laplace(dist.mean, dist.scale, size=n)
    return rng.uniform(dist.low, dist.high, size=n)


def source_range(dist: SourceDistribution) -> tuple[float, float]:
    """Interval covering practically all of a source's mass"""
    if dist.kind is DistributionKind.GAUSSIAN:
        return dist.mean - 3.0 * dist.std, dist.mean + 3.0 * dist.std
    if dist.kind is DistributionKind.LAPLACE:
        return dist.mean - 5.0 * dist.scale, dist.mean + 5.0 * dist.scale
    return dist.low, dist.high


def generate_sources(cfg: ExperimentConfig) -> SignalBatch:
    rng = make_generator(cfg.seed)
    first = sample_source(cfg.source1, cfg.n_samples, rng)
    second = sample_source(cfg.source2, cfg.n_samples, rng)
    return SignalBatch.from_columns(first, second)


# ============================================================================
# Commands
# ============================================================================

def cmd_generate(cfg: ExperimentConfig, out: Optional[Path] = None) -> dict:
    """Write N i.i.d. samples per channel from the configured laws"""
    path = Path(out) if out else cfg.output_dir / 'sources.csv'
    batch = generate_sources(cfg)
    write_signal_file(path, batch)
    logger.info(f"✓ Generated {len(batch)} source samples (seed {cfg.seed}) -> {path}")
    return {'success': True, 'exit_code': EXIT_OK, 'path': path, 'batch': batch}


def cmd_mix(sources_path, w: MixingParams, out: Optional[Path] = None) -> dict:
    """Mix a source file and report the Jacobian sign class over its bounding box"""
    sources = read_signal_file(sources_path)
    path = Path(out) if out else Path(sources_path).with_name('mixtures.csv')
    observations = SignalBatch(mix(w, sources.samples))
    write_signal_file(path, observations)

    s1_range, s2_range = source_bounds(sources)
    sign_class = classify_jacobian_sign(w, s1_range, s2_range)
    logger.info(f"✓ Mixed {len(sources)} samples with w={w} -> {path}")
    logger.info(f"  Jacobian sign class: {sign_class.value}")
    if sign_class is JacobianSignClass.MIXED_SIGN:
        logger.warning("✗ Jacobian changes sign over the sources: direct structures cannot separate this mixture")
    return {
        'success': True,
        'exit_code': EXIT_OK,
        'path': path,
        'batch': observations,
        'sign_class': sign_class,
    }


def cmd_separate(
    observations_path,
    cfg: ExperimentConfig,
    truth_path=None,
    out_dir: Optional[Path] = None,
) -> dict:
    """Train on an observation file; write the report and the separated outputs"""
    out_dir = Path(out_dir) if out_dir else cfg.output_dir
    observations = read_signal_file(observations_path)
    truth = read_signal_file(truth_path) if truth_path else None
    if truth is not None and len(truth) != len(observations):
        raise DataFileError(
            f"{truth_path}: {len(truth)} truth rows for {len(observations)} observations in {observations_path}"
        )

    result = TrainingPipeline(cfg.optimizer, cfg.recurrence).run(observations, truth)
    if 'report' not in result:
        return {'success': False, 'exit_code': EXIT_NUMERICAL, 'error': result.get('error')}

    report = result['report']
    extra = {
        'gradient_variant': cfg.optimizer.gradient_variant.value,
        'score_mode': cfg.optimizer.score_mode.value,
        'learning_rate': repr(cfg.optimizer.learning_rate),
        'n_samples': len(observations),
    }
    report_path = write_train_report(out_dir / 'separation_report.txt', report, extra)

    separated_path = None
    if report.status is not TrainStatus.DIVERGED:
        rec = reconstruct(report.final_params, observations, cfg.recurrence)
        separated_path = write_signal_file(out_dir / 'separated.csv', rec.sources)

    diverged = report.status is TrainStatus.DIVERGED
    return {
        'success': not diverged,
        'exit_code': EXIT_NUMERICAL if diverged else EXIT_OK,
        'report': report,
        'report_path': report_path,
        'separated_path': separated_path,
    }


def cmd_gradcheck(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> dict:
    """Finite-difference campaign over seeded random configurations"""
    out_dir = Path(out_dir) if out_dir else cfg.output_dir
    summary = run_gradcheck_campaign(cfg.gradcheck, cfg.seed)
    extra = {
        'seed': cfg.seed,
        'step': repr(cfg.gradcheck.step),
        'tolerance': repr(cfg.gradcheck.tolerance),
        'linear_only': cfg.gradcheck.linear_only,
    }
    report_path = write_gradcheck_report(out_dir / 'gradcheck_report.txt', summary, extra)

    mark = '✓' if summary.passed else '✗'
    logger.info(f"{mark} Gradcheck {'passed' if summary.passed else 'failed'} ({len(summary.cases)} cases)")
    return {
        'success': summary.passed,
        'exit_code': EXIT_OK if summary.passed else EXIT_NUMERICAL,
        'summary': summary,
        'report_path': report_path,
    }


def cmd_figures(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> dict:
    """Scatter data for sources, mixtures and both direct structures, per scenario

    Scenarios whose Jacobian changes sign also get the J=0 line in source
    space and its image in observation space.
    """
    out_dir = Path(out_dir) if out_dir else cfg.output_dir
    rng = make_generator(cfg.seed)
    w = cfg.w_true
    files = {}

    for name, half in FIGURE_SCENARIOS.items():
        sources = rng.uniform(-half, half, size=(cfg.n_samples, 2))
        mixtures = mix(w, sources)
        cands = direct_inverse(w, mixtures)
        sign_class = classify_jacobian_sign(w, (-half, half), (-half, half))

        written = {
            'sources': write_signal_file(out_dir / f'{name}_sources.csv', sources),
            'mixtures': write_signal_file(out_dir / f'{name}_mixtures.csv', mixtures),
            'structure1': write_signal_file(out_dir / f'{name}_structure1.csv', cands.root_plus),
            'structure2': write_signal_file(out_dir / f'{name}_structure2.csv', cands.root_minus),
        }
        if not sign_class.is_constant:
            locus = jacobian_zero_locus(w, (-half, half), (-half, half), FIGURE_LOCUS_POINTS)
            written['locus_sources'] = write_signal_file(out_dir / f'{name}_locus_sources.csv', locus)
            written['locus_mixtures'] = write_signal_file(out_dir / f'{name}_locus_mixtures.csv', mix(w, locus))
        files[name] = written
        logger.info(f"✓ Scenario '{name}' [-{half:g}, {half:g}]: {sign_class.value}, {len(written)} files")

    return {'success': True, 'exit_code': EXIT_OK, 'files': files}


def cmd_stability(cfg: ExperimentConfig, out_dir: Optional[Path] = None, size: int = STABILITY_GRID_SIZE) -> dict:
    """Local stability of the recurrent structure over a grid of source values"""
    out_dir = Path(out_dir) if out_dir else cfg.output_dir
    rows = stability_grid(cfg.w_true, source_range(cfg.source1), source_range(cfg.source2), size)
    frame = pd.DataFrame(rows, columns=['s1', 's2', 'magnitude_small', 'magnitude_large', 'stable'])
    frame['stable'] = frame['stable'].astype(bool)

    path = out_dir / 'stability.csv'
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.17g')

    stable = int(frame['stable'].sum())
    logger.info(f"✓ Stability grid {size}x{size} at w={cfg.w_true}: {stable}/{len(frame)} points stable -> {path}")
    for row in frame.itertuples():
        mark = '✓' if row.stable else '✗'
        logger.debug(f"  {mark} s=({row.s1:.3f}, {row.s2:.3f}) |lambda|=({row.magnitude_small:.4f}, {row.magnitude_large:.4f})")
    return {'success': True, 'exit_code': EXIT_OK, 'path': path, 'grid': frame}
