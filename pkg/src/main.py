"""
Entry point for the linear-quadratic separation toolkit
Parse arguments, setup logging and dispatch to a command
"""

import argparse
import logging
import sys
from typing import Optional

from src.commands import (
    EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL,
    cmd_generate, cmd_mix, cmd_separate, cmd_gradcheck, cmd_figures, cmd_stability,
)
from src.config import STABILITY_GRID_SIZE
from src.exceptions import ConfigError, DataFileError, InvalidParameterError, SeparationError
from src.models import ExperimentConfig
from src.services import apply_overrides, load_experiment_config
from src.utils import setup_logging


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='lq-separation',
        description='Blind separation of linear-quadratic mixtures by maximum likelihood',
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='experiment file of dotted key=value settings')
    common.add_argument('--seed', type=int, help='generator seed (overrides the config file)')
    common.add_argument('--out', help='output directory or file')

    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('generate', parents=[common], help='write i.i.d. source samples')

    mix = sub.add_parser('mix', parents=[common], help='mix a source file with the configured parameters')
    mix.add_argument('--input', required=True, help='source signal file')

    separate = sub.add_parser('separate', parents=[common], help='train on an observation file')
    separate.add_argument('--input', required=True, help='observation signal file')
    separate.add_argument('--truth', help='true source file, enables SIR metrics')
    separate.add_argument('--gradient', choices=['corrected', 'legacy'])
    separate.add_argument('--scores', choices=['analytic', 'kernel'])

    sub.add_parser('gradcheck', parents=[common], help='finite-difference check of every derivative')
    sub.add_parser('figures', parents=[common], help='scatter data for the direct-structure scenarios')

    stability = sub.add_parser('stability', parents=[common], help='recurrence stability over a source grid')
    stability.add_argument('--size', type=int, default=STABILITY_GRID_SIZE)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults < config file < command-line flags"""
    cfg = load_experiment_config(args.config) if args.config else ExperimentConfig()
    output_dir = args.out if args.command not in ('generate', 'mix') else None
    return apply_overrides(
        cfg,
        seed=args.seed,
        output_dir=output_dir,
        gradient=getattr(args, 'gradient', None),
        scores=getattr(args, 'scores', None),
    )


def dispatch(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    if args.command == 'generate':
        return cmd_generate(cfg, args.out)
    if args.command == 'mix':
        return cmd_mix(args.input, cfg.w_true, args.out)
    if args.command == 'separate':
        return cmd_separate(args.input, cfg, args.truth)
    if args.command == 'gradcheck':
        return cmd_gradcheck(cfg)
    if args.command == 'figures':
        return cmd_figures(cfg)
    return cmd_stability(cfg, size=args.size)


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors; --help exits with 0
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    setup_logging()
    logger = logging.getLogger(__name__)

    logger.info("=" * 70)
    logger.info(f"LINEAR-QUADRATIC SEPARATION: {args.command.upper()}")
    logger.info("=" * 70)

    try:
        cfg = load_config(args)
        result = dispatch(args, cfg)
    except (ConfigError, InvalidParameterError) as e:
        logger.error(f"✗ Configuration error: {e}")
        return EXIT_CONFIG
    except (DataFileError, OSError) as e:
        logger.error(f"✗ Data error: {e}")
        return EXIT_DATA
    except SeparationError as e:
        logger.error(f"✗ Numerical error: {e}")
        return EXIT_NUMERICAL
    except Exception as e:
        logger.error(f"\n✗ Unexpected Error: {e}", exc_info=True)
        return EXIT_NUMERICAL

    logger.info("=" * 70)
    if result['success']:
        logger.info(f"Status: ✓ SUCCESS ({args.command})")
    else:
        logger.error(f"Status: ✗ FAILED ({args.command}): {result.get('error', 'see report')}")
    logger.info("=" * 70)
    return result['exit_code']


if __name__ == '__main__':
    sys.exit(main())
