"""Persistence - signal files, reports, experiment configuration"""

from src.services.signal_files import read_signal_file, write_signal_file
from src.services.reports import (
    write_report, read_report, write_train_report, write_gradcheck_report,
)
from src.services.config_files import (
    load_experiment_config, build_experiment_config, apply_overrides,
)

__all__ = [
    'read_signal_file',
    'write_signal_file',
    'write_report',
    'read_report',
    'write_train_report',
    'write_gradcheck_report',
    'load_experiment_config',
    'build_experiment_config',
    'apply_overrides',
]
