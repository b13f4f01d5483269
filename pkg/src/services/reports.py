"""
Structured text reports
key=value lines, then CSV blocks each introduced by a [section] line
"""

import io
import logging
from pathlib import Path
from typing import Optional

import pandas as pd

from src.models import PARAM_NAMES, GradcheckSummary, TrainReport
from src.services.signal_files import FLOAT_FORMAT

logger = logging.getLogger(__name__)


def write_report(path, fields: dict, sections: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key}={value}" for key, value in fields.items()]
    for name, frame in (sections or {}).items():
        lines.append('')
        lines.append(f"[{name}]")
        lines.append(frame.to_csv(index=False, float_format=FLOAT_FORMAT).rstrip('\n'))
    path.write_text('\n'.join(lines) + '\n')
    logger.info(f"✓ Report written to {path}")
    return path


def read_report(path) -> tuple[dict, dict]:
    """Inverse of write_report: (fields as strings, sections as DataFrames)"""
    fields = {}
    sections = {}
    current = None
    buffer = []

    def flush():
        if current is not None and not buffer:
            sections[current] = pd.DataFrame()
        elif current is not None:
            sections[current] = pd.read_csv(io.StringIO('\n'.join(buffer)), float_precision='round_trip')

    for line in Path(path).read_text().splitlines():
        if line.startswith('[') and line.endswith(']'):
            flush()
            current, buffer = line[1:-1], []
        elif current is not None:
            if line:
                buffer.append(line)
        elif '=' in line:
            key, value = line.split('=', 1)
            fields[key] = value
    flush()
    return fields, sections


def train_report_fields(report: TrainReport) -> dict:
    fields = {
        'status': report.status.value,
        'epochs_run': report.epochs_run,
    }
    for name, value in zip(PARAM_NAMES, report.final_params.as_array()):
        fields[f'final.{name}'] = repr(float(value))
    if report.likelihood_trajectory:
        fields['final_likelihood'] = repr(report.likelihood_trajectory[-1])
        fields['final_gradient_norm'] = repr(report.gradient_norm_trajectory[-1])
    if report.metrics is not None:
        fields['sir_db.1'] = repr(report.metrics.sir_db[0])
        fields['sir_db.2'] = repr(report.metrics.sir_db[1])
        fields['permuted'] = report.metrics.permuted
    return fields


def trajectory_frame(report: TrainReport) -> pd.DataFrame:
    """One row per epoch: likelihood, gradient sup-norm, excluded count, parameters"""
    frame = pd.DataFrame({
        'epoch': range(1, report.epochs_run + 1),
        'likelihood': list(report.likelihood_trajectory),
        'gradient_norm': list(report.gradient_norm_trajectory),
        'excluded': list(report.excluded_trajectory),
    })
    for k, name in enumerate(PARAM_NAMES):
        frame[name] = [p.as_array()[k] for p in report.params_trajectory]
    return frame


def write_train_report(path, report: TrainReport, extra: Optional[dict] = None) -> Path:
    fields = {**train_report_fields(report), **(extra or {})}
    return write_report(path, fields, {'trajectory': trajectory_frame(report)})


def gradcheck_frame(summary: GradcheckSummary) -> pd.DataFrame:
    rows = []
    for case in summary.cases:
        rows.append({
            'case': case.index,
            **{name: value for name, value in zip(PARAM_NAMES, case.params.as_array())},
            'min_abs_j': case.min_abs_jacobian,
            'dsdw_err': case.dsdw_error,
            'djdw_err': case.djdw_error,
            'djdw_legacy_err': case.djdw_legacy_error,
            'grad_err': case.gradient_error,
            'grad_legacy_err': case.gradient_legacy_error,
            'legacy_expected': case.legacy_expected,
            'passed': case.passed,
            'error': case.error or '',
        })
    return pd.DataFrame(rows)


def write_gradcheck_report(path, summary: GradcheckSummary, extra: Optional[dict] = None) -> Path:
    worked = summary.worked_example
    fields = {
        'passed': summary.passed,
        'cases': len(summary.cases),
        'corrected_passed': summary.corrected_passed,
        'legacy_subset_size': summary.legacy_subset_size,
        'legacy_share': repr(summary.legacy_share),
        'legacy_demonstrated': summary.legacy_demonstrated,
        'legacy_waived': summary.legacy_waived,
        'worked.corrected_error': repr(worked.corrected.max_relative_error),
        'worked.legacy_error': repr(worked.legacy.max_relative_error),
        **(extra or {}),
    }
    return write_report(path, fields, {'cases': gradcheck_frame(summary)})
