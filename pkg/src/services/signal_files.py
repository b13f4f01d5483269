"""Two-column signal CSV files (header ch1,ch2) read and written with pandas"""

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from src.exceptions import DataFileError
from src.models import SignalBatch

logger = logging.getLogger(__name__)

COLUMNS = ['ch1', 'ch2']

# 17 significant digits reproduce every double exactly
FLOAT_FORMAT = '%.17g'

_LINE_PATTERN = re.compile(r'line (\d+)')


def write_signal_file(path, samples) -> Path:
    """Write an (N, 2) array or SignalBatch; N may be 0 for an empty locus"""
    path = Path(path)
    values = samples.samples if isinstance(samples, SignalBatch) else np.asarray(samples, dtype=float)
    values = values.reshape(-1, 2)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(values, columns=COLUMNS).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"✓ Wrote {len(values)} rows to {path}")
    return path


def _first_bad_row(frame: pd.DataFrame) -> int:
    """1-based data row of the first missing or non-numeric cell"""
    bad = pd.Series(False, index=frame.index)
    for column in COLUMNS:
        bad |= pd.to_numeric(frame[column], errors='coerce').isna()
    return int(np.flatnonzero(bad.to_numpy())[0]) + 1


def read_signal_file(path) -> SignalBatch:
    """Read a signal file; malformed content raises DataFileError with the data row"""
    path = Path(path)
    if not path.exists():
        raise DataFileError(f"signal file not found: {path}")

    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except pd.errors.EmptyDataError:
        raise DataFileError(f"{path}: file is empty")
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        row = int(match.group(1)) - 1 if match else None
        raise DataFileError(f"{path}: malformed row {row}: {e}", row=row)

    if list(frame.columns) != COLUMNS:
        raise DataFileError(f"{path}: expected header {','.join(COLUMNS)}, got {','.join(map(str, frame.columns))}")
    if frame.empty:
        raise DataFileError(f"{path}: no data rows")

    numeric = all(pd.api.types.is_numeric_dtype(frame[c]) for c in COLUMNS)
    if not numeric or frame[COLUMNS].isna().any().any():
        row = _first_bad_row(frame)
        raise DataFileError(f"{path}: row {row} is not a pair of numbers", row=row)

    values = frame[COLUMNS].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        row = int(np.flatnonzero(~np.all(np.isfinite(values), axis=1))[0]) + 1
        raise DataFileError(f"{path}: row {row} is not finite", row=row)

    logger.debug(f"✓ Read {len(values)} rows from {path}")
    return SignalBatch(values)
