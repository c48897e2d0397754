"""
Reads and writes observation tables as CSV.

Required columns S, A, W, R, C, Y (header matched case-insensitively); optional
id, M and C_TRUE. An empty C cell marks an unobserved mediator. C_TRUE is only
written with keep_truth, for simulated data.

"""

import logging

import numpy as np
import pandas as pd

from src.errors import DataValidationError, SchemaError
from src.extractors.observation_table import ObservationTable

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ["S", "A", "W", "R", "C", "Y"]
MIN_STRATUM_ROWS = 10
WARN_STRATUM_ROWS = 50


def _column_values(frame, column, allow_missing=False):
    """Floats of `column` (NaN for empty cells when allowed); invalid cells raise with their line."""
    text = frame[column]
    values = pd.to_numeric(text.str.strip(), errors="coerce").to_numpy(dtype=float)
    invalid = ~np.isfinite(values)
    if allow_missing:
        invalid &= text.notna().to_numpy()
    if invalid.any():
        i = int(np.argmax(invalid))
        # header is line 1
        raise DataValidationError("column {} must be numeric, got {!r}".format(column, text.iloc[i]),
                                  line_number=i + 2)
    return values


def _binary(frame, column):
    values = _column_values(frame, column)
    invalid = ~np.isin(values, [0.0, 1.0])
    if invalid.any():
        i = int(np.argmax(invalid))
        raise DataValidationError("column {} must be 0 or 1, got {!r}".format(column, frame[column].iloc[i]),
                                  line_number=i + 2)
    return values.astype(np.int64)


def check_strata(table):
    counts = table.stratum_counts()
    for s in (0, 1):
        for w in (0, 1):
            count = counts.get((s, w), 0)
            if count < MIN_STRATUM_ROWS:
                raise DataValidationError("stratum S={}, W={} has {} rows; at least {} are required".format(
                    s, w, count, MIN_STRATUM_ROWS))
            if count < WARN_STRATUM_ROWS:
                logger.warning("Stratum S=%d, W=%d has only %d rows; estimates may be unstable", s, w, count)


def load_csv(path):
    logger.info("Processing %s", path)
    try:
        raw = pd.read_csv(path, header=0, dtype=str, keep_default_na=False, na_values=[""])
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SchemaError("cannot read {}: {}".format(path, e))

    by_name = {}
    for column in raw.columns:
        by_name.setdefault(column.strip().upper(), column)
    for name in REQUIRED_COLUMNS:
        if name not in by_name:
            raise SchemaError("missing required column: {}".format(name))
    frame = raw.rename(columns={original: name for name, original in by_name.items()})

    s, a, w, y = (_binary(frame, col) for col in ("S", "A", "W", "Y"))
    r = _column_values(frame, "R")
    c_obs = _column_values(frame, "C", allow_missing=True)
    if "M" in frame:
        m = _binary(frame, "M")
        conflict = (m == 1) & np.isnan(c_obs)
        if conflict.any():
            raise DataValidationError("M = 1 but C is empty", line_number=int(np.argmax(conflict)) + 2)
        c_obs = np.where(m == 1, c_obs, np.nan)
    else:
        m = (~np.isnan(c_obs)).astype(np.int64)
    c_true = _column_values(frame, "C_TRUE", allow_missing=True) if "C_TRUE" in frame else None
    ids = _column_values(frame, "ID").astype(np.int64) if "ID" in frame else None

    table = ObservationTable.from_arrays(s=s, a=a, w=w, r=r, c_obs=c_obs, y=y, c_true=c_true, m=m, ids=ids,
                                         metadata={"source": str(path)})
    check_strata(table)
    logger.info("Completed loading %d rows (%d with missing mediator)", len(table), int((m == 0).sum()))
    return table


def write_table_csv(table, path, keep_truth=False):
    frame = table.frame
    out = pd.DataFrame({
        "id": frame["id"],
        "S": frame["s"],
        "A": frame["a"],
        "W": frame["w"],
        "R": frame["r"],
        "C": frame["c_obs"],
        "Y": frame["y"],
    })
    if keep_truth:
        out["C_TRUE"] = frame["c_true"]
    out.to_csv(path, index=False)
    logger.info("Wrote %d rows to %s", len(out), path)
    return path
