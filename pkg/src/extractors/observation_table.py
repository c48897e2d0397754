"""
Container for one row per individual: environment S, treatment A, group W,
intermediate R, mediator proxy C (with its observation indicator M) and
outcome Y.

Tables are never modified in place; every transformation returns a new table.

"""

import numpy as np
import pandas as pd

from src.errors import DataValidationError

BINARY_COLUMNS = ["s", "a", "w", "m", "y"]
COLUMNS = ["id", "s", "a", "w", "r", "c_true", "c_obs", "m", "y"]


class ObservationTable:
    """
    Immutable wrapper around a pandas DataFrame with the columns in COLUMNS.

    `c_true` is only present for simulated data; when a row is unobserved
    (m = 0) its `c_obs` is NaN.
    """

    def __init__(self, frame, metadata=None):
        frame = frame.copy()
        if "c_true" not in frame.columns:
            frame["c_true"] = np.nan
        frame = frame[COLUMNS].reset_index(drop=True)
        for col in BINARY_COLUMNS + ["id"]:
            frame[col] = frame[col].astype(np.int64)
        for col in ["r", "c_true", "c_obs"]:
            frame[col] = frame[col].astype(np.float64)
        self._frame = frame
        self.metadata = dict(metadata or {})

    @classmethod
    def from_arrays(cls, s, a, w, r, c_obs, y, c_true=None, m=None, ids=None, metadata=None):
        n = len(s)
        c_obs = np.asarray(c_obs, dtype=float)
        if m is None:
            m = (~np.isnan(c_obs)).astype(np.int64)
        frame = pd.DataFrame({
            "id": np.arange(n) if ids is None else np.asarray(ids),
            "s": s,
            "a": a,
            "w": w,
            "r": r,
            "c_true": np.full(n, np.nan) if c_true is None else c_true,
            "c_obs": c_obs,
            "m": m,
            "y": y,
        })
        return cls(frame, metadata=metadata)

    def __len__(self):
        return len(self._frame)

    def __eq__(self, other):
        if not isinstance(other, ObservationTable):
            return NotImplemented
        return self._frame.equals(other._frame)

    @property
    def frame(self):
        return self._frame.copy()

    @property
    def has_truth(self):
        return bool(self._frame["c_true"].notna().all()) and len(self._frame) > 0

    def column(self, name):
        values = self._frame[name].to_numpy()
        values.setflags(write=False)
        return values

    @property
    def s(self):
        return self.column("s")

    @property
    def a(self):
        return self.column("a")

    @property
    def w(self):
        return self.column("w")

    @property
    def r(self):
        return self.column("r")

    @property
    def c_obs(self):
        return self.column("c_obs")

    @property
    def c_true(self):
        return self.column("c_true")

    @property
    def m(self):
        return self.column("m")

    @property
    def y(self):
        return self.column("y")

    def with_columns(self, metadata=None, **columns):
        frame = self._frame.copy()
        for name, values in columns.items():
            frame[name] = values
        merged = dict(self.metadata)
        merged.update(metadata or {})
        return ObservationTable(frame, metadata=merged)

    def take(self, indices, metadata=None):
        """Rows at `indices` (repeats allowed), renumbered positionally."""
        frame = self._frame.iloc[np.asarray(indices)].reset_index(drop=True)
        return ObservationTable(frame, metadata=metadata if metadata is not None else self.metadata)

    def revealed(self):
        """Copy with every mediator observed at its true value (simulation only)."""
        if not self.has_truth:
            raise DataValidationError("table carries no c_true column to reveal")
        return self.with_columns(c_obs=self._frame["c_true"].to_numpy(), m=1)

    def stratum_counts(self):
        return self._frame.groupby(["s", "w"]).size().to_dict()

    def validate(self):
        frame = self._frame
        for col in BINARY_COLUMNS:
            bad = ~frame[col].isin([0, 1])
            if bad.any():
                raise DataValidationError("column {} must be binary".format(col), line_number=int(bad.idxmax()) + 2)
        observed = frame["m"] == 1
        if frame.loc[observed, "c_obs"].isna().any() or frame.loc[~observed, "c_obs"].notna().any():
            raise DataValidationError("c_obs must be present exactly when m = 1")
        return self
