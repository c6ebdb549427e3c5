"""The strictly positive time-by-variable matrix all operations consume."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """T x p matrix of strictly positive reals; rows are time points.

    Immutable after construction; the underlying array is write-protected so
    instances are safe to share across threads.
    """

    values: np.ndarray
    labels: tuple[str, ...] | None = None
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise DataError(f"expected a 2-D matrix, got ndim={arr.ndim}")
        T, p = arr.shape
        if T < 2 or p < 2:
            raise DataError(f"matrix must be at least 2x2, got {T}x{p}")
        if not np.isfinite(arr).all():
            t, j = np.argwhere(~np.isfinite(arr))[0]
            raise DataError(f"non-finite entry at row {t + 1}, column {j + 1}")
        if (arr <= 0).any():
            t, j = np.argwhere(arr <= 0)[0]
            raise DataError(
                f"entry at row {t + 1}, column {j + 1} is {float(arr[t, j])}; "
                "all entries must be strictly positive (rescale first)"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != p:
                raise DataError(f"{len(labels)} column labels for {p} columns")
            object.__setattr__(self, "labels", labels)
        if self.timestamps is not None:
            ts = tuple(str(x) for x in self.timestamps)
            if len(ts) != T:
                raise DataError(f"{len(ts)} timestamps for {T} rows")
            object.__setattr__(self, "timestamps", ts)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def rows(self, start: int, stop: int) -> np.ndarray:
        """Data slice for 1-based inclusive time indices [start, stop]."""
        if not (1 <= start <= stop <= self.T):
            raise DataError(f"row range {start}:{stop} outside 1:{self.T}")
        return self.values[start - 1 : stop]


def ensure_matrix(Y) -> TimeSeriesMatrix:
    """Accept a TimeSeriesMatrix or anything arraylike and validate it."""
    if isinstance(Y, TimeSeriesMatrix):
        return Y
    return TimeSeriesMatrix(np.asarray(Y, dtype=np.float64))
