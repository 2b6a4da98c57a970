"""Time-series datasets: loading, standardization, lag embedding and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateSplit,
    EmptyResult,
    LagTooLarge,
    MissingColumn,
    NonFiniteValue,
    ParseError,
    TooFewRows,
    ValidationError,
    ZeroVariance,
)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeriesDataset:
    """T x D feature matrix and a length-T target, rows in time order."""

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...] = ()
    target_name: str = "Y"

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        target = np.asarray(self.target, dtype=float).ravel()
        if features.ndim != 2 or features.shape[1] < 1:
            raise ValidationError("features must be a T x D matrix with D >= 1")
        if features.shape[0] != target.shape[0]:
            raise ValidationError(
                f"features have {features.shape[0]} rows but target has {target.shape[0]}"
            )
        if target.shape[0] < 2:
            raise TooFewRows(f"need at least 2 time steps, got {target.shape[0]}")
        names = tuple(self.feature_names) or tuple(f"X{i}" for i in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise ValidationError("feature_names length does not match the number of features")
        bad = ~np.isfinite(features)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise NonFiniteValue(int(r), names[c])
        bad_t = ~np.isfinite(target)
        if bad_t.any():
            raise NonFiniteValue(int(np.argmax(bad_t)), self.target_name)
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "target", _frozen(target))
        object.__setattr__(self, "feature_names", names)

    @property
    def T(self) -> int:
        return self.target.shape[0]

    @property
    def D(self) -> int:
        return self.features.shape[1]

    def select_rows(self, start: int, stop: int) -> "TimeSeriesDataset":
        return TimeSeriesDataset(
            self.features[start:stop], self.target[start:stop], self.feature_names, self.target_name
        )


@dataclass(frozen=True)
class LagSpec:
    """Lag depths: ``L`` past values of each feature, ``M`` past values of the target."""

    L: int = 1
    M: int = 1

    def __post_init__(self):
        for name in ("L", "M"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValidationError(f"lag {name} must be a positive integer, got {v!r}")

    @property
    def max_lag(self) -> int:
        return max(self.L, self.M)


@dataclass(frozen=True)
class EmbeddedDesign:
    """Supervised rows ``(Y_t; Y_{t-1..t-M}; X_i^{t-1..t-L})``.

    ``times[r]`` is the time index of response row ``r``. Column ``j`` of
    ``target_lags`` holds ``Y_{t-1-j}``; column ``j`` of ``feature_lags[i]``
    holds ``X_i^{t-1-j}``.
    """

    response: np.ndarray
    target_lags: np.ndarray
    feature_lags: dict = field(default_factory=dict)
    times: np.ndarray = None

    @property
    def n(self) -> int:
        return self.response.shape[0]

    def features_block(self, indices: Iterable[int]) -> np.ndarray:
        """Horizontally stacked lag blocks of ``indices`` (sorted), shape (n, L*len)."""
        idx = sorted(indices)
        if not idx:
            return np.empty((self.n, 0))
        return np.hstack([self.feature_lags[i] for i in idx])


def load_csv(path, target_column: str) -> TimeSeriesDataset:
    """Read a headed, comma-separated file; ``target_column`` becomes the target.

    Remaining columns are features in header order. Missing or non-finite cells
    are rejected, never imputed.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TooFewRows(f"{path} is empty") from None
        if header.count(target_column) != 1:
            raise MissingColumn(
                f"target column {target_column!r} must appear exactly once in the header of {path}"
            )
        rows = []
        for r, rec in enumerate(reader):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(r, header[min(len(rec), len(header) - 1)], ",".join(rec))
            vals = []
            for c, cell in enumerate(rec):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(r, header[c], cell) from None
                if not math.isfinite(v):
                    raise NonFiniteValue(r, header[c])
                vals.append(v)
            rows.append(vals)
    if len(rows) < 2:
        raise TooFewRows(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.array(rows, dtype=float)
    t = header.index(target_column)
    if len(header) < 2:
        raise MissingColumn(f"{path}: no feature columns besides the target")
    feat_idx = [i for i in range(len(header)) if i != t]
    return TimeSeriesDataset(
        data[:, feat_idx], data[:, t], tuple(header[i] for i in feat_idx), target_column
    )


def save_csv(ds: TimeSeriesDataset, path) -> None:
    header = list(ds.feature_names) + [ds.target_name]
    table = np.column_stack([ds.features, ds.target])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in table:
            w.writerow([repr(float(v)) for v in row])


def _zscore(x: np.ndarray, name: str) -> np.ndarray:
    sd = x.std()
    # relative test: a column that is constant up to rounding has no usable variance
    if sd == 0 or sd <= 1e-14 * max(1.0, np.abs(x).max()):
        raise ZeroVariance(name)
    return (x - x.mean()) / sd


def standardize(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """Z-score every feature column and the target (population variance 1)."""
    feats = np.column_stack(
        [_zscore(ds.features[:, i], ds.feature_names[i]) for i in range(ds.D)]
    )
    return TimeSeriesDataset(feats, _zscore(ds.target, ds.target_name), ds.feature_names, ds.target_name)


def _lag_block(series: np.ndarray, depth: int, start: int) -> np.ndarray:
    T = series.shape[0]
    return np.column_stack([series[start - 1 - j: T - 1 - j] for j in range(depth)])


def embed(ds: TimeSeriesDataset, lags: LagSpec, subset: Iterable[int] | None = None) -> EmbeddedDesign:
    """Lag-embed ``ds``; the first ``max(L, M)`` time steps only serve as history.

    ``subset`` defaults to every feature.
    """
    subset = range(ds.D) if subset is None else subset
    subset = sorted(set(int(i) for i in subset))
    for i in subset:
        if not 0 <= i < ds.D:
            raise ValidationError(f"feature index {i} out of range for D={ds.D}")
    start = lags.max_lag
    if start >= ds.T:
        raise LagTooLarge(f"max(L, M) = {start} must be smaller than T = {ds.T}")
    n = ds.T - start
    if n <= 0:
        raise EmptyResult("embedding leaves no rows")
    feature_lags = {}
    for i in subset:
        block = _lag_block(ds.features[:, i], lags.L, start)
        block.setflags(write=False)
        feature_lags[i] = block
    return EmbeddedDesign(
        response=_frozen(ds.target[start:]),
        target_lags=_frozen(_lag_block(ds.target, lags.M, start)),
        feature_lags=feature_lags,
        times=np.arange(start, ds.T),
    )


def temporal_split(ds: TimeSeriesDataset, train_fraction: float) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    """Split into a time prefix (train) and the remaining suffix (test)."""
    if not 0.0 < train_fraction < 1.0:
        raise DegenerateSplit(f"train_fraction must lie in (0, 1), got {train_fraction}")
    cut = int(math.floor(train_fraction * ds.T))
    if cut < 2 or ds.T - cut < 2:
        raise DegenerateSplit(f"split of T={ds.T} at {cut} leaves a side with fewer than 2 rows")
    return ds.select_rows(0, cut), ds.select_rows(cut, ds.T)


def concat(parts: Sequence[TimeSeriesDataset]) -> TimeSeriesDataset:
    first = parts[0]
    return TimeSeriesDataset(
        np.vstack([p.features for p in parts]),
        np.concatenate([p.target for p in parts]),
        first.feature_names,
        first.target_name,
    )
