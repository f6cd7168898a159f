"""Shared domain types: datasets, feature groups, and chronological splits.

Everything here is immutable after construction and safe to share across
threads or worker processes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class StackcastError(Exception):
    """Base class for all package errors."""


class ConfigError(StackcastError):
    """Invalid configuration (bad value, unknown key, unusable combination)."""


class DataError(StackcastError):
    """Invalid or inconsistent input data."""


class OverlappingGroups(DataError):
    """Two feature groups share a column index."""


class OutOfRange(DataError):
    """A group references a column index outside the feature matrix."""


class EmptyGroup(DataError):
    """A feature group contains no columns."""


class DegenerateSplit(DataError):
    """A required split window would be empty."""


class LengthMismatch(DataError):
    """Two aligned sequences differ in length."""


class EmptyInput(DataError):
    """An operation received zero rows."""


def _as_float_array(values, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DataError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise DataError(f"{name} contains NaN or infinite values")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Aligned target sequence and feature matrix, optionally timestamped.

    ``y`` has length N, ``X`` is N x M, ``feature_names`` has length M.
    Rows are in chronological order. Values must be finite; builders that
    produce NaN head rows (lagging, rolling windows) should go through
    :func:`build_dataset`, which trims them first.
    """

    y: np.ndarray
    X: np.ndarray
    feature_names: tuple[str, ...]
    timestamps: tuple | None = None

    def __post_init__(self):
        y = _as_float_array(self.y, "y", 1)
        X = _as_float_array(self.X, "X", 2)
        if len(y) < 1:
            raise DataError("dataset needs at least one row")
        if X.shape[0] != len(y):
            raise LengthMismatch(f"X has {X.shape[0]} rows but y has {len(y)}")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != X.shape[1]:
            raise LengthMismatch(
                f"{len(names)} feature names for {X.shape[1]} columns"
            )
        ts = self.timestamps
        if ts is not None:
            ts = tuple(ts)
            if len(ts) != len(y):
                raise LengthMismatch("timestamps length differs from y")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "timestamps", ts)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def m(self) -> int:
        return self.X.shape[1]


def build_dataset(y, X, feature_names, timestamps=None) -> Dataset:
    """Construct a Dataset, trimming leading rows that contain NaN.

    Lag and rolling-window features are undefined for the first max-lag
    rows; those rows are dropped here (shrinking N) rather than imputed.
    NaN anywhere after the leading block is still an error.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise LengthMismatch("X rows must match y length")
    bad = ~np.isfinite(X).all(axis=1) | ~np.isfinite(y)
    start = 0
    while start < len(y) and bad[start]:
        start += 1
    if start == len(y):
        raise DataError("every row contains NaN after feature construction")
    ts = None if timestamps is None else tuple(timestamps)[start:]
    return Dataset(y[start:], X[start:], tuple(feature_names), ts)


@dataclass(frozen=True)
class FeatureGroups:
    """Ordered partition of feature columns into disjoint index groups.

    Group 0 is, by convention, the target-history group (lags of the
    target and statistics derived from them); later groups carry side
    information.
    """

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        norm = tuple(tuple(sorted(int(i) for i in g)) for g in self.groups)
        if len(norm) < 1:
            raise EmptyGroup("need at least one feature group")
        object.__setattr__(self, "groups", norm)

    @property
    def k(self) -> int:
        return len(self.groups)

    def columns(self, i: int) -> tuple[int, ...]:
        return self.groups[i]

    def all_columns(self) -> tuple[int, ...]:
        out: list[int] = []
        for g in self.groups:
            out.extend(g)
        return tuple(sorted(out))


def validate_groups(dataset: Dataset, groups: FeatureGroups) -> FeatureGroups:
    """Check group invariants against a dataset; returns groups unchanged.

    Raises OverlappingGroups, OutOfRange, or EmptyGroup. Columns of the
    dataset assigned to no group are legal but excluded from modeling;
    a warning lists them.
    """
    seen: set[int] = set()
    for gi, g in enumerate(groups.groups):
        if len(g) == 0:
            raise EmptyGroup(f"group {gi} has no columns")
        for col in g:
            if col < 0 or col >= dataset.m:
                raise OutOfRange(
                    f"group {gi} references column {col}, matrix has {dataset.m}"
                )
            if col in seen:
                raise OverlappingGroups(f"column {col} appears in two groups")
            seen.add(col)
    unassigned = sorted(set(range(dataset.m)) - seen)
    if unassigned:
        names = [dataset.feature_names[i] for i in unassigned]
        warnings.warn(
            f"columns not assigned to any group are excluded from modeling: {names}",
            UserWarning,
            stacklevel=2,
        )
    return groups


@dataclass(frozen=True)
class ChronoSplit:
    """Contiguous train / validation / test windows over [0, n).

    train is [0, train_end), validation [val_start, val_end), test
    [test_start, n). Validation may be empty; train and test may not.
    """

    train_end: int
    val_start: int
    val_end: int
    test_start: int
    n: int

    def __post_init__(self):
        ok = 0 < self.train_end <= self.val_start <= self.val_end <= self.test_start <= self.n
        if not ok:
            raise DegenerateSplit(
                f"split windows out of order: train_end={self.train_end} "
                f"val=[{self.val_start},{self.val_end}) test_start={self.test_start} n={self.n}"
            )
        if self.test_start >= self.n:
            raise DegenerateSplit("test window is empty")

    @property
    def train_slice(self) -> slice:
        return slice(0, self.train_end)

    @property
    def val_slice(self) -> slice:
        return slice(self.val_start, self.val_end)

    @property
    def test_slice(self) -> slice:
        return slice(self.test_start, self.n)

    @property
    def n_test(self) -> int:
        return self.n - self.test_start


def chronological_split(n: int, train_frac: float, val_frac: float = 0.0) -> ChronoSplit:
    """Split [0, n) into ordered train/val/test windows by fractions.

    Boundaries are rounded to the nearest index (half away from zero).
    Raises DegenerateSplit when train or test would be empty, or when
    val_frac > 0 but the validation window would be empty.
    """
    if not (0.0 < train_frac and 0.0 <= val_frac and train_frac + val_frac < 1.0):
        raise ConfigError(
            f"need 0 < train_frac, 0 <= val_frac, train_frac + val_frac < 1; "
            f"got {train_frac}, {val_frac}"
        )
    train_end = int(np.floor(n * train_frac + 0.5))
    val_end = int(np.floor(n * (train_frac + val_frac) + 0.5))
    if train_end < 1:
        raise DegenerateSplit("train window is empty")
    if val_frac > 0 and val_end <= train_end:
        raise DegenerateSplit("validation window is empty")
    if val_end >= n:
        raise DegenerateSplit("test window is empty")
    return ChronoSplit(train_end, train_end, val_end, val_end, n)


def split_with_test_size(n: int, test_size: int, val_size: int = 0) -> ChronoSplit:
    """Split with a fixed-size test window at the end (e.g. 48-step test)."""
    if test_size < 1:
        raise ConfigError("test_size must be >= 1")
    val_end = n - test_size
    train_end = val_end - val_size
    if train_end < 1:
        raise DegenerateSplit("train window is empty")
    return ChronoSplit(train_end, train_end, val_end, val_end, n)
