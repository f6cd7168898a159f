"""Feature construction: target-history lags, rolling statistics, calendar
encodings, and min-max scaling.

Every feature at row t is a function of data strictly before t: lags are
>= 1, rolling windows end at t-1 (the current value is excluded), and the
scaler is fit on the training window only. Rows made invalid by lagging
or rolling carry NaN and are trimmed at dataset construction.
"""

from __future__ import annotations

import calendar
import datetime as dt
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, DataError


class LagTooLarge(DataError):
    """A lag order is >= the series length."""


class WindowTooLarge(DataError):
    """A rolling window is longer than the series."""


class DegenerateRange(UserWarning):
    """Scaler fitted on a constant series; outputs pinned to 0.5."""


CALENDAR_PARTS = ("hour", "day_of_month", "day_of_week", "month", "quarter", "week_of_year")


@dataclass(frozen=True)
class FeatureRecipe:
    """Which engineered features to build from a raw series."""

    lag_orders: tuple[int, ...] = (1, 2, 3, 4)
    rolling_windows: tuple[int, ...] = (4, 8)
    calendar_parts: tuple[str, ...] = ()

    def __post_init__(self):
        lags = tuple(int(o) for o in self.lag_orders)
        wins = tuple(int(w) for w in self.rolling_windows)
        parts = tuple(self.calendar_parts)
        if any(o < 1 for o in lags):
            raise ConfigError("lag orders must be >= 1")
        if any(w < 2 for w in wins):
            raise ConfigError("rolling windows must be >= 2")
        for p in parts:
            if p not in CALENDAR_PARTS:
                raise ConfigError(f"unknown calendar part {p!r}; choose from {CALENDAR_PARTS}")
        object.__setattr__(self, "lag_orders", lags)
        object.__setattr__(self, "rolling_windows", wins)
        object.__setattr__(self, "calendar_parts", parts)


def make_lags(y, orders) -> np.ndarray:
    """Column j holds y shifted forward by orders[j]; NaN where undefined."""
    y = np.asarray(y, dtype=np.float64)
    orders = [int(o) for o in orders]
    if any(o < 1 for o in orders):
        raise ConfigError("lag orders must be >= 1")
    if orders and max(orders) >= len(y):
        raise LagTooLarge(f"lag {max(orders)} with series of length {len(y)}")
    out = np.full((len(y), len(orders)), np.nan)
    for j, o in enumerate(orders):
        out[o:, j] = y[:-o]
    return out


def rolling_stats(y, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Trailing mean and population std over the window ending at t-1.

    The current value is excluded so the statistic never leaks the
    target being predicted. The first ``window`` rows are NaN.
    """
    y = np.asarray(y, dtype=np.float64)
    window = int(window)
    if window < 2:
        raise ConfigError("window must be >= 2")
    if window > len(y):
        raise WindowTooLarge(f"window {window} with series of length {len(y)}")
    n = len(y)
    means = np.full(n, np.nan)
    stds = np.full(n, np.nan)
    csum = np.concatenate(([0.0], np.cumsum(y)))
    csum2 = np.concatenate(([0.0], np.cumsum(y * y)))
    t = np.arange(window, n)
    s = csum[t] - csum[t - window]
    s2 = csum2[t] - csum2[t - window]
    means[t] = s / window
    var = s2 / window - (s / window) ** 2
    stds[t] = np.sqrt(np.maximum(var, 0.0))
    return means, stds


def _part_ordinal_and_period(ts: dt.datetime, part: str) -> tuple[int, int]:
    if part == "hour":
        return ts.hour, 24
    if part == "day_of_week":
        return ts.weekday(), 7
    if part == "month":
        return ts.month - 1, 12
    if part == "quarter":
        return (ts.month - 1) // 3, 4
    if part == "day_of_month":
        return ts.day - 1, calendar.monthrange(ts.year, ts.month)[1]
    if part == "week_of_year":
        iso = ts.isocalendar()
        weeks_in_year = dt.date(iso[0], 12, 28).isocalendar()[1]
        return iso[1] - 1, weeks_in_year
    raise ConfigError(f"unknown calendar part {part!r}")


def calendar_features(timestamps, parts) -> tuple[np.ndarray, list[str]]:
    """sin/cos pair per requested part, emitted in canonical part order.

    For a part with period P and zero-based ordinal v the columns are
    sin(2*pi*v/P) and cos(2*pi*v/P). day_of_month and week_of_year use
    the actual length of the containing month / ISO year.
    """
    parts = [p for p in CALENDAR_PARTS if p in set(parts)]
    ts_list = list(timestamps)
    out = np.empty((len(ts_list), 2 * len(parts)))
    names: list[str] = []
    for j, part in enumerate(parts):
        names.extend([f"{part}_sin", f"{part}_cos"])
        for i, ts in enumerate(ts_list):
            v, period = _part_ordinal_and_period(ts, part)
            angle = 2.0 * np.pi * v / period
            out[i, 2 * j] = np.sin(angle)
            out[i, 2 * j + 1] = np.cos(angle)
    return out, names


@dataclass(frozen=True)
class ScalerParams:
    min: float
    max: float

    def __post_init__(self):
        if not (np.isfinite(self.min) and np.isfinite(self.max)):
            raise DataError("scaler bounds must be finite")
        if self.max < self.min:
            raise DataError("scaler max must be >= min")


def minmax_fit(train) -> ScalerParams:
    """Fit min/max on the training window only; never on later data."""
    train = np.asarray(train, dtype=np.float64)
    if train.size == 0:
        raise DataError("cannot fit a scaler on an empty window")
    return ScalerParams(float(train.min()), float(train.max()))


def minmax_apply(params: ScalerParams, x) -> np.ndarray:
    """Map min -> 0 and max -> 1 linearly; values outside stay unclipped."""
    x = np.asarray(x, dtype=np.float64)
    span = params.max - params.min
    if span == 0.0:
        warnings.warn(
            DegenerateRange("scaler range is zero; returning 0.5 everywhere"),
            stacklevel=2,
        )
        return np.full_like(x, 0.5)
    return (x - params.min) / span


def minmax_invert(params: ScalerParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * (params.max - params.min) + params.min


def history_features(y, recipe: FeatureRecipe) -> tuple[np.ndarray, list[str]]:
    """Lag columns plus rolling mean/std per window, NaN-headed."""
    cols = [make_lags(y, recipe.lag_orders)]
    names = [f"lag_{o}" for o in recipe.lag_orders]
    for w in recipe.rolling_windows:
        means, stds = rolling_stats(y, w)
        cols.append(np.column_stack([means, stds]))
        names.extend([f"roll_mean_{w}", f"roll_std_{w}"])
    return np.column_stack(cols), names
